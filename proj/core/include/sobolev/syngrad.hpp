#pragma once

#include "sobolev/mlp.hpp"
#include "sobolev/optimizer.hpp"
#include "sobolev/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace sobolev::sg {

// How upstream parts of a split network obtain their training signal.
// backprop is the undecoupled baseline; the other four follow the usual
// decoupled-training menu: inject nothing, predict the gradient directly,
// differentiate a trained loss model (critic), or train that loss model on
// values and true gradients both (sobolev).
enum class Variant { noprop, direct_sg, critic, sobolev, backprop };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

// Gradient conventions: every gradient in this module (true supervision
// targets, module predictions, injected values) is the gradient of the MEAN
// cross-entropy over the current batch w.r.t. a boundary activation, shaped
// (n x dim). The injection surrogate sum(h * SG) then reproduces full
// backpropagation exactly when SG carries the true values.

struct SgDataset {
    Tensor inputs;            // n x dim
    std::vector<int> labels;  // values in [0, classes)
};

// Interleaved spiral arms (one per class) in the first two coordinates, unit
// Gaussian noise in the remaining dim-2; `noise` jitters the arms themselves.
// One stream per seed: callers split train/test as leading/trailing rows.
SgDataset make_spiral_dataset(int n, int dim, int classes, double noise, uint64_t seed);

// A feedforward classifier (log_softmax head) cut at explicit weight-layer
// boundaries. splits holds ascending indices s in [1, layers-1]: a split at
// s exposes the activated output of weight layer s-1. Composing the parts
// reproduces the undecoupled forward pass bit-exactly.
struct SplitNetwork {
    nn::Mlp mlp;
    std::vector<int> splits;

    int weight_layers() const { return int(mlp.weights.size()); }
    int parts() const { return int(splits.size()) + 1; }
    // Weight-layer range [from, to) of part p.
    std::pair<int, int> part_range(int p) const;
    // Activation width exposed at boundary b (between part b and part b+1).
    int boundary_dim(int b) const { return mlp.spec.layer_sizes[size_t(splits[size_t(b)])]; }
    int classes() const { return mlp.spec.output_dim(); }
};

SplitNetwork make_split_network(const std::vector<int>& layer_sizes, nn::Activation activation,
                                std::vector<int> splits, uint64_t seed);

// Forward of one part from its input activation node over staged parameters,
// emitting the same op sequence as the undecoupled forward (the final part
// applies the head). Chaining all parts in order reproduces forward_mlp
// bit-exactly.
ad::NodeId forward_part(ad::Tape& t, const SplitNetwork& net, const nn::MlpVars& vars, int part,
                        ad::NodeId h);

// A synthetic-gradient module at one boundary. critic and sobolev wrap an
// internal loss model: a classifier p(h|theta) over (h, one-hot y) whose
// per-sample cross-entropy m is differentiated to emit the gradient.
// direct_sg predicts the gradient directly with a linear head and has no
// loss model.
struct SgModule {
    Variant variant = Variant::critic;
    nn::Mlp net;
};

SgModule make_sg_module(Variant variant, int h_dim, int classes, const std::vector<int>& hidden,
                        uint64_t seed);

Tensor one_hot(const std::vector<int>& labels, int classes);

// Module forward at a boundary activation node. m is the per-sample
// predicted loss (n x 1; invalid for direct_sg), sg the emitted gradient
// (n x h_dim), differentiable w.r.t. the staged module parameters.
struct SgEval {
    nn::MlpVars params;
    ad::NodeId m;
    ad::NodeId sg;
};

SgEval eval_sg_module(ad::Tape& t, const SgModule& mod, ad::NodeId h, const Tensor& y_onehot);

// The module training objective. direct_sg: L1(sg, true_grad). critic:
// L1(m, true_loss), gradients ignored. sobolev: both terms. All terms are
// per-sample sums of absolute differences averaged over the batch; noprop
// trains no module and is an error. Unused arguments may be invalid node
// ids; used ones must be valid.
ad::NodeId sg_losses(ad::Tape& t, Variant variant, ad::NodeId m, ad::NodeId sg,
                     ad::NodeId true_loss, ad::NodeId true_grad);

struct StepOutcome {
    double task_loss = 0.0;             // mean cross-entropy on the batch
    std::vector<double> module_losses;  // one per boundary; empty for noprop/backprop
};

// One synchronous decoupled update: every part's forward runs on detached
// boundary inputs; upstream parts step on the injected synthetic gradients,
// the final part on the true task gradient (main optimizer first), then each
// SG module steps on its own objective. noprop injects zero upstream and
// must be called with no modules; backprop delegates to backprop_step.
StepOutcome decoupled_step(ad::Tape& t, SplitNetwork& net, std::vector<SgModule>& modules,
                           Variant variant, const Tensor& x, const std::vector<int>& labels,
                           nn::OptimizerState& main_opt,
                           std::vector<nn::OptimizerState>& module_opts);

// Decoupled update with the synthetic gradients wired to the true mean-loss
// gradients at every boundary (a perfect loss model). Parameter updates
// equal backprop_step bit-exactly.
double oracle_step(ad::Tape& t, SplitNetwork& net, const Tensor& x,
                   const std::vector<int>& labels, nn::OptimizerState& main_opt);

// Undecoupled baseline: one optimizer step on the mean cross-entropy.
double backprop_step(ad::Tape& t, nn::Mlp& mlp, const Tensor& x, const std::vector<int>& labels,
                     nn::OptimizerState& opt);

// Top-1 accuracy of the composed network.
double accuracy(const nn::Mlp& mlp, const Tensor& x, const std::vector<int>& labels);

struct SgConfig {
    std::vector<int> layer_sizes = {20, 64, 64, 64, 8};
    nn::Activation activation = nn::Activation::relu;
    std::vector<int> splits = {2};
    Variant variant = Variant::sobolev;
    std::vector<int> sg_hidden = {64, 64};
    int steps = 4000;
    double main_lr = 1e-3;
    double sg_lr = 1e-4;
    int train_size = 4096;
    int test_size = 2048;
    int batch_size = 128;
    double noise = 0.05;
    uint64_t seed = 0;
};

struct SgResult {
    SgConfig config;
    double test_acc = 0.0;
    double train_loss = 0.0;  // final-step mean cross-entropy
    double wall_ms = 0.0;
    std::string error;  // nonempty marks an aborted run; metrics are NaN then
};

SgResult run_sg_experiment(const SgConfig& cfg);

struct SgSweepAxes {
    std::vector<Variant> variants;
    std::vector<uint64_t> seeds;
};

using SgSink = std::function<void(const SgResult&)>;

// Cartesian sweep in (variant, seed) order; records stream through the sink
// in axis order as in the regression sweep.
std::vector<SgResult> run_sg_sweep(const SgConfig& base, const SgSweepAxes& axes, int workers,
                                   const SgSink& sink = nullptr);

}  // namespace sobolev::sg
