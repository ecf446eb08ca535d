#pragma once

#include "sobolev/regression.hpp"
#include "sobolev/sobolev_loss.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sobolev::dist {

using reg::Mode;

// How the per-state mismatch between projected log-policy gradients is
// reduced over the state dimension. l2 is the Euclidean norm smoothed as
// sqrt(x + 2^-40) - 2^-20 so it stays differentiable (and exactly zero) at a
// perfect match; l1 is the sum of absolute components.
enum class MismatchNorm { l2, l1 };

std::string to_string(MismatchNorm n);
MismatchNorm mismatch_norm_from_string(const std::string& s);

// A frozen stochastic policy over a finite action set: an MLP with a
// log-softmax head over d-dimensional states. Parameters never change after
// construction.
struct TeacherPolicy {
    nn::Mlp net;

    int state_dim() const { return net.spec.input_dim(); }
    int action_count() const { return net.spec.output_dim(); }
};

// Randomly initialised tanh policy whose logits are divided by `temperature`
// before the softmax: small temperatures sharpen it, T -> infinity tends to
// the uniform policy. Deterministic per seed.
TeacherPolicy make_synthetic_teacher(int state_dim, int action_count,
                                     const std::vector<int>& hidden, double temperature,
                                     uint64_t seed);

// Teacher log-probabilities for a state batch, (n x A).
Tensor teacher_log_probs(const TeacherPolicy& teacher, const Tensor& states);

// Per-state gradient of <log pi*(s), v> w.r.t. s for one projection v,
// (n x d). Enters the student's loss graph as a constant.
Tensor teacher_projected_grads(const TeacherPolicy& teacher, const Tensor& states,
                               const std::vector<double>& v);

struct DistillLossGraph {
    ad::NodeId loss;   // kl + alpha * deriv
    ad::NodeId kl;     // mean KL(student || teacher) over the batch
    ad::NodeId deriv;  // Monte Carlo mean mismatch norm (zero constant when alpha == 0)
    nn::MlpVars params;
};

// Mean KL(student || teacher) over the batch plus alpha times a Monte Carlo
// estimate of the mean mismatch norm between the state-gradients of the
// projected log-policies, one unit-sphere projection of the action index per
// draw, sampler.num_projections() draws. alpha == 0 skips the draws and is
// plain distillation. Differentiable w.r.t. the staged student parameters.
DistillLossGraph distill_loss(ad::Tape& t, const nn::Mlp& student, const TeacherPolicy& teacher,
                              const Tensor& states, double alpha, ProjectionSampler& sampler,
                              MismatchNorm norm = MismatchNorm::l2);

struct DistillConfig {
    int state_dim = 16;
    int action_count = 6;
    std::vector<int> teacher_hidden = {64, 64};
    double teacher_temperature = 0.5;
    std::vector<int> student_hidden = {32, 32};
    double alpha = 1.0;           // derivative weight in sobolev mode
    double data_fraction = 1.0;   // fraction of the train pool actually used, in (0, 1]
    int num_projections = 1;
    int steps = 4000;
    double lr = 1e-4;
    MismatchNorm norm = MismatchNorm::l2;
    uint64_t seed = 0;
    int train_pool = 2000;
    int test_size = 2000;
    int batch_size = 100;
};

struct DistillResult {
    DistillConfig config;
    Mode mode = Mode::regular;
    double train_loss = 0.0;  // final-step training loss
    double kl_test = 0.0;     // held-out mean KL(student || teacher)
    double top1_err = 0.0;    // held-out top-action disagreement rate
    double wall_ms = 0.0;
    std::string error;  // nonempty marks an aborted run; metrics are NaN then
};

// Held-out agreement between two policies on a state batch.
struct PolicyAgreement {
    double mean_kl = 0.0;
    double top1_err = 0.0;
};
PolicyAgreement compare_policies(const nn::Mlp& student, const TeacherPolicy& teacher,
                                 const Tensor& states);

// Trains a fresh student against a synthetic teacher on Gaussian states.
// One generation stream supplies first the train pool, then the test set;
// data_fraction keeps only the leading slice of the pool, so smaller
// fractions use strictly less (and nested) data. Adam throughout.
DistillResult run_distillation(const DistillConfig& cfg, Mode mode);

// Cartesian sweep over (fraction, mode, seed), streaming records in that
// axis order through the sink as in the regression sweep.
struct DistillSweepAxes {
    std::vector<double> fractions;
    std::vector<Mode> modes;
    std::vector<uint64_t> seeds;
};

using DistillSink = std::function<void(const DistillResult&)>;

std::vector<DistillResult> run_distill_sweep(const DistillConfig& base,
                                             const DistillSweepAxes& axes, int workers,
                                             const DistillSink& sink = nullptr);

}  // namespace sobolev::dist
