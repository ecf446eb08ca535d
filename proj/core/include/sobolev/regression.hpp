#pragma once

#include "sobolev/benchmarks.hpp"
#include "sobolev/sobolev_loss.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace sobolev::reg {

enum class Mode { regular, sobolev };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// A regression target decoupled from the benchmark enum so tests can inject
// synthetic fixtures. singular() marks points without a usable gradient;
// samplers redraw there. It may be null (differentiable everywhere).
struct Target {
    std::string name;
    bench::Domain domain;
    std::function<double(double, double)> eval;
    std::function<std::array<double, 2>(double, double)> grad;
    std::function<bool(double, double)> singular;
};

Target benchmark_target(bench::Fn f);

struct RegressionConfig {
    bench::Fn function = bench::Fn::styblinski_tang;
    Mode mode = Mode::regular;
    int train_size = 100;
    int steps = 50000;
    double lr = 3e-5;
    double derivative_weight = 1.0;
    uint64_t seed = 0;
    std::vector<int> hidden = {256, 256};
    nn::Activation activation = nn::Activation::relu;
    bool standardize_targets = false;
    int batch_size = 100;        // minibatch size once train_size exceeds the full-batch limit
    int full_batch_limit = 100;
    int test_size = 10000;
    int log_every = 5000;
};

// test_mse / test_grad_mse are only evaluated at step 0 and after the final
// step (full test passes are costly); other entries carry NaN there.
struct StepMetric {
    int step = 0;
    double train_loss = 0.0;
    double test_mse = 0.0;
    double test_grad_mse = 0.0;
};

struct ResultRecord {
    RegressionConfig config;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double test_grad_mse = 0.0;
    double wall_ms = 0.0;
    std::vector<StepMetric> step_log;
    std::string error;  // nonempty marks an aborted run; metrics are NaN then
    // Affine map from model outputs back to target units (identity unless
    // standardize_targets), needed to interpret surface dumps.
    double target_scale = 1.0;
    double target_offset = 0.0;
};

// The core training loop: Adam on a Sobolev loss over whatever batch the
// callback serves at each step. Throws on divergence (non-finite loss).
struct FitOptions {
    nn::MlpSpec net;
    uint64_t init_seed = 0;
    int steps = 1000;
    double lr = 3e-5;
    LossSpec loss;
    std::function<void(int step, double loss)> on_step;  // optional
};

nn::Mlp fit_on_batches(const FitOptions& opts,
                       const std::function<const SobolevBatch&(int step)>& batch_at);

// Uniform draws from the target's rectangle, redrawn off singular loci.
std::vector<std::array<double, 2>> sample_target(const Target& t, int n, Rng& rng);

ResultRecord run_regression(const RegressionConfig& cfg, const Target& target,
                            nn::Mlp* trained = nullptr);
ResultRecord run_regression(const RegressionConfig& cfg, nn::Mlp* trained = nullptr);

struct SweepAxes {
    std::vector<bench::Fn> functions;
    std::vector<int> sizes;
    std::vector<Mode> modes;
    std::vector<uint64_t> seeds;
};

// Cartesian product in (function, size, mode, seed) order. Individual run
// failures are recorded and the sweep continues. The sink receives records
// in axis order regardless of which worker finishes first.
using ResultSink = std::function<void(const ResultRecord&)>;

std::vector<ResultRecord> run_sweep(const RegressionConfig& base, const SweepAxes& axes,
                                    int workers, const ResultSink& sink = nullptr);

// Lattice dump comparing ground truth against the trained model:
// "x,y,f,fx,fy,model_f,model_fx,model_fy". Ground-truth gradient cells are
// empty at singular points. value_scale/offset map model outputs back to
// target units (see ResultRecord).
void dump_surface(const nn::Mlp& model, const Target& target, int nx, int ny, std::ostream& out,
                  double value_scale = 1.0, double value_offset = 0.0);

}  // namespace sobolev::reg
