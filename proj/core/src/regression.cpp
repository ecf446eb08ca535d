#include "sobolev/regression.hpp"

#include "sobolev/optimizer.hpp"
#include "sobolev/parallel.hpp"
#include "sobolev/tape.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace sobolev::reg {

std::string to_string(Mode m) { return m == Mode::regular ? "regular" : "sobolev"; }

Mode mode_from_string(const std::string& s) {
    if (s == "regular") return Mode::regular;
    if (s == "sobolev") return Mode::sobolev;
    throw Error("unknown mode '" + s + "'");
}

Target benchmark_target(bench::Fn f) {
    Target t;
    t.name = bench::to_string(f);
    t.domain = bench::domain(f);
    t.eval = [f](double x, double y) { return bench::eval_benchmark(f, x, y); };
    t.grad = [f](double x, double y) { return bench::grad_benchmark(f, x, y); };
    t.singular = [f](double x, double y) { return bench::near_singular(f, x, y); };
    return t;
}

std::vector<std::array<double, 2>> sample_target(const Target& t, int n, Rng& rng) {
    if (n <= 0) throw Error("sample_target: n must be positive");
    std::vector<std::array<double, 2>> pts;
    pts.reserve(n);
    while (int(pts.size()) < n) {
        const double x = rng.uniform(t.domain.xlo, t.domain.xhi);
        const double y = rng.uniform(t.domain.ylo, t.domain.yhi);
        if (t.singular && t.singular(x, y)) continue;
        pts.push_back({x, y});
    }
    return pts;
}

nn::Mlp fit_on_batches(const FitOptions& opts,
                       const std::function<const SobolevBatch&(int step)>& batch_at) {
    nn::Mlp model = nn::init_mlp(opts.net, opts.init_seed);
    nn::OptimizerState opt;
    opt.kind = nn::OptKind::adam;
    opt.lr = opts.lr;

    std::vector<Tensor*> params;
    for (size_t l = 0; l < model.weights.size(); ++l) {
        params.push_back(&model.weights[l]);
        params.push_back(&model.biases[l]);
    }

    ad::Tape t;
    // The per-node finite check is a full extra memory pass; the per-step
    // loss check below catches divergence just as well.
    t.set_check_finite(false);
    std::vector<Tensor> grads;
    for (int step = 0; step < opts.steps; ++step) {
        const size_t mark = t.mark();
        LossGraph lg = sobolev_loss(t, model, batch_at(step), opts.loss);
        const double lv = t.value(lg.loss).at(0);
        if (!std::isfinite(lv)) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "training diverged: loss %g at step %d", lv, step);
            throw Error(buf);
        }
        auto gids = ad::grad(t, lg.loss, lg.params.all());
        grads.clear();
        for (ad::NodeId g : gids) grads.push_back(t.value(g));
        nn::optimizer_step(opt, params, grads);
        if (opts.on_step) opts.on_step(step, lv);
        t.rollback(mark);
    }
    return model;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct LabeledSet {
    Tensor inputs;   // n x 2
    Tensor targets;  // n x 1
    Tensor grads;    // n x 2
};

LabeledSet make_set(const Target& target, int n, Rng& rng) {
    const auto pts = sample_target(target, n, rng);
    LabeledSet s{Tensor(n, 2), Tensor(n, 1), Tensor(n, 2)};
    for (int i = 0; i < n; ++i) {
        const auto [x, y] = pts[i];
        s.inputs(i, 0) = x;
        s.inputs(i, 1) = y;
        s.targets(i, 0) = target.eval(x, y);
        const auto g = target.grad(x, y);
        s.grads(i, 0) = g[0];
        s.grads(i, 1) = g[1];
    }
    return s;
}

struct EvalMetrics {
    double value_mse = 0.0;
    double grad_mse = 0.0;
};

// Model-vs-truth errors in target units; scale/offset undo standardisation.
EvalMetrics evaluate_model(const nn::Mlp& model, const LabeledSet& set, double scale,
                           double offset) {
    const int n = set.inputs.rows();
    const int chunk = 1000;
    double v_acc = 0.0, g_acc = 0.0;
    ad::Tape t;
    t.set_check_finite(false);
    for (int lo = 0; lo < n; lo += chunk) {
        const int m = std::min(chunk, n - lo);
        Tensor x(m, 2);
        for (int i = 0; i < m; ++i) {
            x(i, 0) = set.inputs(lo + i, 0);
            x(i, 1) = set.inputs(lo + i, 1);
        }
        const size_t mark = t.mark();
        auto sf = nn::forward_mlp(t, model, x);
        const Tensor& out = t.value(sf.output);
        const Tensor& g = t.value(nn::input_gradient(t, sf.output, sf.input));
        for (int i = 0; i < m; ++i) {
            const double dv = out(i, 0) * scale + offset - set.targets(lo + i, 0);
            v_acc += dv * dv;
            const double dgx = g(i, 0) * scale - set.grads(lo + i, 0);
            const double dgy = g(i, 1) * scale - set.grads(lo + i, 1);
            g_acc += dgx * dgx + dgy * dgy;
        }
        t.rollback(mark);
    }
    return {v_acc / n, g_acc / n};
}

LossSpec loss_for_mode(const RegressionConfig& cfg) {
    LossSpec ls;
    ls.value_loss = PointLoss::l2;
    if (cfg.mode == Mode::sobolev) {
        ls.derivative_losses = {PointLoss::l2};
        ls.derivative_weight = cfg.derivative_weight;
    }
    return ls;
}

nn::MlpSpec net_for(const RegressionConfig& cfg) {
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(2);
    for (int h : cfg.hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(1);
    spec.activation = cfg.activation;
    spec.head = nn::Head::linear;
    return spec;
}

}  // namespace

ResultRecord run_regression(const RegressionConfig& cfg, const Target& target, nn::Mlp* trained) {
    ResultRecord rec;
    rec.config = cfg;
    rec.train_mse = rec.test_mse = rec.test_grad_mse = kNan;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (cfg.train_size < 1) throw Error("run_regression: train_size must be positive");
        if (cfg.steps < 0) throw Error("run_regression: steps must be nonnegative");

        Rng data_rng(derive_seed(cfg.seed, "train-data", 0));
        LabeledSet train = make_set(target, cfg.train_size, data_rng);
        Rng test_rng(derive_seed(cfg.seed, "test-data", 0));
        LabeledSet test = make_set(target, cfg.test_size, test_rng);

        // Optional train-set affine standardisation of targets, applied to
        // values and (by the chain rule) gradients alike. Training data is
        // transformed; `train` itself stays in original units for metrics.
        SobolevBatch full;
        full.inputs = train.inputs;
        full.targets = train.targets;
        full.target_grads = train.grads;
        double scale = 1.0, offset = 0.0;
        if (cfg.standardize_targets) {
            double mean = 0.0;
            for (int i = 0; i < cfg.train_size; ++i) mean += train.targets(i, 0);
            mean /= cfg.train_size;
            double var = 0.0;
            for (int i = 0; i < cfg.train_size; ++i) {
                const double d = train.targets(i, 0) - mean;
                var += d * d;
            }
            var /= cfg.train_size;
            scale = std::max(std::sqrt(var), 1e-12);
            offset = mean;
            for (int i = 0; i < cfg.train_size; ++i) {
                full.targets(i, 0) = (train.targets(i, 0) - offset) / scale;
                (*full.target_grads)(i, 0) = train.grads(i, 0) / scale;
                (*full.target_grads)(i, 1) = train.grads(i, 1) / scale;
            }
        }
        rec.target_scale = scale;
        rec.target_offset = offset;

        const bool minibatch = cfg.train_size > cfg.full_batch_limit;
        Rng batch_rng(derive_seed(cfg.seed, "batch", 0));
        SobolevBatch mini;
        auto batch_at = [&](int) -> const SobolevBatch& {
            if (!minibatch) return full;
            const int m = cfg.batch_size;
            mini.inputs = Tensor(m, 2);
            mini.targets = Tensor(m, 1);
            Tensor g(m, 2);
            for (int i = 0; i < m; ++i) {
                const size_t j = size_t(batch_rng.below(uint64_t(cfg.train_size)));
                mini.inputs(i, 0) = full.inputs(int(j), 0);
                mini.inputs(i, 1) = full.inputs(int(j), 1);
                mini.targets(i, 0) = full.targets(int(j), 0);
                g(i, 0) = (*full.target_grads)(int(j), 0);
                g(i, 1) = (*full.target_grads)(int(j), 1);
            }
            mini.target_grads = std::move(g);
            return mini;
        };

        FitOptions fo;
        fo.net = net_for(cfg);
        fo.init_seed = derive_seed(cfg.seed, "init", 0);
        fo.steps = cfg.steps;
        fo.lr = cfg.lr;
        fo.loss = loss_for_mode(cfg);

        {
            nn::Mlp at_init = nn::init_mlp(fo.net, fo.init_seed);
            const EvalMetrics m0 = evaluate_model(at_init, test, scale, offset);
            rec.step_log.push_back({0, kNan, m0.value_mse, m0.grad_mse});
        }

        fo.on_step = [&](int step, double loss) {
            if (cfg.log_every > 0 && (step + 1) % cfg.log_every == 0)
                rec.step_log.push_back({step + 1, loss, kNan, kNan});
        };

        nn::Mlp model = fit_on_batches(fo, batch_at);

        const EvalMetrics train_m = evaluate_model(model, train, scale, offset);
        rec.train_mse = train_m.value_mse;
        const EvalMetrics test_m = evaluate_model(model, test, scale, offset);
        rec.test_mse = test_m.value_mse;
        rec.test_grad_mse = test_m.grad_mse;
        rec.step_log.push_back({cfg.steps, kNan, rec.test_mse, rec.test_grad_mse});
        if (trained) *trained = std::move(model);
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.train_mse = rec.test_mse = rec.test_grad_mse = kNan;
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

ResultRecord run_regression(const RegressionConfig& cfg, nn::Mlp* trained) {
    return run_regression(cfg, benchmark_target(cfg.function), trained);
}

std::vector<ResultRecord> run_sweep(const RegressionConfig& base, const SweepAxes& axes,
                                    int workers, const ResultSink& sink) {
    if (axes.functions.empty() || axes.sizes.empty() || axes.modes.empty() || axes.seeds.empty())
        throw Error("run_sweep: every axis needs at least one entry");

    std::vector<RegressionConfig> tasks;
    for (bench::Fn f : axes.functions)
        for (int n : axes.sizes)
            for (Mode m : axes.modes)
                for (uint64_t s : axes.seeds) {
                    RegressionConfig c = base;
                    c.function = f;
                    c.train_size = n;
                    c.mode = m;
                    c.seed = s;
                    tasks.push_back(c);
                }

    return ordered_parallel_for<ResultRecord>(
        tasks.size(), workers, [&](size_t i) { return run_regression(tasks[i]); },
        sink ? std::function<void(const ResultRecord&)>(
                   [&](const ResultRecord& r) { sink(r); })
             : nullptr);
}

void dump_surface(const nn::Mlp& model, const Target& target, int nx, int ny, std::ostream& out,
                  double value_scale, double value_offset) {
    if (nx < 2 || ny < 2) throw Error("dump_surface: need at least a 2x2 lattice");
    out << "x,y,f,fx,fy,model_f,model_fx,model_fy\n";
    char buf[320];
    ad::Tape t;
    t.set_check_finite(false);
    for (int j = 0; j < ny; ++j) {
        const double y = target.domain.ylo + (target.domain.yhi - target.domain.ylo) * double(j) / double(ny - 1);
        for (int i = 0; i < nx; ++i) {
            const double x = target.domain.xlo + (target.domain.xhi - target.domain.xlo) * double(i) / double(nx - 1);
            const size_t mark = t.mark();
            Tensor xin(1, 2);
            xin(0, 0) = x;
            xin(0, 1) = y;
            auto sf = nn::forward_mlp(t, model, xin);
            const double mf = t.value(sf.output).at(0) * value_scale + value_offset;
            const Tensor& mg = t.value(nn::input_gradient(t, sf.output, sf.input));
            const double mfx = mg(0, 0) * value_scale;
            const double mfy = mg(0, 1) * value_scale;
            t.rollback(mark);

            const double f = target.eval(x, y);
            if (target.singular && target.singular(x, y)) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,,,%.17g,%.17g,%.17g\n", x, y, f,
                              mf, mfx, mfy);
            } else {
                const auto g = target.grad(x, y);
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              x, y, f, g[0], g[1], mf, mfx, mfy);
            }
            out << buf;
        }
    }
}

}  // namespace sobolev::reg
