#include "sobolev/distill.hpp"

#include "sobolev/optimizer.hpp"
#include "sobolev/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace sobolev::dist {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
// Smoothing for the Euclidean mismatch norm: sqrt(x + kEps2) - kEps. Exactly
// zero at x == 0 (kEps2 is an even power of two, so the sqrt is exact) and
// differentiable there.
constexpr double kEps2 = 0x1.0p-40;
constexpr double kEps = 0x1.0p-20;

nn::MlpSpec policy_spec(int state_dim, int action_count, const std::vector<int>& hidden) {
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(state_dim);
    for (int h : hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(action_count);
    spec.activation = nn::Activation::tanh;
    spec.head = nn::Head::log_softmax;
    return spec;
}

Tensor column(const std::vector<double>& v) {
    Tensor c(int(v.size()), 1);
    for (size_t i = 0; i < v.size(); ++i) c.at(i) = v[i];
    return c;
}

// Per-state gradient of <log-probs, v> w.r.t. the staged input, read out as
// plain values.
Tensor projected_grads_at(ad::Tape& t, const nn::StagedForward& sf, const std::vector<double>& v) {
    const size_t mark = t.mark();
    const ad::NodeId vcol = t.constant(column(v));
    const ad::NodeId proj = t.matmul(sf.output, vcol);
    Tensor g = t.value(nn::input_gradient(t, proj, sf.input));
    t.rollback(mark);
    return g;
}

}  // namespace

std::string to_string(MismatchNorm n) {
    return n == MismatchNorm::l2 ? "l2" : "l1";
}

MismatchNorm mismatch_norm_from_string(const std::string& s) {
    if (s == "l2") return MismatchNorm::l2;
    if (s == "l1") return MismatchNorm::l1;
    throw Error("unknown mismatch norm '" + s + "' (expected l2 or l1)");
}

TeacherPolicy make_synthetic_teacher(int state_dim, int action_count,
                                     const std::vector<int>& hidden, double temperature,
                                     uint64_t seed) {
    if (state_dim < 2 || action_count < 2)
        throw Error("make_synthetic_teacher: need state_dim >= 2 and action_count >= 2");
    if (!(temperature > 0.0)) throw Error("make_synthetic_teacher: temperature must be > 0");
    TeacherPolicy teacher{nn::init_mlp(policy_spec(state_dim, action_count, hidden), seed)};
    // Dividing the logits by T is the same as scaling the last affine layer.
    Tensor& w = teacher.net.weights.back();
    Tensor& b = teacher.net.biases.back();
    for (size_t k = 0; k < w.size(); ++k) w.at(k) /= temperature;
    for (size_t k = 0; k < b.size(); ++k) b.at(k) /= temperature;
    return teacher;
}

Tensor teacher_log_probs(const TeacherPolicy& teacher, const Tensor& states) {
    ad::Tape t;
    return t.value(nn::forward_mlp(t, teacher.net, states).output);
}

Tensor teacher_projected_grads(const TeacherPolicy& teacher, const Tensor& states,
                               const std::vector<double>& v) {
    if (int(v.size()) != teacher.action_count())
        throw Error("teacher_projected_grads: projection dimension does not match action count");
    ad::Tape t;
    auto sf = nn::forward_mlp(t, teacher.net, states);
    return projected_grads_at(t, sf, v);
}

DistillLossGraph distill_loss(ad::Tape& t, const nn::Mlp& student, const TeacherPolicy& teacher,
                              const Tensor& states, double alpha, ProjectionSampler& sampler,
                              MismatchNorm norm) {
    const int n = states.rows();
    const int d = teacher.state_dim();
    const int A = teacher.action_count();
    if (n < 1) throw Error("distill_loss: empty state batch");
    if (states.cols() != d)
        throw Error("distill_loss: state dimension " + std::to_string(states.cols()) +
                    " does not match the teacher's " + std::to_string(d));
    if (student.spec.input_dim() != d || student.spec.output_dim() != A)
        throw Error("distill_loss: student shape (" + std::to_string(student.spec.input_dim()) +
                    " -> " + std::to_string(student.spec.output_dim()) +
                    ") does not match the teacher's (" + std::to_string(d) + " -> " +
                    std::to_string(A) + ")");
    if (student.spec.head != nn::Head::log_softmax)
        throw Error("distill_loss: student needs a log_softmax head");
    if (alpha < 0.0) throw Error("distill_loss: alpha must be >= 0");
    if (alpha > 0.0 && sampler.dim() != A)
        throw Error("distill_loss: sampler dimension " + std::to_string(sampler.dim()) +
                    " does not match action count " + std::to_string(A));

    DistillLossGraph lg;
    auto sf = nn::forward_mlp(t, student, states);
    lg.params = sf.params;
    const ad::NodeId ls = sf.output;  // student log-probs, n x A
    const ad::NodeId lt = t.constant(teacher_log_probs(teacher, states));

    // KL(student || teacher) per state: sum_a p_a * (log p_a - log q_a).
    const ad::NodeId kl_rows = t.rowsum(t.mul(t.exp(ls), t.sub(ls, lt)));
    lg.kl = t.scale(t.sum(kl_rows), 1.0 / double(n));

    if (alpha == 0.0) {
        lg.deriv = t.constant_scalar(0.0);
        lg.loss = lg.kl;
        return lg;
    }

    // The teacher side of every draw comes off one scratch staging.
    ad::Tape tt;
    auto tf = nn::forward_mlp(tt, teacher.net, states);

    const int draws = sampler.num_projections();
    ad::NodeId acc{};
    for (int k = 0; k < draws; ++k) {
        const std::vector<double> v = sampler.sample();
        const ad::NodeId vcol = t.constant(column(v));
        const ad::NodeId proj = t.matmul(ls, vcol);
        const ad::NodeId g = nn::input_gradient(t, proj, sf.input);
        const ad::NodeId gt = t.constant(projected_grads_at(tt, tf, v));
        const ad::NodeId diff = t.sub(g, gt);
        ad::NodeId per_state;  // n x 1
        if (norm == MismatchNorm::l2) {
            per_state = t.shift(t.sqrt(t.shift(t.rowsum(t.mul(diff, diff)), kEps2)), -kEps);
        } else {
            per_state = t.rowsum(t.abs(diff));
        }
        const ad::NodeId total = t.sum(per_state);
        acc = acc.valid() ? t.add(acc, total) : total;
    }
    lg.deriv = t.scale(acc, 1.0 / (double(n) * double(draws)));
    lg.loss = t.add(lg.kl, t.scale(lg.deriv, alpha));
    return lg;
}

PolicyAgreement compare_policies(const nn::Mlp& student, const TeacherPolicy& teacher,
                                 const Tensor& states) {
    const int n = states.rows();
    const int A = teacher.action_count();
    if (n < 1) throw Error("compare_policies: empty state batch");
    ad::Tape t;
    const Tensor ls = t.value(nn::forward_mlp(t, student, states).output);
    const Tensor lt = teacher_log_probs(teacher, states);

    PolicyAgreement out;
    int disagree = 0;
    for (int i = 0; i < n; ++i) {
        double kl = 0.0;
        int arg_s = 0, arg_t = 0;
        for (int a = 0; a < A; ++a) {
            kl += std::exp(ls(i, a)) * (ls(i, a) - lt(i, a));
            if (ls(i, a) > ls(i, arg_s)) arg_s = a;
            if (lt(i, a) > lt(i, arg_t)) arg_t = a;
        }
        out.mean_kl += kl;
        disagree += (arg_s != arg_t) ? 1 : 0;
    }
    out.mean_kl /= double(n);
    out.top1_err = double(disagree) / double(n);
    return out;
}

DistillResult run_distillation(const DistillConfig& cfg, Mode mode) {
    DistillResult rec;
    rec.config = cfg;
    rec.mode = mode;
    rec.train_loss = rec.kl_test = rec.top1_err = kNan;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (!(cfg.data_fraction > 0.0 && cfg.data_fraction <= 1.0))
            throw Error("run_distillation: data_fraction must be in (0, 1]");
        if (cfg.steps < 0) throw Error("run_distillation: steps must be >= 0");
        if (!(cfg.lr > 0.0)) throw Error("run_distillation: lr must be > 0");
        if (cfg.alpha < 0.0) throw Error("run_distillation: alpha must be >= 0");
        if (cfg.num_projections < 1) throw Error("run_distillation: num_projections must be >= 1");
        if (cfg.train_pool < 1 || cfg.test_size < 1)
            throw Error("run_distillation: train_pool and test_size must be >= 1");
        if (cfg.batch_size < 1) throw Error("run_distillation: batch_size must be >= 1");

        const TeacherPolicy teacher =
            make_synthetic_teacher(cfg.state_dim, cfg.action_count, cfg.teacher_hidden,
                                   cfg.teacher_temperature, derive_seed(cfg.seed, "teacher"));

        // One generation stream: train pool first, then the held-out set, so
        // the split is a fixed cut of a single sequence.
        Rng data_rng(derive_seed(cfg.seed, "data"));
        Tensor pool(cfg.train_pool, cfg.state_dim);
        for (size_t k = 0; k < pool.size(); ++k) pool.at(k) = data_rng.normal();
        Tensor test(cfg.test_size, cfg.state_dim);
        for (size_t k = 0; k < test.size(); ++k) test.at(k) = data_rng.normal();

        const int train_n = std::clamp<int>(int(std::llround(cfg.data_fraction * cfg.train_pool)),
                                            1, cfg.train_pool);
        Tensor train(train_n, cfg.state_dim);
        for (int i = 0; i < train_n; ++i)
            for (int j = 0; j < cfg.state_dim; ++j) train(i, j) = pool(i, j);

        nn::Mlp student = nn::init_mlp(policy_spec(cfg.state_dim, cfg.action_count,
                                                   cfg.student_hidden),
                                       derive_seed(cfg.seed, "init"));
        ProjectionSampler sampler(cfg.action_count, derive_seed(cfg.seed, "proj"),
                                  cfg.num_projections);
        Rng batch_rng(derive_seed(cfg.seed, "batch"));
        const double alpha = (mode == Mode::sobolev) ? cfg.alpha : 0.0;

        nn::OptimizerState opt;
        opt.kind = nn::OptKind::adam;
        opt.lr = cfg.lr;
        // Interleaved per layer, matching MlpVars::all().
        std::vector<Tensor*> param_ptrs;
        for (size_t l = 0; l < student.weights.size(); ++l) {
            param_ptrs.push_back(&student.weights[l]);
            param_ptrs.push_back(&student.biases[l]);
        }

        ad::Tape t;
        // The per-step loss check below catches divergence; the per-node
        // finite sweep would only slow the loop down.
        t.set_check_finite(false);
        const bool full_batch = train_n <= cfg.batch_size;
        Tensor batch(std::min(train_n, cfg.batch_size), cfg.state_dim);
        for (int step = 0; step < cfg.steps; ++step) {
            const Tensor* bx = &train;
            if (!full_batch) {
                for (int i = 0; i < batch.rows(); ++i) {
                    const int r = int(batch_rng.below(uint64_t(train_n)));
                    for (int j = 0; j < cfg.state_dim; ++j) batch(i, j) = train(r, j);
                }
                bx = &batch;
            }
            const size_t mark = t.mark();
            auto lg = distill_loss(t, student, teacher, *bx, alpha, sampler, cfg.norm);
            const double loss = t.value(lg.loss).at(0);
            if (!std::isfinite(loss))
                throw Error("training diverged: loss " + std::to_string(loss) + " at step " +
                            std::to_string(step));
            rec.train_loss = loss;
            const auto param_ids = lg.params.all();
            const auto grad_ids = ad::grad(t, lg.loss, param_ids);
            std::vector<Tensor> grads;
            grads.reserve(grad_ids.size());
            for (auto gid : grad_ids) grads.push_back(t.value(gid));
            optimizer_step(opt, param_ptrs, grads);
            t.rollback(mark);
        }

        const PolicyAgreement agree = compare_policies(student, teacher, test);
        rec.kl_test = agree.mean_kl;
        rec.top1_err = agree.top1_err;
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.train_loss = rec.kl_test = rec.top1_err = kNan;
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

std::vector<DistillResult> run_distill_sweep(const DistillConfig& base,
                                             const DistillSweepAxes& axes, int workers,
                                             const DistillSink& sink) {
    if (axes.fractions.empty() || axes.modes.empty() || axes.seeds.empty())
        throw Error("run_distill_sweep: every axis needs at least one entry");
    struct Task {
        DistillConfig cfg;
        Mode mode;
    };
    std::vector<Task> tasks;
    for (double f : axes.fractions)
        for (Mode m : axes.modes)
            for (uint64_t s : axes.seeds) {
                DistillConfig c = base;
                c.data_fraction = f;
                c.seed = s;
                tasks.push_back({c, m});
            }
    return ordered_parallel_for<DistillResult>(
        tasks.size(), workers,
        [&](size_t i) { return run_distillation(tasks[i].cfg, tasks[i].mode); },
        sink ? std::function<void(const DistillResult&)>([&](const DistillResult& r) { sink(r); })
             : nullptr);
}

}  // namespace sobolev::dist
