#include "sobolev/commands.hpp"
#include "sobolev/distill.hpp"
#include "sobolev/lists.hpp"
#include "sobolev/results.hpp"

#include <cstdio>

namespace sobolev::cli {

int cmd_distill(cfg::Options& opts, const std::string& config_path, const std::string& flag_out) {
    dist::DistillConfig base;
    base.state_dim = opts.get_int("d", base.state_dim);
    base.action_count = opts.get_int("actions", base.action_count);
    base.teacher_hidden = int_list(opts.get_string("teacher_hidden", "64,64"));
    base.teacher_temperature = opts.get_double("temperature", base.teacher_temperature);
    base.student_hidden = int_list(opts.get_string("hidden", "32,32"));
    base.alpha = opts.get_double("alpha", base.alpha);
    base.data_fraction = opts.get_double("fraction", base.data_fraction);
    base.num_projections = opts.get_int("num_projections", base.num_projections);
    base.steps = opts.get_int("steps", base.steps);
    base.lr = opts.get_double("lr", base.lr);
    base.norm = dist::mismatch_norm_from_string(opts.get_string("norm", "l2"));
    base.seed = opts.get_u64("seed", base.seed);
    base.train_pool = opts.get_int("train_pool", base.train_pool);
    base.test_size = opts.get_int("test_size", base.test_size);
    base.batch_size = opts.get_int("batch", base.batch_size);

    const int workers = opts.get_int("workers", 1);
    const std::string mode_one = opts.get_string("mode", "regular");

    dist::DistillSweepAxes axes;
    const std::string fracs = opts.get_string("fractions", "");
    axes.fractions =
        fracs.empty() ? std::vector<double>{base.data_fraction} : double_list(fracs);
    const std::string modes = opts.get_string("modes", "");
    if (modes.empty()) {
        axes.modes = {reg::mode_from_string(mode_one)};
    } else {
        for (const auto& name : split_list(modes)) axes.modes.push_back(reg::mode_from_string(name));
    }
    const std::string seeds = opts.get_string("seeds", "");
    axes.seeds = seeds.empty() ? std::vector<uint64_t>{base.seed} : u64_list(seeds);

    if (base.state_dim < 2) throw Error("d must be at least 2");
    if (base.action_count < 2) throw Error("actions must be at least 2");
    if (base.teacher_temperature <= 0) throw Error("temperature must be positive");
    if (base.alpha < 0) throw Error("alpha must be nonnegative");
    if (base.num_projections < 1) throw Error("num_projections must be positive");
    if (base.steps < 0) throw Error("steps must be nonnegative");
    if (base.lr <= 0) throw Error("lr must be positive");
    if (base.train_pool < 1) throw Error("train_pool must be positive");
    if (base.test_size < 1) throw Error("test_size must be positive");
    if (base.batch_size < 1) throw Error("batch must be positive");
    if (workers < 1) throw Error("workers must be positive");
    for (double f : axes.fractions)
        if (!(f > 0.0 && f <= 1.0)) throw Error("fraction must be in (0, 1]");
    for (int h : base.teacher_hidden)
        if (h < 1) throw Error("teacher_hidden layer sizes must be positive");
    for (int h : base.student_hidden)
        if (h < 1) throw Error("hidden layer sizes must be positive");

    opts.reject_unknown();
    RunScope scope("distill", opts, config_path, flag_out);

    res::ResultWriter writer(scope.out() / "results.csv", scope.out() / "results.jsonl",
                             res::distill_columns);

    const size_t total = axes.fractions.size() * axes.modes.size() * axes.seeds.size();
    bool numerical_failure = false;
    size_t done = 0;
    auto sink = [&](const dist::DistillResult& r) {
        writer.write(res::to_row(r));
        ++done;
        if (r.error.empty()) {
            std::printf("[%zu/%zu] %s fraction=%g seed=%llu kl_test=%.6g top1_err=%.4f (%.0f ms)\n",
                        done, total, reg::to_string(r.mode).c_str(), r.config.data_fraction,
                        static_cast<unsigned long long>(r.config.seed), r.kl_test, r.top1_err,
                        r.wall_ms);
        } else {
            numerical_failure = true;
            std::printf("[%zu/%zu] %s fraction=%g seed=%llu FAILED: %s\n", done, total,
                        reg::to_string(r.mode).c_str(), r.config.data_fraction,
                        static_cast<unsigned long long>(r.config.seed), r.error.c_str());
        }
        std::fflush(stdout);
    };

    dist::run_distill_sweep(base, axes, workers, sink);

    return scope.finish(numerical_failure ? 2 : 0);
}

}  // namespace sobolev::cli
