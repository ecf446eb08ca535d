#include "sobolev/commands.hpp"
#include "sobolev/lists.hpp"
#include "sobolev/regression.hpp"
#include "sobolev/results.hpp"

#include <cstdio>
#include <fstream>

namespace sobolev::cli {

int cmd_regress(cfg::Options& opts, const std::string& config_path, const std::string& flag_out) {
    reg::RegressionConfig base;
    base.function = bench::fn_from_string(opts.get_string("function", "styblinski_tang"));
    base.mode = reg::mode_from_string(opts.get_string("mode", "regular"));
    base.train_size = opts.get_int("n", base.train_size);
    base.seed = opts.get_u64("seed", base.seed);
    base.steps = opts.get_int("steps", base.steps);
    base.lr = opts.get_double("lr", base.lr);
    base.derivative_weight = opts.get_double("alpha", base.derivative_weight);
    base.activation = nn::activation_from_string(opts.get_string("activation", "relu"));
    base.standardize_targets = opts.get_bool("standardize", base.standardize_targets);
    base.batch_size = opts.get_int("batch", base.batch_size);
    base.full_batch_limit = base.batch_size;
    base.test_size = opts.get_int("test_size", base.test_size);
    base.log_every = opts.get_int("log_every", base.log_every);
    base.hidden = int_list(opts.get_string("hidden", "256,256"));

    const int workers = opts.get_int("workers", 1);
    const bool want_surface = opts.get_bool("dump_surface", false);
    const int grid = opts.get_int("grid", 50);

    reg::SweepAxes axes;
    const std::string fns = opts.get_string("functions", "");
    if (fns == "all") {
        axes.functions.assign(bench::all_fns.begin(), bench::all_fns.end());
    } else if (!fns.empty()) {
        for (const auto& name : split_list(fns)) axes.functions.push_back(bench::fn_from_string(name));
    } else {
        axes.functions = {base.function};
    }
    const std::string sizes = opts.get_string("sizes", "");
    axes.sizes = sizes.empty() ? std::vector<int>{base.train_size} : int_list(sizes);
    const std::string modes = opts.get_string("modes", "");
    if (modes.empty()) {
        axes.modes = {base.mode};
    } else {
        for (const auto& name : split_list(modes)) axes.modes.push_back(reg::mode_from_string(name));
    }
    const std::string seeds = opts.get_string("seeds", "");
    axes.seeds = seeds.empty() ? std::vector<uint64_t>{base.seed} : u64_list(seeds);

    if (base.steps < 0) throw Error("steps must be nonnegative");
    if (base.lr <= 0) throw Error("lr must be positive");
    if (base.derivative_weight < 0) throw Error("alpha must be nonnegative");
    if (base.batch_size < 1) throw Error("batch must be positive");
    if (base.test_size < 1) throw Error("test_size must be positive");
    if (workers < 1) throw Error("workers must be positive");
    if (grid < 2) throw Error("grid must be at least 2");
    for (int n : axes.sizes)
        if (n < 1) throw Error("n must be positive");
    for (int h : base.hidden)
        if (h < 1) throw Error("hidden layer sizes must be positive");
    const size_t total = axes.functions.size() * axes.sizes.size() * axes.modes.size() * axes.seeds.size();
    if (want_surface && total != 1) throw Error("dump_surface requires a single run, not a sweep");

    opts.reject_unknown();
    RunScope scope("regress", opts, config_path, flag_out);

    res::ResultWriter writer(scope.out() / "results.csv", scope.out() / "results.jsonl",
                             res::regression_columns);

    bool numerical_failure = false;
    size_t done = 0;
    auto sink = [&](const reg::ResultRecord& r) {
        writer.write(res::to_row(r));
        ++done;
        if (r.error.empty()) {
            std::printf("[%zu/%zu] %s %s n=%d seed=%llu test_mse=%.6g test_grad_mse=%.6g (%.0f ms)\n",
                        done, total, bench::to_string(r.config.function).c_str(),
                        reg::to_string(r.config.mode).c_str(), r.config.train_size,
                        static_cast<unsigned long long>(r.config.seed), r.test_mse,
                        r.test_grad_mse, r.wall_ms);
        } else {
            numerical_failure = true;
            std::printf("[%zu/%zu] %s %s n=%d seed=%llu FAILED: %s\n", done, total,
                        bench::to_string(r.config.function).c_str(),
                        reg::to_string(r.config.mode).c_str(), r.config.train_size,
                        static_cast<unsigned long long>(r.config.seed), r.error.c_str());
        }
        std::fflush(stdout);
    };

    if (want_surface) {
        nn::Mlp model;
        reg::ResultRecord rec = reg::run_regression(base, &model);
        sink(rec);
        if (rec.error.empty()) {
            std::ofstream sf(scope.out() / "surface.csv");
            if (!sf) throw Error("cannot write surface.csv in " + scope.out().string());
            reg::dump_surface(model, reg::benchmark_target(base.function), grid, grid, sf,
                              rec.target_scale, rec.target_offset);
        }
    } else {
        reg::run_sweep(base, axes, workers, sink);
    }

    return scope.finish(numerical_failure ? 2 : 0);
}

}  // namespace sobolev::cli
