#include "sobolev/commands.hpp"
#include "sobolev/lists.hpp"
#include "sobolev/results.hpp"
#include "sobolev/syngrad.hpp"

#include <cstdio>

namespace sobolev::cli {

int cmd_sg(cfg::Options& opts, const std::string& config_path, const std::string& flag_out) {
    sg::SgConfig base;
    base.layer_sizes = int_list(opts.get_string("layers", "20,64,64,64,8"));
    base.activation = nn::activation_from_string(opts.get_string("activation", "relu"));
    base.splits = int_list(opts.get_string("splits", "2"));
    base.variant = sg::variant_from_string(opts.get_string("variant", "sobolev"));
    base.sg_hidden = int_list(opts.get_string("sg_hidden", "64,64"));
    base.steps = opts.get_int("steps", base.steps);
    base.main_lr = opts.get_double("main_lr", base.main_lr);
    base.sg_lr = opts.get_double("sg_lr", base.sg_lr);
    base.train_size = opts.get_int("train", base.train_size);
    base.test_size = opts.get_int("test_size", base.test_size);
    base.batch_size = opts.get_int("batch", base.batch_size);
    base.noise = opts.get_double("noise", base.noise);
    base.seed = opts.get_u64("seed", base.seed);

    const int workers = opts.get_int("workers", 1);

    sg::SgSweepAxes axes;
    const std::string variants = opts.get_string("variants", "");
    if (variants == "all") {
        axes.variants = {sg::Variant::noprop, sg::Variant::direct_sg, sg::Variant::critic,
                         sg::Variant::sobolev, sg::Variant::backprop};
    } else if (!variants.empty()) {
        for (const auto& name : split_list(variants))
            axes.variants.push_back(sg::variant_from_string(name));
    } else {
        axes.variants = {base.variant};
    }
    const std::string seeds = opts.get_string("seeds", "");
    axes.seeds = seeds.empty() ? std::vector<uint64_t>{base.seed} : u64_list(seeds);

    if (base.layer_sizes.size() < 2) throw Error("layers needs an input and an output size");
    for (int s : base.layer_sizes)
        if (s < 1) throw Error("layer sizes must be positive");
    if (base.layer_sizes.back() < 2) throw Error("the output layer needs at least two classes");
    for (int h : base.sg_hidden)
        if (h < 1) throw Error("sg_hidden layer sizes must be positive");
    if (base.steps < 0) throw Error("steps must be nonnegative");
    if (base.main_lr <= 0 || base.sg_lr <= 0) throw Error("learning rates must be positive");
    if (base.train_size < 1) throw Error("train must be positive");
    if (base.test_size < 1) throw Error("test_size must be positive");
    if (base.batch_size < 1) throw Error("batch must be positive");
    if (base.noise < 0) throw Error("noise must be nonnegative");
    if (workers < 1) throw Error("workers must be positive");
    // Split placement is validated against the layer count by the network
    // builder; fail before any output directory is claimed.
    (void)sg::make_split_network(base.layer_sizes, base.activation, base.splits, 0);

    opts.reject_unknown();
    RunScope scope("sg", opts, config_path, flag_out);

    res::ResultWriter writer(scope.out() / "results.csv", scope.out() / "results.jsonl",
                             res::sg_columns);

    const size_t total = axes.variants.size() * axes.seeds.size();
    bool numerical_failure = false;
    size_t done = 0;
    auto sink = [&](const sg::SgResult& r) {
        writer.write(res::to_row(r));
        ++done;
        if (r.error.empty()) {
            std::printf("[%zu/%zu] %s splits=%zu seed=%llu test_acc=%.4f (%.0f ms)\n", done,
                        total, sg::to_string(r.config.variant).c_str(), r.config.splits.size(),
                        static_cast<unsigned long long>(r.config.seed), r.test_acc, r.wall_ms);
        } else {
            numerical_failure = true;
            std::printf("[%zu/%zu] %s splits=%zu seed=%llu FAILED: %s\n", done, total,
                        sg::to_string(r.config.variant).c_str(), r.config.splits.size(),
                        static_cast<unsigned long long>(r.config.seed), r.error.c_str());
        }
        std::fflush(stdout);
    };

    sg::run_sg_sweep(base, axes, workers, sink);

    return scope.finish(numerical_failure ? 2 : 0);
}

}  // namespace sobolev::cli
