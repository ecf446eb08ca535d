#include <CLI11.hpp>

#include "sobolev/commands.hpp"

#include <cstdio>
#include <map>
#include <string>
#include <vector>

namespace {

using sobolev::cli::Handler;

struct SubCommand {
    CLI::App* app = nullptr;
    Handler handler = nullptr;
    std::string config_path;
    std::string out;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> flag_opts;

    void add_keys(const std::vector<std::pair<std::string, std::string>>& keys) {
        for (const auto& [name, help] : keys) {
            auto [it, inserted] = flags.emplace(name, "");
            flag_opts[name] = app->add_option("--" + name, it->second, help);
        }
    }
};

int dispatch(const SubCommand& sub) {
    sobolev::cfg::Options opts(sub.config_path.empty()
                                   ? sobolev::cfg::KvMap{}
                                   : sobolev::cfg::load_kv_file(sub.config_path));
    for (const auto& [name, opt] : sub.flag_opts) {
        if (opt->count() > 0) opts.set(name, sub.flags.at(name));
    }
    return sub.handler(opts, sub.config_path, sub.out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training models on target values and target derivatives"};
    app.require_subcommand(1);

    std::vector<SubCommand> subs;
    subs.reserve(8);

    auto make_sub = [&](const std::string& name, const std::string& desc, Handler h) -> SubCommand& {
        subs.push_back({});
        SubCommand& s = subs.back();
        s.app = app.add_subcommand(name, desc);
        s.handler = h;
        s.app->add_option("--config", s.config_path, "flat key=value config file");
        s.app->add_option("--out", s.out, "output directory (default runs/<subcommand>; SOBOLEV_OUT overrides)");
        return s;
    };

    auto& regress = make_sub("regress", "regression benchmarks: value-only vs derivative-matching training",
                             &sobolev::cli::cmd_regress);
    regress.add_keys({
        {"function", "benchmark function name"},
        {"mode", "regular | sobolev"},
        {"n", "training set size"},
        {"seed", "master seed"},
        {"steps", "optimizer steps"},
        {"lr", "Adam learning rate"},
        {"alpha", "weight of the derivative term"},
        {"hidden", "hidden layer sizes, e.g. 256,256"},
        {"activation", "relu | leaky_relu | tanh | sigmoid"},
        {"standardize", "standardize targets by a train-set affine map"},
        {"batch", "full-batch limit and minibatch size"},
        {"test_size", "held-out evaluation points"},
        {"log_every", "steps between train-loss log entries"},
        {"workers", "parallel runs in a sweep"},
        {"functions", "sweep axis: list or 'all'"},
        {"sizes", "sweep axis: training set sizes"},
        {"modes", "sweep axis: training modes"},
        {"seeds", "sweep axis: seeds"},
        {"dump_surface", "write surface.csv over the domain lattice (single run)"},
        {"grid", "surface lattice resolution"},
    });

    auto& distill = make_sub("distill", "policy distillation from a synthetic teacher",
                             &sobolev::cli::cmd_distill);
    distill.add_keys({
        {"d", "state dimension"},
        {"actions", "action count"},
        {"teacher_hidden", "teacher hidden layer sizes"},
        {"temperature", "teacher logit temperature (small = sharp)"},
        {"hidden", "student hidden layer sizes"},
        {"alpha", "weight of the projected-gradient term (sobolev mode)"},
        {"fraction", "fraction of the train pool used"},
        {"num_projections", "Monte Carlo draws per loss evaluation"},
        {"steps", "optimizer steps"},
        {"lr", "Adam learning rate"},
        {"norm", "gradient mismatch norm: l2 | l1"},
        {"seed", "master seed"},
        {"train_pool", "generated candidate training states"},
        {"test_size", "held-out evaluation states"},
        {"batch", "minibatch size"},
        {"mode", "regular | sobolev"},
        {"workers", "parallel runs in a sweep"},
        {"fractions", "sweep axis: data fractions"},
        {"modes", "sweep axis: training modes"},
        {"seeds", "sweep axis: seeds"},
    });

    auto& sgcmd = make_sub("sg", "decoupled training with synthetic gradients",
                           &sobolev::cli::cmd_sg);
    sgcmd.add_keys({
        {"layers", "classifier layer sizes, input through classes"},
        {"activation", "hidden activation: relu | leaky_relu | tanh | sigmoid"},
        {"splits", "weight-layer indices where the network is decoupled"},
        {"variant", "noprop | direct_sg | critic | sobolev | backprop"},
        {"sg_hidden", "synthetic-gradient module hidden layer sizes"},
        {"steps", "optimizer steps"},
        {"main_lr", "Adam learning rate of the classifier"},
        {"sg_lr", "Adam learning rate of the gradient modules"},
        {"train", "training set size"},
        {"test_size", "held-out evaluation set size"},
        {"batch", "minibatch size"},
        {"noise", "spiral arm jitter"},
        {"seed", "master seed"},
        {"variants", "sweep axis: training variants (or 'all')"},
        {"seeds", "sweep axis: seeds"},
        {"workers", "parallel runs in a sweep"},
    });

    // rerun takes a manifest instead of config keys
    std::string rerun_manifest, rerun_out;
    CLI::App* rerun = app.add_subcommand("rerun", "replay a previous run from its manifest");
    rerun->add_option("--manifest", rerun_manifest, "path to manifest.json")->required();
    rerun->add_option("--out", rerun_out, "output directory for the replay");

    CLI11_PARSE(app, argc, argv);

    try {
        if (rerun->parsed()) return sobolev::cli::cmd_rerun(rerun_manifest, rerun_out);
        for (const auto& s : subs) {
            if (s.app->parsed()) return dispatch(s);
        }
        std::fprintf(stderr, "error: no subcommand selected\n");
        return 1;
    } catch (const sobolev::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 1;
    }
}
