#include "sobolev/syngrad.hpp"

#include "sobolev/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace sobolev::sg {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Scale of the nuisance coordinates of the spiral dataset. Small enough that
// the arms dominate the geometry (unit-variance nuisance dims let a network
// memorise noise instead of the spiral), large enough that the embedding
// layers have something to suppress.
constexpr double kAmbientScale = 0.3;

// One affine + activation block per weight layer in [from, to), emitting the
// same op sequence as forward_mlp so that composing parts reproduces the
// undecoupled forward bit-exactly. The head belongs to the last weight layer
// and is applied only when `to` closes the network.
ad::NodeId forward_part(ad::Tape& t, const nn::MlpSpec& spec, const nn::MlpVars& params, int from,
                        int to, ad::NodeId h) {
    const int n = t.value(h).rows();
    const int layers = int(params.weights.size());
    for (int l = from; l < to; ++l) {
        ad::NodeId a =
            t.add(t.matmul(h, params.weights[size_t(l)]), t.bcast_row(params.biases[size_t(l)], n));
        if (l + 1 == layers) {
            h = a;  // head applied below
        } else {
            switch (spec.activation) {
                case nn::Activation::relu: h = t.relu(a); break;
                case nn::Activation::leaky_relu: h = t.leaky_relu(a, spec.leaky_slope); break;
                case nn::Activation::tanh: h = t.tanh(a); break;
                case nn::Activation::sigmoid: h = t.sigmoid(a); break;
            }
        }
    }
    if (to == layers && spec.head == nn::Head::log_softmax) h = t.log_softmax_rows(h);
    return h;
}

// Per-sample cross-entropy (n x 1) of log-probabilities against a constant
// one-hot target node.
ad::NodeId per_sample_ce(ad::Tape& t, ad::NodeId logp, ad::NodeId y_const) {
    return t.neg(t.rowsum(t.mul(logp, y_const)));
}

ad::NodeId mean_of(ad::Tape& t, ad::NodeId per_sample, int n) {
    return t.scale(t.sum(per_sample), 1.0 / double(n));
}

// Detached forward: each part runs from a fresh leaf holding the previous
// part's output values, so no gradient crosses a boundary.
struct PartsForward {
    nn::MlpVars vars;
    std::vector<ad::NodeId> inputs;   // inputs[0] is x; inputs[k] the leaf at boundary k-1
    std::vector<ad::NodeId> outputs;  // outputs.back() is the log-prob head
};

PartsForward detached_parts_forward(ad::Tape& t, const SplitNetwork& net, const Tensor& x) {
    PartsForward pf;
    pf.vars = nn::stage_params(t, net.mlp);
    ad::NodeId h = t.leaf(x);
    for (int p = 0; p < net.parts(); ++p) {
        if (p > 0) h = t.leaf(t.value(pf.outputs.back()));
        pf.inputs.push_back(h);
        const auto [from, to] = net.part_range(p);
        pf.outputs.push_back(forward_part(t, net.mlp.spec, pf.vars, from, to, h));
    }
    return pf;
}

// Undetached chain over the same staged parameters; boundary nodes are the
// activations the true gradients are taken at.
struct ComposedForward {
    std::vector<ad::NodeId> boundaries;
    ad::NodeId logp;
};

ComposedForward composed_forward(ad::Tape& t, const SplitNetwork& net, const nn::MlpVars& vars,
                                 ad::NodeId x) {
    ComposedForward cf;
    ad::NodeId h = x;
    for (int p = 0; p < net.parts(); ++p) {
        const auto [from, to] = net.part_range(p);
        h = forward_part(t, net.mlp.spec, vars, from, to, h);
        if (p + 1 < net.parts()) cf.boundaries.push_back(h);
    }
    cf.logp = h;
    return cf;
}

// Parameter node ids of the weight layers [from, to), interleaved per layer
// in the same order MlpVars::all() uses.
std::vector<ad::NodeId> part_param_ids(const nn::MlpVars& vars, int from, int to) {
    std::vector<ad::NodeId> ids;
    ids.reserve(size_t(to - from) * 2);
    for (int l = from; l < to; ++l) {
        ids.push_back(vars.weights[size_t(l)]);
        ids.push_back(vars.biases[size_t(l)]);
    }
    return ids;
}

std::vector<Tensor*> param_ptrs(nn::Mlp& m) {
    std::vector<Tensor*> ptrs;
    ptrs.reserve(m.weights.size() * 2);
    // Interleaved per layer, matching MlpVars::all().
    for (size_t l = 0; l < m.weights.size(); ++l) {
        ptrs.push_back(&m.weights[l]);
        ptrs.push_back(&m.biases[l]);
    }
    return ptrs;
}

void check_batch(const Tensor& x, const std::vector<int>& labels, int input_dim) {
    if (x.rows() < 1) throw Error("sg step: empty batch");
    if (x.cols() != input_dim)
        throw Error("sg step: input " + x.shape_str() + " does not match network input dim " +
                    std::to_string(input_dim));
    if (labels.size() != size_t(x.rows()))
        throw Error("sg step: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(x.rows()) + " rows");
}

}  // namespace

std::string to_string(Variant v) {
    switch (v) {
        case Variant::noprop: return "noprop";
        case Variant::direct_sg: return "direct_sg";
        case Variant::critic: return "critic";
        case Variant::sobolev: return "sobolev";
        case Variant::backprop: return "backprop";
    }
    throw Error("to_string: bad variant");
}

Variant variant_from_string(const std::string& s) {
    if (s == "noprop") return Variant::noprop;
    if (s == "direct_sg") return Variant::direct_sg;
    if (s == "critic") return Variant::critic;
    if (s == "sobolev") return Variant::sobolev;
    if (s == "backprop") return Variant::backprop;
    throw Error("unknown sg variant '" + s +
                "' (expected noprop, direct_sg, critic, sobolev or backprop)");
}

SgDataset make_spiral_dataset(int n, int dim, int classes, double noise, uint64_t seed) {
    if (n < 1) throw Error("make_spiral_dataset: need at least one sample");
    if (dim < 2) throw Error("make_spiral_dataset: spiral needs dim >= 2");
    if (classes < 2) throw Error("make_spiral_dataset: need at least two classes");
    if (!(noise >= 0.0)) throw Error("make_spiral_dataset: noise must be >= 0");
    Rng rng(seed);
    SgDataset ds;
    ds.inputs = Tensor(n, dim);
    ds.labels.resize(size_t(n));
    // Arms wind three quarters of a turn so neighbouring classes interleave
    // in angle; radius grows with arc position to keep arms apart near the
    // centre.
    const double sweep = kTwoPi * 0.75;
    for (int i = 0; i < n; ++i) {
        const int k = int(rng.below(uint64_t(classes)));
        const double u = rng.uniform01();
        const double angle = kTwoPi * double(k) / double(classes) + sweep * u;
        const double r = 0.4 + 2.6 * u;
        ds.inputs(i, 0) = r * std::cos(angle) + noise * rng.normal();
        ds.inputs(i, 1) = r * std::sin(angle) + noise * rng.normal();
        for (int j = 2; j < dim; ++j) ds.inputs(i, j) = kAmbientScale * rng.normal();
        ds.labels[size_t(i)] = k;
    }
    return ds;
}

std::pair<int, int> SplitNetwork::part_range(int p) const {
    if (p < 0 || p >= parts())
        throw Error("part_range: part " + std::to_string(p) + " of " + std::to_string(parts()));
    const int from = p == 0 ? 0 : splits[size_t(p - 1)];
    const int to = p == parts() - 1 ? weight_layers() : splits[size_t(p)];
    return {from, to};
}

SplitNetwork make_split_network(const std::vector<int>& layer_sizes, nn::Activation activation,
                                std::vector<int> splits, uint64_t seed) {
    if (layer_sizes.size() < 2) throw Error("make_split_network: need at least one weight layer");
    const int layers = int(layer_sizes.size()) - 1;
    for (size_t i = 0; i < splits.size(); ++i) {
        if (splits[i] < 1 || splits[i] > layers - 1)
            throw Error("make_split_network: split " + std::to_string(splits[i]) +
                        " outside [1, " + std::to_string(layers - 1) + "]");
        if (i > 0 && splits[i] <= splits[i - 1])
            throw Error("make_split_network: splits must be ascending and unique");
    }
    SplitNetwork net;
    net.mlp = nn::init_mlp({layer_sizes, activation, nn::Head::log_softmax, 0.01}, seed);
    net.splits = std::move(splits);
    return net;
}

ad::NodeId forward_part(ad::Tape& t, const SplitNetwork& net, const nn::MlpVars& vars, int part,
                        ad::NodeId h) {
    const auto [from, to] = net.part_range(part);
    return forward_part(t, net.mlp.spec, vars, from, to, h);
}

SgModule make_sg_module(Variant variant, int h_dim, int classes, const std::vector<int>& hidden,
                        uint64_t seed) {
    if (variant != Variant::direct_sg && variant != Variant::critic &&
        variant != Variant::sobolev)
        throw Error("make_sg_module: variant " + to_string(variant) + " trains no module");
    if (h_dim < 1 || classes < 2) throw Error("make_sg_module: need h_dim >= 1 and classes >= 2");
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(h_dim + classes);
    for (int h : hidden) {
        if (h < 1) throw Error("make_sg_module: hidden sizes must be >= 1");
        spec.layer_sizes.push_back(h);
    }
    // direct_sg regresses the gradient with a linear head; critic and
    // sobolev wrap a classifier whose per-sample cross-entropy is the loss
    // model.
    const bool direct = variant == Variant::direct_sg;
    spec.layer_sizes.push_back(direct ? h_dim : classes);
    spec.activation = nn::Activation::relu;
    spec.head = direct ? nn::Head::linear : nn::Head::log_softmax;
    SgModule mod;
    mod.variant = variant;
    mod.net = nn::init_mlp(spec, seed);
    // The final layer starts at zero, so an untrained module emits exactly
    // zero gradient: decoupled training starts where noprop stands instead
    // of injecting random-init noise, and improves as the module learns.
    Tensor& last = mod.net.weights.back();
    last = Tensor::zeros(last.rows(), last.cols());
    return mod;
}

Tensor one_hot(const std::vector<int>& labels, int classes) {
    Tensor y(int(labels.size()), classes);
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw Error("one_hot: label " + std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(classes) + ")");
        y(int(i), labels[i]) = 1.0;
    }
    return y;
}

SgEval eval_sg_module(ad::Tape& t, const SgModule& mod, ad::NodeId h, const Tensor& y_onehot) {
    const Tensor& hv = t.value(h);
    const int n = hv.rows();
    const int d = hv.cols();
    const int classes = y_onehot.cols();
    if (y_onehot.rows() != n)
        throw Error("eval_sg_module: " + std::to_string(y_onehot.rows()) + " targets for " +
                    std::to_string(n) + " rows");
    if (mod.net.spec.input_dim() != d + classes)
        throw Error("eval_sg_module: module expects input dim " +
                    std::to_string(mod.net.spec.input_dim()) + ", boundary gives " +
                    std::to_string(d + classes));
    // Conditioning input [h | one-hot y] without a concat op: a constant
    // selector places h in the first d columns, a constant carries the
    // one-hot block in the last.
    Tensor sel(d, d + classes);
    for (int i = 0; i < d; ++i) sel(i, i) = 1.0;
    Tensor ypad(n, d + classes);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < classes; ++j) ypad(i, d + j) = y_onehot(i, j);
    ad::NodeId input = t.add(t.matmul(h, t.constant(sel)), t.constant(ypad));

    SgEval ev;
    ev.params = nn::stage_params(t, mod.net);
    ad::NodeId out = nn::forward_mlp(t, mod.net.spec, ev.params, input);
    switch (mod.variant) {
        case Variant::direct_sg:
            ev.sg = out;  // the network output is the gradient prediction
            break;
        case Variant::critic:
        case Variant::sobolev: {
            ev.m = per_sample_ce(t, out, t.constant(y_onehot));
            // Emitted gradient of the mean predicted loss, matching the
            // mean-loss convention of the true gradients.
            ev.sg = ad::grad(t, mean_of(t, ev.m, n), h);
            break;
        }
        default: throw Error("eval_sg_module: variant " + to_string(mod.variant) + " has no module");
    }
    return ev;
}

ad::NodeId sg_losses(ad::Tape& t, Variant variant, ad::NodeId m, ad::NodeId sg,
                     ad::NodeId true_loss, ad::NodeId true_grad) {
    auto l1_term = [&](ad::NodeId a, ad::NodeId b, const char* what) {
        if (!a.valid() || !b.valid())
            throw Error(std::string("sg_losses: ") + what + " needs valid prediction and target");
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (!av.same_shape(bv))
            throw Error(std::string("sg_losses: ") + what + " shapes " + av.shape_str() + " vs " +
                        bv.shape_str());
        // Per-sample sum of absolute errors, averaged over the batch.
        return t.scale(t.sum(t.abs(t.sub(a, b))), 1.0 / double(av.rows()));
    };
    switch (variant) {
        case Variant::direct_sg: return l1_term(sg, true_grad, "gradient term");
        case Variant::critic: return l1_term(m, true_loss, "value term");
        case Variant::sobolev:
            return t.add(l1_term(m, true_loss, "value term"),
                         l1_term(sg, true_grad, "gradient term"));
        case Variant::noprop: throw Error("sg_losses: noprop trains no module");
        case Variant::backprop: throw Error("sg_losses: backprop uses the task gradient directly");
    }
    throw Error("sg_losses: bad variant");
}

StepOutcome decoupled_step(ad::Tape& t, SplitNetwork& net, std::vector<SgModule>& modules,
                           Variant variant, const Tensor& x, const std::vector<int>& labels,
                           nn::OptimizerState& main_opt,
                           std::vector<nn::OptimizerState>& module_opts) {
    if (variant == Variant::backprop) {
        if (!modules.empty()) throw Error("decoupled_step: backprop takes no modules");
        StepOutcome out;
        out.task_loss = backprop_step(t, net.mlp, x, labels, main_opt);
        return out;
    }
    const int boundaries = net.parts() - 1;
    if (variant == Variant::noprop) {
        if (!modules.empty()) throw Error("decoupled_step: noprop takes no modules");
    } else {
        if (int(modules.size()) != boundaries)
            throw Error("decoupled_step: " + std::to_string(modules.size()) + " modules for " +
                        std::to_string(boundaries) + " boundaries");
        if (int(module_opts.size()) != boundaries)
            throw Error("decoupled_step: " + std::to_string(module_opts.size()) +
                        " module optimizers for " + std::to_string(boundaries) + " boundaries");
        for (const SgModule& mod : modules)
            if (mod.variant != variant)
                throw Error("decoupled_step: module variant " + to_string(mod.variant) +
                            " under " + to_string(variant));
    }
    check_batch(x, labels, net.mlp.spec.input_dim());

    const int n = x.rows();
    const size_t mk = t.mark();
    try {
        const Tensor y = one_hot(labels, net.classes());
        PartsForward pf = detached_parts_forward(t, net, x);
        ad::NodeId ps_d = per_sample_ce(t, pf.outputs.back(), t.constant(y));
        ad::NodeId loss_d = mean_of(t, ps_d, n);

        StepOutcome out;
        out.task_loss = t.value(loss_d)(0, 0);

        // True boundary gradients of the mean loss, from the undetached
        // chain over the same staged parameters. Only the variants that
        // supervise gradients pay for the extra pass.
        const bool need_truth = variant == Variant::direct_sg || variant == Variant::sobolev;
        std::vector<ad::NodeId> true_grads;
        if (need_truth) {
            ComposedForward cf = composed_forward(t, net, pf.vars, pf.inputs[0]);
            ad::NodeId loss_c = mean_of(t, per_sample_ce(t, cf.logp, t.constant(y)), n);
            true_grads = ad::grad(t, loss_c, cf.boundaries);
        }

        // Module evaluations; injections are read before any update so the
        // main step sees the modules as they stood at step entry. Targets
        // are detached: the module objective must not reach main
        // parameters.
        const size_t nb = size_t(boundaries);
        std::vector<Tensor> inject(nb);
        std::vector<ad::NodeId> module_losses(nb);
        std::vector<SgEval> evals(nb);
        if (variant == Variant::noprop) {
            for (int b = 0; b < boundaries; ++b)
                inject[size_t(b)] = Tensor::zeros(n, net.boundary_dim(b));
        } else {
            for (int b = 0; b < boundaries; ++b) {
                SgEval ev = eval_sg_module(t, modules[size_t(b)], pf.inputs[size_t(b) + 1], y);
                inject[size_t(b)] = t.value(ev.sg);
                ad::NodeId tl{};
                ad::NodeId tg{};
                if (variant != Variant::direct_sg) tl = t.constant(t.value(ps_d));
                if (need_truth) tg = t.constant(t.value(true_grads[size_t(b)]));
                module_losses[size_t(b)] = sg_losses(t, variant, ev.m, ev.sg, tl, tg);
                evals[size_t(b)] = ev;
            }
        }

        // Main update: upstream parts step on sum(h * SG) so the injected
        // values arrive as the parts' output adjoints unchanged; the final
        // part steps on the true task loss. noprop injects exact zeros,
        // which leaves upstream parameters bitwise untouched under either
        // optimizer.
        std::vector<Tensor> grads;
        grads.reserve(net.mlp.weights.size() * 2);
        for (int p = 0; p < net.parts(); ++p) {
            const auto [from, to] = net.part_range(p);
            const std::vector<ad::NodeId> ids = part_param_ids(pf.vars, from, to);
            if (p == net.parts() - 1) {
                for (ad::NodeId g : ad::grad(t, loss_d, ids)) grads.push_back(t.value(g));
            } else if (variant == Variant::noprop) {
                for (int l = from; l < to; ++l) {
                    grads.push_back(Tensor::zeros(net.mlp.weights[size_t(l)].rows(),
                                                  net.mlp.weights[size_t(l)].cols()));
                    grads.push_back(Tensor::zeros(1, net.mlp.biases[size_t(l)].cols()));
                }
            } else {
                ad::NodeId surrogate =
                    t.sum(t.mul(pf.outputs[size_t(p)], t.constant(inject[size_t(p)])));
                for (ad::NodeId g : ad::grad(t, surrogate, ids)) grads.push_back(t.value(g));
            }
        }
        std::vector<Tensor*> ptrs = param_ptrs(net.mlp);
        nn::optimizer_step(main_opt, ptrs, grads);

        // Module updates after the main step (synchronous alternation); the
        // losses were built from pre-update values, so ordering only decides
        // bookkeeping.
        if (variant != Variant::noprop) {
            for (int b = 0; b < boundaries; ++b) {
                const std::vector<ad::NodeId> ids = evals[size_t(b)].params.all();
                std::vector<Tensor> mg;
                mg.reserve(ids.size());
                for (ad::NodeId g : ad::grad(t, module_losses[size_t(b)], ids))
                    mg.push_back(t.value(g));
                std::vector<Tensor*> mptrs = param_ptrs(modules[size_t(b)].net);
                nn::optimizer_step(module_opts[size_t(b)], mptrs, mg);
                out.module_losses.push_back(t.value(module_losses[size_t(b)])(0, 0));
            }
        }

        t.rollback(mk);
        return out;
    } catch (...) {
        t.rollback(mk);
        throw;
    }
}

double oracle_step(ad::Tape& t, SplitNetwork& net, const Tensor& x,
                   const std::vector<int>& labels, nn::OptimizerState& main_opt) {
    check_batch(x, labels, net.mlp.spec.input_dim());
    const int n = x.rows();
    const size_t mk = t.mark();
    try {
        const Tensor y = one_hot(labels, net.classes());
        PartsForward pf = detached_parts_forward(t, net, x);
        ad::NodeId loss_d = mean_of(t, per_sample_ce(t, pf.outputs.back(), t.constant(y)), n);

        // A perfect loss model: inject the true mean-loss gradients at every
        // boundary. The composed chain shares the staged parameters and
        // input leaf with the detached pass, so its boundary adjoints carry
        // exactly the values full backpropagation would.
        ComposedForward cf = composed_forward(t, net, pf.vars, pf.inputs[0]);
        ad::NodeId loss_c = mean_of(t, per_sample_ce(t, cf.logp, t.constant(y)), n);
        std::vector<ad::NodeId> true_grads = ad::grad(t, loss_c, cf.boundaries);

        std::vector<Tensor> grads;
        grads.reserve(net.mlp.weights.size() * 2);
        for (int p = 0; p < net.parts(); ++p) {
            const auto [from, to] = net.part_range(p);
            const std::vector<ad::NodeId> ids = part_param_ids(pf.vars, from, to);
            ad::NodeId objective =
                p == net.parts() - 1
                    ? loss_d
                    : t.sum(t.mul(pf.outputs[size_t(p)],
                                  t.constant(t.value(true_grads[size_t(p)]))));
            for (ad::NodeId g : ad::grad(t, objective, ids)) grads.push_back(t.value(g));
        }
        std::vector<Tensor*> ptrs = param_ptrs(net.mlp);
        nn::optimizer_step(main_opt, ptrs, grads);

        const double loss = t.value(loss_d)(0, 0);
        t.rollback(mk);
        return loss;
    } catch (...) {
        t.rollback(mk);
        throw;
    }
}

double backprop_step(ad::Tape& t, nn::Mlp& mlp, const Tensor& x, const std::vector<int>& labels,
                     nn::OptimizerState& opt) {
    if (mlp.spec.head != nn::Head::log_softmax)
        throw Error("backprop_step: cross-entropy needs a log_softmax head");
    check_batch(x, labels, mlp.spec.input_dim());
    const size_t mk = t.mark();
    try {
        nn::StagedForward sf = nn::forward_mlp(t, mlp, x);
        ad::NodeId yc = t.constant(one_hot(labels, mlp.spec.output_dim()));
        ad::NodeId loss = mean_of(t, per_sample_ce(t, sf.output, yc), x.rows());
        const std::vector<ad::NodeId> ids = sf.params.all();
        std::vector<Tensor> grads;
        grads.reserve(ids.size());
        for (ad::NodeId g : ad::grad(t, loss, ids)) grads.push_back(t.value(g));
        std::vector<Tensor*> ptrs = param_ptrs(mlp);
        nn::optimizer_step(opt, ptrs, grads);
        const double value = t.value(loss)(0, 0);
        t.rollback(mk);
        return value;
    } catch (...) {
        t.rollback(mk);
        throw;
    }
}

double accuracy(const nn::Mlp& mlp, const Tensor& x, const std::vector<int>& labels) {
    if (labels.size() != size_t(x.rows()))
        throw Error("accuracy: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(x.rows()) + " rows");
    if (x.rows() == 0) throw Error("accuracy: empty evaluation set");
    ad::Tape t;
    int correct = 0;
    const int chunk = 512;
    for (int r0 = 0; r0 < x.rows(); r0 += chunk) {
        const int nr = std::min(chunk, x.rows() - r0);
        Tensor xs(nr, x.cols());
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < x.cols(); ++j) xs(i, j) = x(r0 + i, j);
        const size_t mk = t.mark();
        nn::StagedForward sf = nn::forward_mlp(t, mlp, xs);
        const Tensor& lp = t.value(sf.output);
        for (int i = 0; i < nr; ++i) {
            int arg = 0;
            for (int j = 1; j < lp.cols(); ++j)
                if (lp(i, j) > lp(i, arg)) arg = j;
            if (arg == labels[size_t(r0 + i)]) ++correct;
        }
        t.rollback(mk);
    }
    return double(correct) / double(x.rows());
}

SgResult run_sg_experiment(const SgConfig& cfg) {
    SgResult res;
    res.config = cfg;
    res.test_acc = res.train_loss = kNan;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (cfg.layer_sizes.size() < 2)
            throw Error("sg experiment: need at least one weight layer");
        for (int s : cfg.layer_sizes)
            if (s < 1) throw Error("sg experiment: layer sizes must be >= 1");
        if (cfg.layer_sizes.back() < 2) throw Error("sg experiment: need at least two classes");
        if (cfg.steps < 0) throw Error("sg experiment: steps must be >= 0");
        if (!(cfg.main_lr > 0.0) || !(cfg.sg_lr > 0.0))
            throw Error("sg experiment: learning rates must be > 0");
        if (cfg.train_size < 1 || cfg.test_size < 1)
            throw Error("sg experiment: train and test sizes must be >= 1");
        if (cfg.batch_size < 1) throw Error("sg experiment: batch size must be >= 1");

        const int dim = cfg.layer_sizes.front();
        const int classes = cfg.layer_sizes.back();
        // One stream generates the training pool first and the test set
        // after it, so the test set is untouched by the train size.
        const SgDataset pool = make_spiral_dataset(cfg.train_size + cfg.test_size, dim, classes,
                                                   cfg.noise, derive_seed(cfg.seed, "data"));
        Tensor train_x(cfg.train_size, dim);
        Tensor test_x(cfg.test_size, dim);
        std::vector<int> train_y(size_t(cfg.train_size));
        std::vector<int> test_y(size_t(cfg.test_size));
        for (int i = 0; i < cfg.train_size; ++i) {
            for (int j = 0; j < dim; ++j) train_x(i, j) = pool.inputs(i, j);
            train_y[size_t(i)] = pool.labels[size_t(i)];
        }
        for (int i = 0; i < cfg.test_size; ++i) {
            for (int j = 0; j < dim; ++j) test_x(i, j) = pool.inputs(cfg.train_size + i, j);
            test_y[size_t(i)] = pool.labels[size_t(cfg.train_size + i)];
        }

        SplitNetwork net = make_split_network(cfg.layer_sizes, cfg.activation, cfg.splits,
                                              derive_seed(cfg.seed, "init"));
        const int boundaries = net.parts() - 1;
        std::vector<SgModule> modules;
        std::vector<nn::OptimizerState> module_opts;
        const bool trains_modules = cfg.variant == Variant::direct_sg ||
                                    cfg.variant == Variant::critic ||
                                    cfg.variant == Variant::sobolev;
        if (trains_modules) {
            for (int b = 0; b < boundaries; ++b) {
                modules.push_back(make_sg_module(cfg.variant, net.boundary_dim(b), classes,
                                                 cfg.sg_hidden,
                                                 derive_seed(cfg.seed, "sg-init", uint64_t(b))));
                nn::OptimizerState opt;
                opt.lr = cfg.sg_lr;
                module_opts.push_back(opt);
            }
        }
        nn::OptimizerState main_opt;
        main_opt.lr = cfg.main_lr;

        Rng batch_rng(derive_seed(cfg.seed, "batch"));
        ad::Tape tape;
        tape.set_check_finite(false);  // divergence is caught per step below
        const bool full_batch = cfg.train_size <= cfg.batch_size;
        Tensor bx(full_batch ? cfg.train_size : cfg.batch_size, dim);
        std::vector<int> by(size_t(bx.rows()));
        for (int step = 0; step < cfg.steps; ++step) {
            if (full_batch) {
                bx = train_x;
                by = train_y;
            } else {
                for (int i = 0; i < cfg.batch_size; ++i) {
                    const int r = int(batch_rng.below(uint64_t(cfg.train_size)));
                    for (int j = 0; j < dim; ++j) bx(i, j) = train_x(r, j);
                    by[size_t(i)] = train_y[size_t(r)];
                }
            }
            const StepOutcome out =
                decoupled_step(tape, net, modules, cfg.variant, bx, by, main_opt, module_opts);
            if (!std::isfinite(out.task_loss))
                throw Error("training diverged: loss " + std::to_string(out.task_loss) +
                            " at step " + std::to_string(step));
            res.train_loss = out.task_loss;
        }
        res.test_acc = accuracy(net.mlp, test_x, test_y);
    } catch (const std::exception& e) {
        res.error = e.what();
        res.test_acc = res.train_loss = kNan;
    }
    res.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<SgResult> run_sg_sweep(const SgConfig& base, const SgSweepAxes& axes, int workers,
                                   const SgSink& sink) {
    if (axes.variants.empty() || axes.seeds.empty())
        throw Error("run_sg_sweep: variants and seeds must be nonempty");
    std::vector<SgConfig> tasks;
    tasks.reserve(axes.variants.size() * axes.seeds.size());
    for (Variant v : axes.variants)
        for (uint64_t s : axes.seeds) {
            SgConfig cfg = base;
            cfg.variant = v;
            cfg.seed = s;
            tasks.push_back(cfg);
        }
    return ordered_parallel_for<SgResult>(
        tasks.size(), workers, [&](size_t i) { return run_sg_experiment(tasks[i]); },
        sink ? std::function<void(const SgResult&)>([&](const SgResult& r) { sink(r); })
             : nullptr);
}

}  // namespace sobolev::sg
