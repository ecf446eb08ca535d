#include "sobolev/mlp.hpp"

#include "sobolev/rng.hpp"

#include <cmath>

namespace sobolev::nn {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

std::string to_string(Head h) { return h == Head::linear ? "linear" : "log_softmax"; }

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "leaky_relu") return Activation::leaky_relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "sigmoid") return Activation::sigmoid;
    throw Error("unknown activation '" + s + "'");
}

Head head_from_string(const std::string& s) {
    if (s == "linear") return Head::linear;
    if (s == "log_softmax") return Head::log_softmax;
    throw Error("unknown head '" + s + "'");
}

size_t Mlp::param_count() const {
    size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

Mlp init_mlp(const MlpSpec& spec, uint64_t seed) {
    if (spec.layer_sizes.size() < 2) throw Error("init_mlp: need at least input and output layer sizes");
    for (int s : spec.layer_sizes)
        if (s <= 0) throw Error("init_mlp: layer sizes must be positive");

    const bool he = spec.activation == Activation::relu || spec.activation == Activation::leaky_relu;
    Rng rng(seed);
    Mlp m;
    m.spec = spec;
    for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const int fan_in = spec.layer_sizes[l];
        const int fan_out = spec.layer_sizes[l + 1];
        const double bound = he ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
        Tensor w(fan_in, fan_out);
        for (size_t k = 0; k < w.size(); ++k) w.at(k) = rng.uniform(-bound, bound);
        m.weights.push_back(std::move(w));
        m.biases.push_back(Tensor::zeros(1, fan_out));
    }
    return m;
}

std::vector<ad::NodeId> MlpVars::all() const {
    std::vector<ad::NodeId> ids;
    ids.reserve(weights.size() + biases.size());
    for (size_t l = 0; l < weights.size(); ++l) {
        ids.push_back(weights[l]);
        ids.push_back(biases[l]);
    }
    return ids;
}

MlpVars stage_params(ad::Tape& t, const Mlp& m) {
    MlpVars v;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        v.weights.push_back(t.leaf(m.weights[l]));
        v.biases.push_back(t.leaf(m.biases[l]));
    }
    return v;
}

ad::NodeId forward_mlp(ad::Tape& t, const MlpSpec& spec, const MlpVars& params, ad::NodeId x) {
    const Tensor& xv = t.value(x);
    if (xv.cols() != spec.input_dim())
        throw Error("forward_mlp: input " + xv.shape_str() + " does not match input dim " +
                    std::to_string(spec.input_dim()));
    const int n = xv.rows();
    ad::NodeId h = x;
    const size_t layers = params.weights.size();
    for (size_t l = 0; l < layers; ++l) {
        ad::NodeId a = t.add(t.matmul(h, params.weights[l]), t.bcast_row(params.biases[l], n));
        if (l + 1 == layers) {
            h = a;  // head applied below
        } else {
            switch (spec.activation) {
                case Activation::relu: h = t.relu(a); break;
                case Activation::leaky_relu: h = t.leaky_relu(a, spec.leaky_slope); break;
                case Activation::tanh: h = t.tanh(a); break;
                case Activation::sigmoid: h = t.sigmoid(a); break;
            }
        }
    }
    return spec.head == Head::linear ? h : t.log_softmax_rows(h);
}

StagedForward forward_mlp(ad::Tape& t, const Mlp& m, const Tensor& x) {
    StagedForward sf;
    sf.params = stage_params(t, m);
    sf.input = t.leaf(x);
    sf.output = forward_mlp(t, m.spec, sf.params, sf.input);
    return sf;
}

ad::NodeId input_gradient(ad::Tape& t, ad::NodeId output, ad::NodeId x) {
    const Tensor& ov = t.value(output);
    if (ov.cols() != 1)
        throw Error("input_gradient: output must be scalar per sample, got " + ov.shape_str() +
                    "; project vector outputs first");
    return ad::grad(t, t.sum(output), x);
}

}  // namespace sobolev::nn
