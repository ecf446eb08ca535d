#pragma once

#include "sobolev/tape.hpp"

#include <string>
#include <vector>

namespace sobolev::nn {

enum class Activation { relu, leaky_relu, tanh, sigmoid };
enum class Head { linear, log_softmax };

std::string to_string(Activation a);
std::string to_string(Head h);
Activation activation_from_string(const std::string& s);
Head head_from_string(const std::string& s);

struct MlpSpec {
    std::vector<int> layer_sizes;  // input dim, hidden dims..., output dim
    Activation activation = Activation::relu;
    Head head = Head::linear;
    double leaky_slope = 0.01;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
};

// Parameters live outside any tape as plain tensors; training stages them as
// leaves each step and reads gradients back out.
struct Mlp {
    MlpSpec spec;
    std::vector<Tensor> weights;  // weights[l]: (layer_sizes[l] x layer_sizes[l+1])
    std::vector<Tensor> biases;   // biases[l]:  (1 x layer_sizes[l+1])

    size_t param_count() const;
};

// He-uniform fan-in init for relu/leaky_relu, Glorot-uniform for
// tanh/sigmoid; biases start at zero. Deterministic per seed.
Mlp init_mlp(const MlpSpec& spec, uint64_t seed);

struct MlpVars {
    std::vector<ad::NodeId> weights;
    std::vector<ad::NodeId> biases;
    std::vector<ad::NodeId> all() const;
};

MlpVars stage_params(ad::Tape& t, const Mlp& m);

// Rows of x are independent samples; returns the head output (n x d_out).
ad::NodeId forward_mlp(ad::Tape& t, const MlpSpec& spec, const MlpVars& params, ad::NodeId x);

struct StagedForward {
    MlpVars params;
    ad::NodeId input;
    ad::NodeId output;
};
StagedForward forward_mlp(ad::Tape& t, const Mlp& m, const Tensor& x);

// Per-sample gradient of a scalar-output network w.r.t. its input, for all
// rows in one reverse pass: rows do not interact, so the gradient of the
// batch sum splits into per-row input gradients. The result (n x d_in) is
// itself differentiable. Requires output shape (n x 1); project a vector
// output down to a scalar per row first.
ad::NodeId input_gradient(ad::Tape& t, ad::NodeId output, ad::NodeId x);

}  // namespace sobolev::nn
