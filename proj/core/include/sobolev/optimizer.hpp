#pragma once

#include "sobolev/tensor.hpp"

#include <string>
#include <vector>

namespace sobolev::nn {

enum class OptKind { adam, sgd_momentum };

std::string to_string(OptKind k);
OptKind opt_kind_from_string(const std::string& s);

// First-order optimizer over a flat list of parameter tensors. Moment
// buffers are lazily shaped on the first step and keyed by position, so the
// parameter list must be presented in the same order every step.
struct OptimizerState {
    OptKind kind = OptKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double momentum = 0.9;
    long step = 0;

    std::vector<Tensor> m1;  // adam first moment / sgd velocity
    std::vector<Tensor> m2;  // adam second moment
};

void optimizer_step(OptimizerState& st, const std::vector<Tensor*>& params,
                    const std::vector<Tensor>& grads);

}  // namespace sobolev::nn
