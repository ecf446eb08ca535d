#pragma once

#include "sobolev/mlp.hpp"
#include "sobolev/rng.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sobolev {

enum class PointLoss { l2, l1 };

std::string to_string(PointLoss l);
PointLoss point_loss_from_string(const std::string& s);

// l2 means sum of squared component differences, l1 sum of absolute
// differences; both are then averaged over the batch. derivative_losses has
// one entry per derivative order included in the objective (its length is
// the order K), each scaled by derivative_weight.
struct LossSpec {
    PointLoss value_loss = PointLoss::l2;
    std::vector<PointLoss> derivative_losses;
    double derivative_weight = 1.0;

    int order() const { return int(derivative_losses.size()); }
};

// A supervised batch carrying whatever derivative information the target
// offers. target_grads stores per-sample Jacobians flattened row-major as
// (n x o*d): entry [i, a*d + k] is d target_a / d x_k at sample i.
// Second-order supervision is a direction and the Hessian-vector product
// along it, for scalar targets only.
struct SobolevBatch {
    Tensor inputs;   // n x d
    Tensor targets;  // n x o
    std::optional<Tensor> target_grads;     // n x (o*d)
    std::optional<Tensor> hvp_directions;   // n x d
    std::optional<Tensor> hvp_values;       // n x d

    int n() const { return inputs.rows(); }
    int input_dim() const { return inputs.cols(); }
    int output_dim() const { return targets.cols(); }
};

// Uniform draws from the unit sphere (normalised Gaussians; the measure-zero
// all-zeros draw is rejected and redrawn). In one dimension this degenerates
// to +-1.
std::vector<double> sample_sphere(Rng& rng, int dim);

class ProjectionSampler {
public:
    ProjectionSampler(int dim, uint64_t seed, int num_projections = 1);

    int dim() const { return dim_; }
    int num_projections() const { return num_; }
    std::vector<double> sample() { return sample_sphere(rng_, dim_); }

private:
    int dim_;
    int num_;
    Rng rng_;
};

struct LossGraph {
    ad::NodeId loss;
    nn::MlpVars params;  // staged parameter leaves, for the optimizer step
    std::vector<std::string> warnings;
};

// A model as a graph builder: given the staged input leaf (n x d), push the
// forward computation and return the output node (n x o). Any trainable
// leaves are the builder's own business.
using ModelFn = std::function<ad::NodeId(ad::Tape&, ad::NodeId)>;

// Value loss plus exact derivative-mismatch terms up to the order given by
// the spec. Requires the batch to carry matching derivative targets.
LossGraph sobolev_loss(ad::Tape& t, const ModelFn& model, const SobolevBatch& batch,
                       const LossSpec& spec);
LossGraph sobolev_loss(ad::Tape& t, const nn::Mlp& model, const SobolevBatch& batch,
                       const LossSpec& spec);

// First-order variant that matches random projections of the Jacobians
// instead of whole Jacobians: for each draw v on the unit sphere in output
// space, the model side is the input gradient of <output, v> and the target
// side is J^T v assembled from the stored Jacobian. Averaged over
// sampler.num_projections() draws. In expectation the derivative term is
// 1/o times the full one.
LossGraph stochastic_sobolev_loss(ad::Tape& t, const ModelFn& model, const SobolevBatch& batch,
                                  const LossSpec& spec, ProjectionSampler& sampler);
LossGraph stochastic_sobolev_loss(ad::Tape& t, const nn::Mlp& model, const SobolevBatch& batch,
                                  const LossSpec& spec, ProjectionSampler& sampler);

}  // namespace sobolev
