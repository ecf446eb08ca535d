#include "sobolev/sobolev_loss.hpp"

#include <cmath>

namespace sobolev {

std::string to_string(PointLoss l) { return l == PointLoss::l2 ? "l2" : "l1"; }

PointLoss point_loss_from_string(const std::string& s) {
    if (s == "l2") return PointLoss::l2;
    if (s == "l1") return PointLoss::l1;
    throw Error("unknown loss '" + s + "'");
}

std::vector<double> sample_sphere(Rng& rng, int dim) {
    if (dim <= 0) throw Error("sample_sphere: dimension must be positive");
    if (dim == 1) {
        // S^0 is {+1, -1}; normalising would only add rounding noise.
        double g = 0.0;
        while (g == 0.0) g = rng.normal();
        return {g < 0.0 ? -1.0 : 1.0};
    }
    std::vector<double> v(dim);
    double norm2 = 0.0;
    do {
        norm2 = 0.0;
        for (int i = 0; i < dim; ++i) {
            v[i] = rng.normal();
            norm2 += v[i] * v[i];
        }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

ProjectionSampler::ProjectionSampler(int dim, uint64_t seed, int num_projections)
    : dim_(dim), num_(num_projections), rng_(seed) {
    if (dim <= 0) throw Error("ProjectionSampler: dimension must be positive");
    if (num_projections <= 0) throw Error("ProjectionSampler: need at least one projection");
}

namespace {

// Mean over batch of the summed component mismatch.
ad::NodeId point_loss(ad::Tape& t, PointLoss kind, ad::NodeId a, ad::NodeId b, int n) {
    ad::NodeId diff = t.sub(a, b);
    ad::NodeId total = kind == PointLoss::l2 ? t.sum(t.square(diff)) : t.sum(t.abs(diff));
    return t.scale(total, 1.0 / double(n));
}

void validate_batch(const SobolevBatch& batch, const LossSpec& spec) {
    if (batch.inputs.rows() != batch.targets.rows())
        throw Error("sobolev_loss: inputs " + batch.inputs.shape_str() + " vs targets " +
                    batch.targets.shape_str());
    const int K = spec.order();
    if (K > 2) throw Error("sobolev_loss: derivative order " + std::to_string(K) + " not supported (max 2)");
    if (K >= 1) {
        if (!batch.target_grads)
            throw Error("sobolev_loss: order 1 requested but batch has no target gradients");
        const Tensor& tg = *batch.target_grads;
        if (tg.rows() != batch.n() || tg.cols() != batch.output_dim() * batch.input_dim())
            throw Error("sobolev_loss: target_grads " + tg.shape_str() + " does not match n x (o*d) = (" +
                        std::to_string(batch.n()) + "x" +
                        std::to_string(batch.output_dim() * batch.input_dim()) + ")");
    }
    if (K >= 2) {
        if (!batch.hvp_directions || !batch.hvp_values)
            throw Error("sobolev_loss: order 2 requested but batch has no Hessian-vector records");
        if (batch.output_dim() != 1)
            throw Error("sobolev_loss: second-order terms support scalar outputs only");
    }
}

// Stages the batch inputs, runs the model, checks the output shape.
std::pair<ad::NodeId, ad::NodeId> stage_forward(ad::Tape& t, const ModelFn& model,
                                                const SobolevBatch& batch) {
    ad::NodeId x = t.constant(batch.inputs);
    ad::NodeId out = model(t, x);
    const Tensor& ov = t.value(out);
    if (ov.rows() != batch.n() || ov.cols() != batch.output_dim())
        throw Error("sobolev_loss: model output " + ov.shape_str() + " does not match targets " +
                    batch.targets.shape_str());
    return {x, out};
}

// Gradient rows of output column a w.r.t. the inputs, one reverse pass.
ad::NodeId column_input_grad(ad::Tape& t, ad::NodeId out, ad::NodeId x, int col, int o) {
    if (o == 1) return nn::input_gradient(t, out, x);
    const int n = t.value(out).rows();
    Tensor sel = Tensor::zeros(n, o);
    for (int i = 0; i < n; ++i) sel(i, col) = 1.0;
    return ad::grad(t, t.sum(t.mul(out, t.constant(std::move(sel)))), x);
}

// Wraps an Mlp as a ModelFn over pre-staged parameters and reports the
// order-2 degeneracy of piecewise linear activations.
ModelFn mlp_model_fn(const nn::Mlp& model, const nn::MlpVars& params, const SobolevBatch& batch,
                     const LossSpec& spec, std::vector<std::string>& warnings) {
    if (model.spec.input_dim() != batch.input_dim() || model.spec.output_dim() != batch.output_dim())
        throw Error("sobolev_loss: model (" + std::to_string(model.spec.input_dim()) + "->" +
                    std::to_string(model.spec.output_dim()) + ") does not match batch (" +
                    std::to_string(batch.input_dim()) + "->" + std::to_string(batch.output_dim()) + ")");
    const bool pl = model.spec.activation == nn::Activation::relu ||
                    model.spec.activation == nn::Activation::leaky_relu;
    if (spec.order() >= 2 && pl)
        warnings.push_back(
            "order-2 term with a piecewise linear activation: the model Hessian is identically "
            "zero, so this term only compares zero against the target");
    const nn::MlpSpec mspec = model.spec;
    return [mspec, params](ad::Tape& t, ad::NodeId x) { return nn::forward_mlp(t, mspec, params, x); };
}

}  // namespace

LossGraph sobolev_loss(ad::Tape& t, const ModelFn& model, const SobolevBatch& batch,
                       const LossSpec& spec) {
    LossGraph lg;
    validate_batch(batch, spec);

    const int n = batch.n();
    const int d = batch.input_dim();
    const int o = batch.output_dim();

    auto [x, out] = stage_forward(t, model, batch);
    ad::NodeId targets = t.constant(batch.targets);
    ad::NodeId loss = point_loss(t, spec.value_loss, out, targets, n);

    if (spec.order() >= 1) {
        const Tensor& tg = *batch.target_grads;
        ad::NodeId dterm{};
        for (int a = 0; a < o; ++a) {
            ad::NodeId ga = column_input_grad(t, out, x, a, o);
            Tensor tga(n, d);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < d; ++k) tga(i, k) = tg(i, a * d + k);
            ad::NodeId term = point_loss(t, spec.derivative_losses[0], ga, t.constant(std::move(tga)), n);
            dterm = a == 0 ? term : t.add(dterm, term);
        }
        loss = t.add(loss, t.scale(dterm, spec.derivative_weight));
    }

    if (spec.order() >= 2) {
        ad::NodeId g = nn::input_gradient(t, out, x);
        ad::NodeId proj = t.sum(t.mul(g, t.constant(*batch.hvp_directions)));
        ad::NodeId hv = ad::grad(t, proj, x);
        ad::NodeId term = point_loss(t, spec.derivative_losses[1], hv, t.constant(*batch.hvp_values), n);
        loss = t.add(loss, t.scale(term, spec.derivative_weight));
    }

    lg.loss = loss;
    return lg;
}

LossGraph sobolev_loss(ad::Tape& t, const nn::Mlp& model, const SobolevBatch& batch,
                       const LossSpec& spec) {
    std::vector<std::string> warnings;
    nn::MlpVars params = nn::stage_params(t, model);
    ModelFn fn = mlp_model_fn(model, params, batch, spec, warnings);
    LossGraph lg = sobolev_loss(t, fn, batch, spec);
    lg.params = params;
    lg.warnings.insert(lg.warnings.begin(), warnings.begin(), warnings.end());
    return lg;
}

LossGraph stochastic_sobolev_loss(ad::Tape& t, const ModelFn& model, const SobolevBatch& batch,
                                  const LossSpec& spec, ProjectionSampler& sampler) {
    LossGraph lg;
    validate_batch(batch, spec);
    if (spec.order() > 1)
        throw Error("stochastic_sobolev_loss: only first-order projections are supported");
    if (sampler.dim() != batch.output_dim())
        throw Error("stochastic_sobolev_loss: sampler dimension " + std::to_string(sampler.dim()) +
                    " does not match output dim " + std::to_string(batch.output_dim()));

    const int n = batch.n();
    const int d = batch.input_dim();
    const int o = batch.output_dim();

    auto [x, out] = stage_forward(t, model, batch);
    ad::NodeId targets = t.constant(batch.targets);
    ad::NodeId loss = point_loss(t, spec.value_loss, out, targets, n);

    if (spec.order() == 1) {
        const Tensor& tg = *batch.target_grads;
        ad::NodeId dterm{};
        for (int j = 0; j < sampler.num_projections(); ++j) {
            const std::vector<double> v = sampler.sample();
            Tensor vcol(o, 1);
            for (int a = 0; a < o; ++a) vcol(a, 0) = v[a];
            ad::NodeId proj_out = t.matmul(out, t.constant(std::move(vcol)));
            ad::NodeId gm = nn::input_gradient(t, proj_out, x);

            // target side: J^T v per sample, assembled from stored Jacobians
            Tensor tproj(n, d);
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < d; ++k) {
                    double s = 0.0;
                    for (int a = 0; a < o; ++a) s += tg(i, a * d + k) * v[a];
                    tproj(i, k) = s;
                }
            ad::NodeId term =
                point_loss(t, spec.derivative_losses[0], gm, t.constant(std::move(tproj)), n);
            dterm = j == 0 ? term : t.add(dterm, term);
        }
        dterm = t.scale(dterm, 1.0 / double(sampler.num_projections()));
        loss = t.add(loss, t.scale(dterm, spec.derivative_weight));
    }

    lg.loss = loss;
    return lg;
}

LossGraph stochastic_sobolev_loss(ad::Tape& t, const nn::Mlp& model, const SobolevBatch& batch,
                                  const LossSpec& spec, ProjectionSampler& sampler) {
    std::vector<std::string> warnings;
    nn::MlpVars params = nn::stage_params(t, model);
    ModelFn fn = mlp_model_fn(model, params, batch, spec, warnings);
    LossGraph lg = stochastic_sobolev_loss(t, fn, batch, spec, sampler);
    lg.params = params;
    lg.warnings.insert(lg.warnings.begin(), warnings.begin(), warnings.end());
    return lg;
}

}  // namespace sobolev
