#include "sobolev/optimizer.hpp"

#include <cmath>

namespace sobolev::nn {

std::string to_string(OptKind k) { return k == OptKind::adam ? "adam" : "sgd_momentum"; }

OptKind opt_kind_from_string(const std::string& s) {
    if (s == "adam") return OptKind::adam;
    if (s == "sgd_momentum" || s == "sgd") return OptKind::sgd_momentum;
    throw Error("unknown optimizer '" + s + "'");
}

void optimizer_step(OptimizerState& st, const std::vector<Tensor*>& params,
                    const std::vector<Tensor>& grads) {
    if (params.size() != grads.size())
        throw Error("optimizer_step: " + std::to_string(params.size()) + " params vs " +
                    std::to_string(grads.size()) + " grads");
    if (st.m1.empty()) {
        for (const Tensor* p : params) st.m1.push_back(Tensor::zeros(p->rows(), p->cols()));
        if (st.kind == OptKind::adam)
            for (const Tensor* p : params) st.m2.push_back(Tensor::zeros(p->rows(), p->cols()));
    }
    if (st.m1.size() != params.size())
        throw Error("optimizer_step: parameter list changed size since first step");

    st.step += 1;
    if (st.kind == OptKind::adam) {
        const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
        const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
        for (size_t k = 0; k < params.size(); ++k) {
            Tensor& p = *params[k];
            const Tensor& g = grads[k];
            if (!p.same_shape(g))
                throw Error("optimizer_step: grad shape " + g.shape_str() + " vs param " + p.shape_str());
            Tensor& m = st.m1[k];
            Tensor& v = st.m2[k];
            for (size_t i = 0; i < p.size(); ++i) {
                const double gi = g.at(i);
                m.at(i) = st.beta1 * m.at(i) + (1.0 - st.beta1) * gi;
                v.at(i) = st.beta2 * v.at(i) + (1.0 - st.beta2) * gi * gi;
                const double mhat = m.at(i) / bc1;
                const double vhat = v.at(i) / bc2;
                p.at(i) -= st.lr * mhat / (std::sqrt(vhat) + st.epsilon);
            }
        }
    } else {
        // velocity = momentum * velocity + grad; param -= lr * velocity
        for (size_t k = 0; k < params.size(); ++k) {
            Tensor& p = *params[k];
            const Tensor& g = grads[k];
            if (!p.same_shape(g))
                throw Error("optimizer_step: grad shape " + g.shape_str() + " vs param " + p.shape_str());
            Tensor& vel = st.m1[k];
            for (size_t i = 0; i < p.size(); ++i) {
                vel.at(i) = st.momentum * vel.at(i) + g.at(i);
                p.at(i) -= st.lr * vel.at(i);
            }
        }
    }
}

}  // namespace sobolev::nn
