#include "sobolev/tensor.hpp"

#include <Eigen/Core>

#include <cmath>

namespace sobolev {

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

using EMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EMapMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

Tensor matmul_values(const Tensor& a, const Tensor& b, bool ta, bool tb) {
    const int ar = ta ? a.cols() : a.rows();
    const int ac = ta ? a.rows() : a.cols();
    const int br = tb ? b.cols() : b.rows();
    const int bc = tb ? b.rows() : b.cols();
    if (ac != br)
        throw Error("matmul: incompatible shapes " + a.shape_str() + (ta ? "^T" : "") + " * " +
                    b.shape_str() + (tb ? "^T" : ""));
    Tensor c(ar, bc);
    EMap ma(a.data(), a.rows(), a.cols());
    EMap mb(b.data(), b.rows(), b.cols());
    EMapMut mc(c.data(), ar, bc);
    if (!ta && !tb)
        mc.noalias() = ma * mb;
    else if (ta && !tb)
        mc.noalias() = ma.transpose() * mb;
    else if (!ta && tb)
        mc.noalias() = ma * mb.transpose();
    else
        mc.noalias() = ma.transpose() * mb.transpose();
    return c;
}

}  // namespace sobolev
