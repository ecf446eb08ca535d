#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace sobolev {

// Central-difference derivative oracles. Deliberately self-contained: these
// check the autodiff engine, so they must not use it.

inline double fd_partial(const std::function<double(const std::vector<double>&)>& f,
                         std::vector<double> x, size_t i, double h = 1e-5) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    return (fp - fm) / (2.0 * h);
}

inline std::vector<double> fd_grad(const std::function<double(const std::vector<double>&)>& f,
                                   const std::vector<double>& x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (size_t i = 0; i < x.size(); ++i) g[i] = fd_partial(f, x, i, h);
    return g;
}

// Relative error convention used by every gradient check in the project:
// absolute when the reference is small, relative otherwise.
inline double grad_rel_err(const std::vector<double>& got, const std::vector<double>& ref) {
    double num = 0.0, den_got = 0.0, den_ref = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - ref[i];
        num += d * d;
        den_got += got[i] * got[i];
        den_ref += ref[i] * ref[i];
    }
    double den = std::max(1.0, std::max(den_got, den_ref));
    return std::sqrt(num) / std::sqrt(den);
}

}  // namespace sobolev
