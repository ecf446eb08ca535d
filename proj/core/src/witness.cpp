#include "sobolev/witness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <utility>

namespace sobolev::wit {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Index of the segment containing x, valid only strictly inside the span.
size_t segment_index(const std::vector<double>& knots, double x) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    return size_t(it - knots.begin()) - 1;
}

}  // namespace

double PwlFunction::value(double x) const {
    if (x <= knots.front()) return values.front();
    if (x >= knots.back()) return values.back();
    const size_t i = segment_index(knots, x);
    if (x == knots[i]) return values[i];
    return values[i] + (x - knots[i]) * slopes[i];
}

double PwlFunction::derivative(double x) const {
    if (x < knots.front() || x >= knots.back()) return 0.0;
    return slopes[segment_index(knots, x)];
}

PwlFunction make_pwl(std::vector<double> knots, std::vector<double> values) {
    if (knots.empty()) throw Error("make_pwl: need at least one knot");
    if (knots.size() != values.size())
        throw Error("make_pwl: " + std::to_string(knots.size()) + " knots but " +
                    std::to_string(values.size()) + " values");
    for (size_t i = 0; i + 1 < knots.size(); ++i)
        if (!(knots[i] < knots[i + 1])) throw Error("make_pwl: knots must increase strictly");
    PwlFunction p;
    p.knots = std::move(knots);
    p.values = std::move(values);
    p.slopes.resize(p.knots.size() - 1);
    for (size_t i = 0; i + 1 < p.knots.size(); ++i)
        p.slopes[i] = (p.values[i + 1] - p.values[i]) / (p.knots[i + 1] - p.knots[i]);
    return p;
}

PwlFunction approximate_c1_by_pwl(const std::function<double(double)>& f,
                                  const std::function<double(double)>& fprime, double lo,
                                  double hi, double eps) {
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw Error("approximate_c1_by_pwl: need a nonempty bounded interval");
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw Error("approximate_c1_by_pwl: eps must be positive");

    constexpr int kProbe = 8192;  // dense-sampling resolution for M and the modulus
    const double span = hi - lo;
    const double step = span / kProbe;
    std::vector<double> deriv(size_t(kProbe) + 1);
    double sup_deriv = 0.0;
    for (int i = 0; i <= kProbe; ++i) {
        const double x = (i == kProbe) ? hi : lo + i * step;
        deriv[size_t(i)] = fprime(x);
        if (!std::isfinite(deriv[size_t(i)]))
            throw Error("approximate_c1_by_pwl: f' is not finite on the interval");
        sup_deriv = std::max(sup_deriv, std::abs(deriv[size_t(i)]));
    }

    // Largest sampled oscillation of f' over any window of width d.
    const auto modulus = [&](double d) {
        const int w = (d >= span) ? kProbe : int(d / step);
        std::deque<int> hi_q, lo_q;
        double worst = 0.0;
        for (int i = 0; i <= kProbe; ++i) {
            while (!hi_q.empty() && deriv[size_t(hi_q.back())] <= deriv[size_t(i)])
                hi_q.pop_back();
            hi_q.push_back(i);
            while (!lo_q.empty() && deriv[size_t(lo_q.back())] >= deriv[size_t(i)])
                lo_q.pop_back();
            lo_q.push_back(i);
            if (hi_q.front() < i - w) hi_q.pop_front();
            if (lo_q.front() < i - w) lo_q.pop_front();
            worst = std::max(worst, deriv[size_t(hi_q.front())] - deriv[size_t(lo_q.front())]);
        }
        return worst;
    };

    const auto underflow = [&](double d) { return !(d >= 1e-12 * span); };
    double delta1 = span;
    while (modulus(delta1) >= eps / 2.0) {
        delta1 /= 2.0;
        if (underflow(delta1))
            throw Error("approximate_c1_by_pwl: spacing underflow, eps is unattainably small");
    }
    double delta = delta1;
    if (sup_deriv > 0.0) delta = std::min(delta, eps / (2.0 * sup_deriv));
    if (underflow(delta) || span / delta > 1e6)
        throw Error("approximate_c1_by_pwl: spacing underflow, eps is unattainably small");

    const int nseg = int(span / delta) + 1;  // spacing lands strictly below delta
    const double spacing = span / nseg;
    std::vector<double> knots(size_t(nseg) + 1);
    std::vector<double> vals(size_t(nseg) + 1);
    for (int i = 0; i <= nseg; ++i) {
        knots[size_t(i)] = (i == nseg) ? hi : lo + i * spacing;
        vals[size_t(i)] = f(knots[size_t(i)]);
    }
    return make_pwl(std::move(knots), std::move(vals));
}

PwlFunction build_interpolant_1d(const InterpolantSpec& spec) {
    const size_t n = spec.points.size();
    if (n == 0) throw Error("build_interpolant_1d: no points");
    if (spec.target_values.size() != n || spec.target_derivs.size() != n)
        throw Error("build_interpolant_1d: points, values and derivatives must pair up");
    const double e = spec.half_width;
    if (!(e > 0.0) || !std::isfinite(e))
        throw Error("build_interpolant_1d: half_width must be positive");
    double min_gap = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(spec.points[i]) || !std::isfinite(spec.target_values[i]) ||
            !std::isfinite(spec.target_derivs[i]))
            throw Error("build_interpolant_1d: non-finite spec entry");
        if (i > 0) {
            if (!(spec.points[i - 1] < spec.points[i]))
                throw Error("build_interpolant_1d: points must increase strictly");
            min_gap = std::min(min_gap, spec.points[i] - spec.points[i - 1]);
        }
    }
    if (!(5.0 * e < min_gap))
        throw Error("build_interpolant_1d: half_width must stay under a fifth of the smallest "
                    "point gap");

    PwlFunction h;
    h.knots.reserve(5 * n);
    h.values.reserve(5 * n);
    h.slopes.reserve(5 * n);
    for (size_t i = 0; i < n; ++i) {
        const double s = spec.points[i];
        const double fv = spec.target_values[i];
        const double gv = spec.target_derivs[i];
        const double k0 = s - 2.0 * e, k1 = s - e, k3 = s + e, k4 = s + 2.0 * e;
        if (!(k0 < k1 && k1 < s && s < k3 && k3 < k4))
            throw Error("build_interpolant_1d: half_width vanishes at the scale of point " +
                        std::to_string(s));
        const double v1 = fv - gv * e;
        const double v3 = fv + gv * e;
        if (!h.knots.empty()) h.slopes.push_back(0.0);  // flat stretch between supports
        h.knots.insert(h.knots.end(), {k0, k1, s, k3, k4});
        h.values.insert(h.values.end(), {0.0, v1, fv, v3, 0.0});
        h.slopes.push_back(v1 / (k1 - k0));
        // Both half-segments carry the prescribed derivative exactly; the
        // difference quotient would be off by a rounding.
        h.slopes.push_back(gv);
        h.slopes.push_back(gv);
        h.slopes.push_back(-v3 / (k4 - k3));
    }
    for (size_t i = 0; i + 1 < h.knots.size(); ++i)
        if (!(h.knots[i] < h.knots[i + 1]))
            throw Error("build_interpolant_1d: bump knots collide between points");
    return h;
}

nn::Mlp pwl_to_relu_net(const PwlFunction& p) {
    const int n = int(p.knots.size());
    if (n < 1) throw Error("pwl_to_relu_net: the function has no knots");
    nn::Mlp net;
    net.spec.layer_sizes = {1, n, 1};
    net.spec.activation = nn::Activation::relu;
    net.spec.head = nn::Head::linear;
    net.weights = {Tensor::ones(1, n), Tensor(n, 1)};
    net.biases = {Tensor(1, n), Tensor(1, 1)};
    for (int i = 0; i < n; ++i) {
        net.biases[0](0, i) = -p.knots[size_t(i)];
        const double left = (i == 0) ? 0.0 : p.slopes[size_t(i) - 1];
        const double right = (i == n - 1) ? 0.0 : p.slopes[size_t(i)];
        net.weights[1](i, 0) = right - left;
    }
    net.biases[1](0, 0) = p.values.front();
    return net;
}

double gaussian_density(const GaussianParams& g, double x) {
    if (!(g.sigma2 > 0.0)) throw Error("gaussian_density: sigma2 must be positive");
    const double d = x - g.mu;
    return std::exp(-d * d / (2.0 * g.sigma2)) / std::sqrt(kTwoPi * g.sigma2);
}

double gaussian_density_derivative(const GaussianParams& g, double x) {
    return -(x - g.mu) / g.sigma2 * gaussian_density(g, x);
}

GaussianParams recover_gaussian(double x, double alpha, double beta) {
    if (!std::isfinite(x) || !std::isfinite(alpha) || !std::isfinite(beta) || !(alpha > 0.0))
        throw Error("recover_gaussian: need finite inputs with a positive density value");
    const double ratio = beta / alpha;  // equals (mu - x) / sigma^2 for a true pair
    const double ratio2 = ratio * ratio;
    if (!std::isfinite(ratio2)) throw Error("recover_gaussian: not a Gaussian value/derivative pair");
    const double target = std::log(kTwoPi) + 2.0 * std::log(alpha);
    // Strictly decreasing in u = ln sigma^2, so bisection cannot stall.
    const auto lhs = [&](double u) { return -u - ratio2 * std::exp(u); };

    double u_lo = std::log(1e-12);
    double u_hi = std::log(1e12);
    for (int i = 0; lhs(u_lo) < target; ++i) {
        u_lo -= std::numbers::ln2;
        if (i > 4000) throw Error("recover_gaussian: not a Gaussian value/derivative pair");
    }
    for (int i = 0; lhs(u_hi) > target; ++i) {
        u_hi += std::numbers::ln2;
        if (i > 4000) throw Error("recover_gaussian: not a Gaussian value/derivative pair");
    }
    for (int i = 0; i < 200 && u_hi - u_lo > 1e-14; ++i) {
        const double u_mid = 0.5 * (u_lo + u_hi);
        if (lhs(u_mid) >= target)
            u_lo = u_mid;
        else
            u_hi = u_mid;
    }
    const double sigma2 = std::exp(0.5 * (u_lo + u_hi));
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
        throw Error("recover_gaussian: not a Gaussian value/derivative pair");
    GaussianParams out{x + sigma2 * ratio, sigma2};
    if (!std::isfinite(out.mu)) throw Error("recover_gaussian: derivative ratio overflows the mean");
    const double alpha_back = gaussian_density(out, x);
    const double beta_back = gaussian_density_derivative(out, x);
    const double beta_scale = std::max(std::abs(beta), alpha);
    if (std::abs(alpha_back - alpha) > 1e-9 * alpha || std::abs(beta_back - beta) > 1e-9 * beta_scale)
        throw Error("recover_gaussian: not a Gaussian value/derivative pair");
    return out;
}

}  // namespace sobolev::wit
