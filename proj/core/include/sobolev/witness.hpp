#pragma once

#include "sobolev/mlp.hpp"

#include <functional>
#include <vector>

namespace sobolev::wit {

// Continuous piecewise-linear function: linear interpolation between
// adjacent knots, constant extrapolation outside the knot span. Slopes are
// stored per segment and are the canonical derivative. make_pwl derives
// them as difference quotients; constructions that must hit prescribed
// derivatives exactly write them in directly, so a stored slope may differ
// from its quotient by a rounding.
struct PwlFunction {
    std::vector<double> knots;   // strictly increasing, size >= 1
    std::vector<double> values;  // one per knot
    std::vector<double> slopes;  // one per segment, size knots.size() - 1

    // Exact knot hits return the stored value, so interpolation noise never
    // reaches prescribed targets.
    double value(double x) const;
    // Slope of the segment to the right of x; zero outside the knot span
    // and at the last knot, where extrapolation is constant.
    double derivative(double x) const;

    int segments() const { return int(knots.size()) - 1; }
};

// Difference-quotient slopes. Knots must be strictly increasing and paired
// one-to-one with values.
PwlFunction make_pwl(std::vector<double> knots, std::vector<double> values);

// Interpolation data for build_interpolant_1d: hit value f_i and derivative
// g_i at each sigma_i, using bumps supported on [sigma_i - 2e, sigma_i + 2e].
struct InterpolantSpec {
    std::vector<double> points;         // strictly increasing
    std::vector<double> target_values;
    std::vector<double> target_derivs;
    double half_width = 0.0;            // must stay under a fifth of the smallest gap
};

// Grid interpolant of a C1 function on [lo, hi] with sup|f - p| <= eps and
// sup|f' - p'| <= eps away from knots. Spacing is min(delta1, eps / (2 M)):
// M is the sampled sup of |f'| and delta1 comes from halving until the
// sampled modulus of continuity of f' drops below eps / 2 (the factor 2 is
// a safety margin; the moduli are dense-grid estimates, not proofs).
PwlFunction approximate_c1_by_pwl(const std::function<double(double)>& f,
                                  const std::function<double(double)>& fprime, double lo,
                                  double hi, double eps);

// Sum of disjoint three-segment bumps, one per spec point: the middle
// segment passes through (sigma_i, f_i) with slope exactly g_i, the sides
// ramp to zero at sigma_i -+ 2e. Zero between and outside supports, so
// value(sigma_i) == f_i and derivative(sigma_i) == g_i hold bitwise.
PwlFunction build_interpolant_1d(const InterpolantSpec& spec);

// Single-hidden-layer ReLU network, one unit per knot: unit i kinks at
// knot i with the slope change there (both extrapolation slopes are zero).
// Equal to p on the whole line up to summation roundoff.
nn::Mlp pwl_to_relu_net(const PwlFunction& p);

struct GaussianParams {
    double mu = 0.0;
    double sigma2 = 1.0;  // positive
};

double gaussian_density(const GaussianParams& g, double x);
double gaussian_density_derivative(const GaussianParams& g, double x);

// Identifies the unique Gaussian whose density at x is alpha with density
// derivative beta: one (value, derivative) pair determines the family.
// Solves -ln s - (beta/alpha)^2 s = 2 ln(sqrt(2 pi) alpha) for s = sigma^2
// by bisection on ln s (the left side is strictly decreasing; bracket grown
// geometrically from [1e-12, 1e12]), then mu = x + s beta / alpha. Inputs
// whose round-trip misses (alpha, beta) by more than 1e-9 relative are
// rejected as not a Gaussian value/derivative pair.
GaussianParams recover_gaussian(double x, double alpha, double beta);

}  // namespace sobolev::wit
