#include "sobolev/benchmarks.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace sobolev::bench {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kTwoPi = 2.0 * kPi;
// Distance from a non-differentiable locus below which samples are redrawn
// and gradient evaluation refuses to answer.
constexpr double kLocusEps = 1e-9;

}  // namespace

std::string to_string(Fn f) {
    switch (f) {
        case Fn::ackley: return "ackley";
        case Fn::beale: return "beale";
        case Fn::booth: return "booth";
        case Fn::bukin: return "bukin";
        case Fn::mccormick: return "mccormick";
        case Fn::rosenbrock: return "rosenbrock";
        case Fn::styblinski_tang: return "styblinski_tang";
    }
    return "?";
}

Fn fn_from_string(const std::string& s) {
    for (Fn f : all_fns)
        if (to_string(f) == s) return f;
    throw Error("unknown benchmark function '" + s + "'");
}

Domain domain(Fn f) {
    switch (f) {
        case Fn::ackley: return {-5, 5, -5, 5};
        case Fn::beale: return {-4.5, 4.5, -4.5, 4.5};
        case Fn::booth: return {-10, 10, -10, 10};
        case Fn::bukin: return {-15, -5, -3, 3};
        case Fn::mccormick: return {-1.5, 4, -3, 4};
        case Fn::rosenbrock: return {-2, 2, -2, 2};
        case Fn::styblinski_tang: return {-5, 5, -5, 5};
    }
    throw Error("unknown benchmark function");
}

namespace {

void check_domain(Fn f, double x, double y) {
    const Domain d = domain(f);
    if (!d.contains(x, y)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: point (%g, %g) outside domain [%g, %g] x [%g, %g]",
                      to_string(f).c_str(), x, y, d.xlo, d.xhi, d.ylo, d.yhi);
        throw Error(buf);
    }
}

double sq(double v) { return v * v; }

}  // namespace

// The loci are bukin's square-root ridge and fold and ackley's cone tip.
bool near_singular(Fn f, double x, double y, double eps) {
    switch (f) {
        case Fn::bukin: return std::fabs(y - x * x / 100.0) < eps || std::fabs(x + 10.0) < eps;
        case Fn::ackley: return std::sqrt(x * x + y * y) < eps;
        default: return false;
    }
}

double eval_benchmark(Fn f, double x, double y) {
    check_domain(f, x, y);
    switch (f) {
        case Fn::ackley: {
            const double r = std::sqrt(0.5 * (x * x + y * y));
            const double c = 0.5 * (std::cos(kTwoPi * x) + std::cos(kTwoPi * y));
            return -20.0 * std::exp(-0.2 * r) - std::exp(c) + std::exp(1.0) + 20.0;
        }
        case Fn::beale: {
            const double u1 = 1.5 - x + x * y;
            const double u2 = 2.25 - x + x * y * y;
            const double u3 = 2.625 - x + x * y * y * y;
            return sq(u1) + sq(u2) + sq(u3);
        }
        case Fn::booth:
            return sq(x + 2 * y - 7) + sq(2 * x + y - 5);
        case Fn::bukin:
            return 100.0 * std::sqrt(std::fabs(y - x * x / 100.0)) + 0.01 * std::fabs(x + 10.0);
        case Fn::mccormick:
            return std::sin(x + y) + sq(x - y) - 1.5 * x + 2.5 * y + 1.0;
        case Fn::rosenbrock:
            return 100.0 * sq(y - x * x) + sq(x - 1.0);
        case Fn::styblinski_tang: {
            auto term = [](double v) { return v * v * v * v - 16.0 * v * v + 5.0 * v; };
            return 0.5 * (term(x) + term(y));
        }
    }
    throw Error("unknown benchmark function");
}

std::array<double, 2> grad_benchmark(Fn f, double x, double y) {
    check_domain(f, x, y);
    if (near_singular(f, x, y, kLocusEps)) {
        char buf[120];
        std::snprintf(buf, sizeof buf, "%s: gradient undefined at (%.17g, %.17g)",
                      to_string(f).c_str(), x, y);
        throw Error(buf);
    }
    switch (f) {
        case Fn::ackley: {
            const double r = std::sqrt(0.5 * (x * x + y * y));
            const double c = 0.5 * (std::cos(kTwoPi * x) + std::cos(kTwoPi * y));
            const double e1 = std::exp(-0.2 * r);
            const double e2 = std::exp(c);
            // d/dx of -20 e^{-0.2 r}: 2 e^{-0.2 r} x / r
            return {2.0 * e1 * x / r + kPi * std::sin(kTwoPi * x) * e2,
                    2.0 * e1 * y / r + kPi * std::sin(kTwoPi * y) * e2};
        }
        case Fn::beale: {
            const double u1 = 1.5 - x + x * y;
            const double u2 = 2.25 - x + x * y * y;
            const double u3 = 2.625 - x + x * y * y * y;
            return {2 * u1 * (y - 1) + 2 * u2 * (y * y - 1) + 2 * u3 * (y * y * y - 1),
                    2 * u1 * x + 4 * u2 * x * y + 6 * u3 * x * y * y};
        }
        case Fn::booth:
            return {2 * (x + 2 * y - 7) + 4 * (2 * x + y - 5), 4 * (x + 2 * y - 7) + 2 * (2 * x + y - 5)};
        case Fn::bukin: {
            const double s = y - x * x / 100.0;
            const double sgn_s = s > 0 ? 1.0 : -1.0;
            const double root = std::sqrt(std::fabs(s));
            return {-x * sgn_s / root + 0.01 * (x + 10.0 > 0 ? 1.0 : -1.0), 50.0 * sgn_s / root};
        }
        case Fn::mccormick: {
            const double c = std::cos(x + y);
            return {c + 2 * (x - y) - 1.5, c - 2 * (x - y) + 2.5};
        }
        case Fn::rosenbrock:
            return {-400.0 * x * (y - x * x) + 2.0 * (x - 1.0), 200.0 * (y - x * x)};
        case Fn::styblinski_tang: {
            auto dterm = [](double v) { return 0.5 * (4 * v * v * v - 32 * v + 5); };
            return {dterm(x), dterm(y)};
        }
    }
    throw Error("unknown benchmark function");
}

std::vector<std::array<double, 2>> sample_domain(Fn f, int n, Rng& rng) {
    if (n <= 0) throw Error("sample_domain: n must be positive");
    const Domain d = domain(f);
    std::vector<std::array<double, 2>> pts;
    pts.reserve(n);
    while (int(pts.size()) < n) {
        const double x = rng.uniform(d.xlo, d.xhi);
        const double y = rng.uniform(d.ylo, d.yhi);
        if (near_singular(f, x, y, kLocusEps)) continue;
        pts.push_back({x, y});
    }
    return pts;
}

SobolevBatch make_benchmark_batch(Fn f, int n, Rng& rng) {
    const auto pts = sample_domain(f, n, rng);
    SobolevBatch b;
    b.inputs = Tensor(n, 2);
    b.targets = Tensor(n, 1);
    Tensor grads(n, 2);
    for (int i = 0; i < n; ++i) {
        const auto [x, y] = pts[i];
        b.inputs(i, 0) = x;
        b.inputs(i, 1) = y;
        b.targets(i, 0) = eval_benchmark(f, x, y);
        const auto g = grad_benchmark(f, x, y);
        grads(i, 0) = g[0];
        grads(i, 1) = g[1];
    }
    b.target_grads = std::move(grads);
    return b;
}

void dump_benchmark_grid(Fn f, int nx, int ny, std::ostream& out) {
    if (nx < 2 || ny < 2) throw Error("dump_benchmark_grid: need at least a 2x2 lattice");
    const Domain d = domain(f);
    out << "x,y,f,fx,fy\n";
    char buf[200];
    for (int j = 0; j < ny; ++j) {
        const double y = d.ylo + (d.yhi - d.ylo) * double(j) / double(ny - 1);
        for (int i = 0; i < nx; ++i) {
            const double x = d.xlo + (d.xhi - d.xlo) * double(i) / double(nx - 1);
            const double v = eval_benchmark(f, x, y);
            if (near_singular(f, x, y, kLocusEps)) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,,\n", x, y, v);
            } else {
                const auto g = grad_benchmark(f, x, y);
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", x, y, v, g[0], g[1]);
            }
            out << buf;
        }
    }
}

}  // namespace sobolev::bench
