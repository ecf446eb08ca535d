#pragma once

#include "sobolev/rng.hpp"
#include "sobolev/sobolev_loss.hpp"
#include "sobolev/tensor.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace sobolev::bench {

// Two-dimensional optimisation test functions used as regression targets,
// each with a hand-derived gradient and the rectangle it is sampled from.
enum class Fn { ackley, beale, booth, bukin, mccormick, rosenbrock, styblinski_tang };

inline constexpr std::array<Fn, 7> all_fns = {Fn::ackley,    Fn::beale,      Fn::booth,
                                              Fn::bukin,     Fn::mccormick,  Fn::rosenbrock,
                                              Fn::styblinski_tang};

std::string to_string(Fn f);
Fn fn_from_string(const std::string& s);

struct Domain {
    double xlo, xhi, ylo, yhi;
    bool contains(double x, double y) const { return x >= xlo && x <= xhi && y >= ylo && y <= yhi; }
};

Domain domain(Fn f);

// Value and gradient at an in-domain point. Evaluation outside the domain is
// an error: the domains are part of the experiment definition, not a hint.
// grad_benchmark additionally rejects the measure-zero loci where a function
// is not differentiable (bukin's ridge y = 0.01 x^2 and fold x = -10,
// ackley's cone tip at the origin).
double eval_benchmark(Fn f, double x, double y);
std::array<double, 2> grad_benchmark(Fn f, double x, double y);

// True within eps of a non-differentiable locus (the loci grad_benchmark
// rejects at eps = 1e-9).
bool near_singular(Fn f, double x, double y, double eps = 1e-9);

// n uniform points from the domain; points too close to a non-differentiable
// locus are redrawn so every sample has a usable gradient.
std::vector<std::array<double, 2>> sample_domain(Fn f, int n, Rng& rng);

// Batch with values and exact gradients, ready for Sobolev training.
SobolevBatch make_benchmark_batch(Fn f, int n, Rng& rng);

// Lattice dump "x,y,f,fx,fy" (CSV with header), nx by ny points including
// the domain corners. Gradient columns are empty at non-differentiable
// points.
void dump_benchmark_grid(Fn f, int nx, int ny, std::ostream& out);

}  // namespace sobolev::bench
