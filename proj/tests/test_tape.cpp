#include <doctest.h>

#include "sobolev/mlp.hpp"
#include "sobolev/numdiff.hpp"
#include "sobolev/rng.hpp"
#include "sobolev/tape.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace sobolev;
using ad::NodeId;
using ad::Tape;

namespace {

// Builds a scalar graph from a flat coordinate vector; used to finite-
// difference arbitrary tape expressions through a fresh tape per call.
using GraphFn = std::function<double(const std::vector<double>&)>;

GraphFn as_scalar_fn(std::function<NodeId(Tape&, NodeId)> build, int dim) {
    return [build, dim](const std::vector<double>& xs) {
        Tape t;
        Tensor x(1, dim);
        for (int i = 0; i < dim; ++i) x.at(i) = xs[i];
        NodeId out = build(t, t.leaf(std::move(x)));
        return t.value(out).at(0);
    };
}

std::vector<double> tape_grad_values(std::function<NodeId(Tape&, NodeId)> build,
                                     const std::vector<double>& xs) {
    Tape t;
    Tensor x(1, int(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) x.at(i) = xs[i];
    NodeId xn = t.leaf(std::move(x));
    NodeId out = build(t, xn);
    NodeId g = ad::grad(t, out, xn);
    const Tensor& gv = t.value(g);
    return {gv.storage().begin(), gv.storage().end()};
}

}  // namespace

TEST_CASE("forward evaluation of composite graphs") {
    Tape t;

    SUBCASE("product of scalars") {
        NodeId p = t.mul(t.leaf(Tensor::scalar(3.0)), t.leaf(Tensor::scalar(4.0)));
        CHECK(t.value(p).at(0) == 12.0);
    }

    SUBCASE("relu clamps negatives") {
        NodeId r = t.relu(t.leaf(Tensor::scalar(-2.0)));
        CHECK(t.value(r).at(0) == 0.0);
    }

    SUBCASE("ackley formula built from primitives vanishes at the origin") {
        const double two_pi = 2.0 * 3.141592653589793238462643383279;
        NodeId x = t.leaf(Tensor::scalar(0.0));
        NodeId y = t.leaf(Tensor::scalar(0.0));
        NodeId r = t.sqrt(t.scale(t.add(t.square(x), t.square(y)), 0.5));
        NodeId c = t.scale(t.add(t.cos(t.scale(x, two_pi)), t.cos(t.scale(y, two_pi))), 0.5);
        NodeId f = t.shift(t.sub(t.scale(t.exp(t.scale(r, -0.2)), -20.0), t.exp(c)),
                           std::exp(1.0) + 20.0);
        CHECK(std::fabs(t.value(f).at(0)) < 1e-12);
    }

    SUBCASE("values are computed once and immutable") {
        NodeId a = t.leaf(Tensor::scalar(2.5));
        NodeId b = t.exp(a);
        const double first = t.value(b).at(0);
        CHECK(t.value(b).at(0) == first);
    }

    SUBCASE("shape mismatch names both shapes") {
        NodeId a = t.leaf(Tensor::zeros(2, 3));
        NodeId b = t.leaf(Tensor::zeros(3, 2));
        CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("(2x3)"), Error);
        CHECK_THROWS_WITH_AS(t.matmul(a, a), doctest::Contains("(2x3)"), Error);
    }

    SUBCASE("non-finite forward value is rejected with the op name") {
        NodeId z = t.leaf(Tensor::scalar(0.0));
        CHECK_THROWS_WITH_AS(t.log(z), doctest::Contains("log"), Error);
    }
}

TEST_CASE("gradients of simple graphs") {
    SUBCASE("linear functional has constant gradient") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({5.0, -7.0}));
        NodeId f = t.dot(t.constant(Tensor::row({2.0, -1.0})), x);
        NodeId g = ad::grad(t, f, x);
        CHECK(t.value(g)(0, 0) == 2.0);
        CHECK(t.value(g)(0, 1) == -1.0);
    }

    SUBCASE("half squared norm has identity Jacobian") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({1.0, 2.0, 3.0}));
        NodeId f = t.scale(t.sum(t.square(x)), 0.5);
        NodeId g = ad::grad(t, f, x);
        CHECK(t.value(g)(0, 0) == doctest::Approx(1.0));
        CHECK(t.value(g)(0, 1) == doctest::Approx(2.0));
        CHECK(t.value(g)(0, 2) == doctest::Approx(3.0));
    }

    SUBCASE("styblinski-tang graph gradient matches finite differences") {
        auto build = [](Tape& t, NodeId x) {
            NodeId basis0 = t.constant(Tensor::row({1.0, 0.0}));
            NodeId basis1 = t.constant(Tensor::row({0.0, 1.0}));
            NodeId acc{};
            for (int i = 0; i < 2; ++i) {
                NodeId c = t.sum(t.mul(x, i == 0 ? basis0 : basis1));
                NodeId c2 = t.square(c);
                NodeId term = t.add(t.sub(t.mul(c2, c2), t.scale(c2, 16.0)), t.scale(c, 5.0));
                acc = i == 0 ? term : t.add(acc, term);
            }
            return t.scale(acc, 0.5);
        };
        const std::vector<double> x0 = {1.0, 1.0};
        auto fd = fd_grad(as_scalar_fn(build, 2), x0);
        auto got = tape_grad_values(build, x0);
        CHECK(grad_rel_err(got, fd) < 1e-6);
    }

    SUBCASE("non-scalar output is rejected") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({1.0, 2.0}));
        CHECK_THROWS_AS((void)ad::grad(t, t.square(x), x), Error);
    }

    SUBCASE("independent input yields a zero gradient node") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({1.0, 2.0}));
        NodeId y = t.leaf(Tensor::row({3.0, 4.0}));
        NodeId f = t.sum(t.square(x));
        NodeId g = ad::grad(t, f, y);
        CHECK(t.value(g).rows() == 1);
        CHECK(t.value(g).cols() == 2);
        CHECK(t.value(g).max_abs() == 0.0);
    }
}

TEST_CASE("finite-difference oracle sanity") {
    SUBCASE("quadratic") {
        auto f = [](const std::vector<double>& v) { return v[0] * v[0]; };
        auto g = fd_grad(f, {3.0});
        CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-9));
    }

    SUBCASE("booth at its minimum") {
        auto f = [](const std::vector<double>& v) {
            const double a = v[0] + 2 * v[1] - 7, b = 2 * v[0] + v[1] - 5;
            return a * a + b * b;
        };
        auto g = fd_grad(f, {1.0, 3.0});
        CHECK(std::fabs(g[0]) < 1e-6);
        CHECK(std::fabs(g[1]) < 1e-6);
    }

    SUBCASE("mccormick at the origin") {
        auto f = [](const std::vector<double>& v) {
            return std::sin(v[0] + v[1]) + (v[0] - v[1]) * (v[0] - v[1]) - 1.5 * v[0] + 2.5 * v[1] + 1.0;
        };
        auto g = fd_grad(f, {0.0, 0.0});
        CHECK(g[0] == doctest::Approx(-0.5).epsilon(1e-7));
        CHECK(g[1] == doctest::Approx(3.5).epsilon(1e-7));
    }
}

TEST_CASE("hessian-vector products") {
    SUBCASE("half squared norm has identity hessian") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({0.3, -1.2}));
        NodeId f = t.scale(t.sum(t.square(x)), 0.5);
        NodeId h = ad::hvp(t, f, x, Tensor::row({1.0, 0.0}));
        CHECK(t.value(h)(0, 0) == doctest::Approx(1.0));
        CHECK(t.value(h)(0, 1) == doctest::Approx(0.0));
    }

    SUBCASE("rosenbrock hessian column at (1,1)") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({1.0, 1.0}));
        NodeId c0 = t.sum(t.mul(x, t.constant(Tensor::row({1.0, 0.0}))));
        NodeId c1 = t.sum(t.mul(x, t.constant(Tensor::row({0.0, 1.0}))));
        NodeId f = t.add(t.scale(t.square(t.sub(c1, t.square(c0))), 100.0),
                         t.square(t.shift(c0, -1.0)));
        NodeId h = ad::hvp(t, f, x, Tensor::row({1.0, 0.0}));
        CHECK(t.value(h)(0, 0) == doctest::Approx(802.0).epsilon(1e-10));
        CHECK(t.value(h)(0, 1) == doctest::Approx(-400.0).epsilon(1e-10));
    }

    SUBCASE("relu network with linear head has exactly zero hvp") {
        nn::MlpSpec spec;
        spec.layer_sizes = {4, 16, 16, 1};
        spec.activation = nn::Activation::relu;
        nn::Mlp m = nn::init_mlp(spec, 11);
        Rng rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            Tape t;
            Tensor x(1, 4);
            for (int i = 0; i < 4; ++i) x.at(i) = rng.uniform(-2, 2);
            auto sf = nn::forward_mlp(t, m, x);
            Tensor v(1, 4);
            for (int i = 0; i < 4; ++i) v.at(i) = rng.normal();
            NodeId h = ad::hvp(t, sf.output, sf.input, v);
            CHECK(t.value(h).max_abs() == 0.0);
        }
    }

    SUBCASE("dimension mismatch is an error") {
        Tape t;
        NodeId x = t.leaf(Tensor::row({1.0, 2.0}));
        NodeId f = t.sum(t.square(x));
        CHECK_THROWS_AS((void)ad::hvp(t, f, x, Tensor::row({1.0})), Error);
    }
}

TEST_CASE("every primitive op agrees with finite differences at random points") {
    struct Case {
        const char* name;
        std::function<NodeId(Tape&, NodeId)> build;
        double lo, hi;
    };
    // Scalar reductions of each primitive; domains avoid kinks and poles.
    const std::vector<Case> cases = {
        {"add", [](Tape& t, NodeId x) { return t.sum(t.add(x, t.square(x))); }, -2, 2},
        {"sub", [](Tape& t, NodeId x) { return t.sum(t.sub(t.square(x), x)); }, -2, 2},
        {"mul", [](Tape& t, NodeId x) { return t.sum(t.mul(x, t.shift(x, 1.5))); }, -2, 2},
        {"inv", [](Tape& t, NodeId x) { return t.sum(t.inv(x)); }, 0.5, 2.5},
        {"scale_shift", [](Tape& t, NodeId x) { return t.sum(t.shift(t.scale(x, -1.7), 0.3)); }, -2, 2},
        {"relu", [](Tape& t, NodeId x) { return t.sum(t.relu(x)); }, 0.1, 2},
        {"leaky_relu", [](Tape& t, NodeId x) { return t.sum(t.leaky_relu(x, 0.01)); }, -2, -0.1},
        {"tanh", [](Tape& t, NodeId x) { return t.sum(t.tanh(x)); }, -2, 2},
        {"sigmoid", [](Tape& t, NodeId x) { return t.sum(t.sigmoid(x)); }, -2, 2},
        {"exp", [](Tape& t, NodeId x) { return t.sum(t.exp(x)); }, -1, 1},
        {"log", [](Tape& t, NodeId x) { return t.sum(t.log(x)); }, 0.5, 3},
        {"sqrt", [](Tape& t, NodeId x) { return t.sum(t.sqrt(x)); }, 0.5, 3},
        {"abs", [](Tape& t, NodeId x) { return t.sum(t.abs(x)); }, 0.2, 2},
        {"sin", [](Tape& t, NodeId x) { return t.sum(t.sin(x)); }, -3, 3},
        {"cos", [](Tape& t, NodeId x) { return t.sum(t.cos(x)); }, -3, 3},
        {"sum", [](Tape& t, NodeId x) { return t.square(t.sum(x)); }, -2, 2},
        {"rowsum", [](Tape& t, NodeId x) { return t.sum(t.square(t.rowsum(x))); }, -2, 2},
        {"colsum", [](Tape& t, NodeId x) { return t.sum(t.square(t.colsum(x))); }, -2, 2},
        {"bcast_full",
         [](Tape& t, NodeId x) {
             NodeId s = t.sum(x);
             NodeId w = t.constant(Tensor::row({0.5, -1.5, 2.0, 0.25}));
             return t.sum(t.mul(t.bcast_full(s, 1, 4), t.square(w)));
         },
         -2, 2},
        {"bcast_row",
         [](Tape& t, NodeId x) {
             NodeId b = t.bcast_row(x, 3);
             return t.sum(t.square(b));
         },
         -2, 2},
        {"bcast_col",
         [](Tape& t, NodeId x) {
             NodeId c = t.rowsum(x);
             return t.sum(t.square(t.bcast_col(c, 3)));
         },
         -2, 2},
        {"matmul",
         [](Tape& t, NodeId x) {
             NodeId w = t.constant(Tensor::row({0.7, -0.3, 1.1, 0.2}));
             return t.sum(t.square(t.matmul(x, w, false, true)));
         },
         -2, 2},
        {"log_softmax",
         [](Tape& t, NodeId x) {
             NodeId sel = t.constant(Tensor::row({1.0, 0.0, -2.0, 0.5}));
             return t.sum(t.mul(t.log_softmax_rows(x), sel));
         },
         -2, 2},
    };

    Rng rng(1234);
    for (const auto& c : cases) {
        CAPTURE(c.name);
        double worst = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> x0(4);
            for (double& v : x0) v = rng.uniform(c.lo, c.hi);
            auto got = tape_grad_values(c.build, x0);
            auto fd = fd_grad(as_scalar_fn(c.build, 4), x0);
            worst = std::max(worst, grad_rel_err(got, fd));
        }
        CHECK_MESSAGE(worst < 1e-6, c.name << " worst rel err " << worst);
    }
}

TEST_CASE("matmul transpose flag combinations differentiate correctly") {
    struct MmCase {
        bool ta, tb;
        int ar, ac, br, bc;
    };
    const MmCase cases[] = {
        {false, false, 2, 3, 3, 2},
        {true, false, 3, 2, 3, 2},
        {false, true, 2, 3, 2, 3},
        {true, true, 3, 2, 2, 3},
    };
    for (const auto& mc : cases) {
        CAPTURE(mc.ta);
        CAPTURE(mc.tb);
        const int na = mc.ar * mc.ac;
        const int nb = mc.br * mc.bc;
        auto eval = [&](const std::vector<double>& v) {
            Tape t;
            Tensor A(mc.ar, mc.ac), B(mc.br, mc.bc);
            for (int i = 0; i < na; ++i) A.at(i) = v[i];
            for (int i = 0; i < nb; ++i) B.at(i) = v[na + i];
            NodeId an = t.leaf(A), bn = t.leaf(B);
            return t.value(t.sum(t.square(t.matmul(an, bn, mc.ta, mc.tb)))).at(0);
        };
        std::vector<double> v0(na + nb);
        for (size_t i = 0; i < v0.size(); ++i) v0[i] = 0.3 * double(i) - 1.1;

        Tape t;
        Tensor A(mc.ar, mc.ac), B(mc.br, mc.bc);
        for (int i = 0; i < na; ++i) A.at(i) = v0[i];
        for (int i = 0; i < nb; ++i) B.at(i) = v0[na + i];
        NodeId an = t.leaf(A), bn = t.leaf(B);
        NodeId f = t.sum(t.square(t.matmul(an, bn, mc.ta, mc.tb)));
        const NodeId wrt[2] = {an, bn};
        auto gs = ad::grad(t, f, wrt);
        std::vector<double> got;
        for (NodeId g : gs)
            for (double x : t.value(g).storage()) got.push_back(x);
        auto fd = fd_grad(eval, v0);
        CHECK(grad_rel_err(got, fd) < 1e-6);
    }
}

TEST_CASE("grad of grad equals hvp against basis vectors") {
    // f(x) = <x, A tanh(x)> has a dense, smooth hessian.
    Tensor A(4, 4);
    Rng rng(5);
    for (size_t i = 0; i < A.size(); ++i) A.at(i) = rng.uniform(-1, 1);

    auto make_f = [&A](Tape& t, NodeId x) {
        NodeId ax = t.matmul(t.tanh(x), t.constant(A), false, true);
        return t.sum(t.mul(x, ax));
    };

    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> x0(4);
        for (double& v : x0) v = rng.uniform(-1.5, 1.5);

        for (int i = 0; i < 4; ++i) {
            // route 1: hvp against e_i
            Tape t1;
            Tensor x(1, 4);
            for (int k = 0; k < 4; ++k) x.at(k) = x0[k];
            NodeId xn1 = t1.leaf(x);
            Tensor ei(1, 4);
            ei.at(i) = 1.0;
            NodeId h1 = ad::hvp(t1, make_f(t1, xn1), xn1, ei);

            // route 2: differentiate the i-th component of the gradient
            Tape t2;
            NodeId xn2 = t2.leaf(x);
            NodeId g = ad::grad(t2, make_f(t2, xn2), xn2);
            NodeId gi = t2.sum(t2.mul(g, t2.constant(ei)));
            NodeId h2 = ad::grad(t2, gi, xn2);

            std::vector<double> a(t1.value(h1).storage());
            std::vector<double> b(t2.value(h2).storage());
            CHECK(grad_rel_err(a, b) < 1e-10);
        }
    }
}

TEST_CASE("tape rollback and rebuild is bit-identical") {
    nn::MlpSpec spec;
    spec.layer_sizes = {3, 8, 1};
    nn::Mlp m = nn::init_mlp(spec, 3);
    Tensor x(5, 3);
    Rng rng(4);
    for (size_t i = 0; i < x.size(); ++i) x.at(i) = rng.normal();

    Tape t;
    NodeId keep = t.exp(t.leaf(Tensor::row({0.5, -0.25})));
    const std::vector<double> kept_bits = t.value(keep).storage();

    const size_t mark = t.mark();
    auto sf1 = nn::forward_mlp(t, m, x);
    const std::vector<double> out1 = t.value(sf1.output).storage();
    const size_t grown = t.size();

    t.rollback(mark);
    CHECK(t.size() == mark);
    CHECK(t.value(keep).storage() == kept_bits);

    auto sf2 = nn::forward_mlp(t, m, x);
    CHECK(t.size() == grown);
    CHECK(t.value(sf2.output).storage() == out1);
    CHECK(t.value(keep).storage() == kept_bits);
}
