#include <doctest.h>

#include "sobolev/numdiff.hpp"
#include "sobolev/sobolev_loss.hpp"

#include <cmath>
#include <vector>

using namespace sobolev;
using ad::NodeId;
using ad::Tape;

namespace {

nn::MlpSpec spec_of(std::vector<int> sizes, nn::Activation act = nn::Activation::tanh) {
    nn::MlpSpec s;
    s.layer_sizes = std::move(sizes);
    s.activation = act;
    return s;
}

LossSpec loss_spec(int order, double alpha = 1.0, PointLoss value = PointLoss::l2,
                   PointLoss deriv = PointLoss::l2) {
    LossSpec s;
    s.value_loss = value;
    s.derivative_losses.assign(size_t(order), deriv);
    s.derivative_weight = alpha;
    return s;
}

// Targets and per-column input gradients produced by the model itself, so a
// loss against them must vanish.
SobolevBatch batch_from_model(const nn::Mlp& m, const Tensor& xs) {
    SobolevBatch b;
    b.inputs = xs;
    const int n = xs.rows();
    const int d = xs.cols();
    const int o = m.spec.output_dim();
    Tape t;
    auto sf = nn::forward_mlp(t, m, xs);
    b.targets = t.value(sf.output);
    Tensor tg(n, o * d);
    for (int a = 0; a < o; ++a) {
        NodeId ga;
        if (o == 1) {
            ga = nn::input_gradient(t, sf.output, sf.input);
        } else {
            Tensor sel = Tensor::zeros(n, o);
            for (int i = 0; i < n; ++i) sel(i, a) = 1.0;
            ga = ad::grad(t, t.sum(t.mul(sf.output, t.constant(std::move(sel)))), sf.input);
        }
        const Tensor& gv = t.value(ga);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < d; ++k) tg(i, a * d + k) = gv(i, k);
    }
    b.target_grads = std::move(tg);
    return b;
}

SobolevBatch random_batch(Rng& rng, int n, int d, int o, bool with_grads, bool with_hvps = false) {
    SobolevBatch b;
    b.inputs = Tensor(n, d);
    b.targets = Tensor(n, o);
    for (size_t i = 0; i < b.inputs.size(); ++i) b.inputs.at(i) = rng.uniform(-1, 1);
    for (size_t i = 0; i < b.targets.size(); ++i) b.targets.at(i) = rng.uniform(-1, 1);
    if (with_grads) {
        Tensor tg(n, o * d);
        for (size_t i = 0; i < tg.size(); ++i) tg.at(i) = rng.uniform(-1, 1);
        b.target_grads = std::move(tg);
    }
    if (with_hvps) {
        Tensor dir(n, d), hv(n, d);
        for (size_t i = 0; i < dir.size(); ++i) dir.at(i) = rng.uniform(-1, 1);
        for (size_t i = 0; i < hv.size(); ++i) hv.at(i) = rng.uniform(-1, 1);
        b.hvp_directions = std::move(dir);
        b.hvp_values = std::move(hv);
    }
    return b;
}

std::vector<double> flatten_params(const nn::Mlp& m) {
    std::vector<double> v;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        const auto& w = m.weights[l].storage();
        const auto& b = m.biases[l].storage();
        v.insert(v.end(), w.begin(), w.end());
        v.insert(v.end(), b.begin(), b.end());
    }
    return v;
}

void unflatten_params(nn::Mlp& m, const std::vector<double>& v) {
    size_t p = 0;
    for (size_t l = 0; l < m.weights.size(); ++l) {
        for (size_t i = 0; i < m.weights[l].size(); ++i) m.weights[l].at(i) = v[p++];
        for (size_t i = 0; i < m.biases[l].size(); ++i) m.biases[l].at(i) = v[p++];
    }
    REQUIRE(p == v.size());
}

// Analytic parameter gradient, flattened in the same order.
std::vector<double> analytic_theta_grad(const nn::Mlp& m, const LossGraph& lg, Tape& t) {
    auto gids = ad::grad(t, lg.loss, lg.params.all());
    std::vector<double> out;
    (void)m;
    for (NodeId g : gids) {
        const auto& s = t.value(g).storage();
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

}  // namespace

TEST_CASE("unit sphere sampling") {
    SUBCASE("one dimension degenerates to a sign") {
        Rng rng(1);
        bool plus = false, minus = false;
        for (int i = 0; i < 100; ++i) {
            auto v = sample_sphere(rng, 1);
            REQUIRE(v.size() == 1);
            CHECK(std::fabs(v[0]) == 1.0);
            (v[0] > 0 ? plus : minus) = true;
        }
        CHECK(plus);
        CHECK(minus);
    }

    SUBCASE("unit norm in several dimensions") {
        Rng rng(2);
        for (int d : {2, 5, 17}) {
            for (int i = 0; i < 100; ++i) {
                auto v = sample_sphere(rng, d);
                double n2 = 0.0;
                for (double x : v) n2 += x * x;
                CHECK(std::fabs(std::sqrt(n2) - 1.0) < 1e-12);
            }
        }
    }

    SUBCASE("moments in four dimensions") {
        Rng rng(3);
        const int N = 100000;
        std::vector<double> mean(4, 0.0), second(4, 0.0);
        for (int i = 0; i < N; ++i) {
            auto v = sample_sphere(rng, 4);
            for (int k = 0; k < 4; ++k) {
                mean[k] += v[k];
                second[k] += v[k] * v[k];
            }
        }
        for (int k = 0; k < 4; ++k) {
            CHECK(std::fabs(mean[k] / N) < 0.02);
            CHECK(std::fabs(second[k] / N - 0.25) < 0.25 * 0.02);
        }
    }

    SUBCASE("projection of a fixed vector averages to its norm over dimension") {
        Rng rng(4);
        const int d = 6;
        std::vector<double> a(d);
        double a2 = 0.0;
        for (double& x : a) {
            x = rng.uniform(-2, 2);
            a2 += x * x;
        }
        const int N = 100000;
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            auto v = sample_sphere(rng, d);
            double dot = 0.0;
            for (int k = 0; k < d; ++k) dot += a[k] * v[k];
            acc += dot * dot;
        }
        const double expect = a2 / d;
        CHECK(std::fabs(acc / N - expect) < 0.02 * expect);
    }

    SUBCASE("sampler is seeded and validates its dimension") {
        ProjectionSampler s1(3, 77), s2(3, 77);
        CHECK(s1.sample() == s2.sample());
        CHECK(s1.sample() == s2.sample());
        CHECK_THROWS_AS(ProjectionSampler(0, 1), Error);
        Rng rng(5);
        CHECK_THROWS_AS(sample_sphere(rng, 0), Error);
    }
}

TEST_CASE("full sobolev loss") {
    SUBCASE("squaring model at x=2 against zero targets") {
        ModelFn square = [](Tape& t, NodeId x) { return t.square(x); };
        SobolevBatch b;
        b.inputs = Tensor::scalar(2.0);
        b.targets = Tensor::scalar(0.0);
        b.target_grads = Tensor::scalar(0.0);
        Tape t;
        LossGraph lg = sobolev_loss(t, square, b, loss_spec(1));
        CHECK(t.value(lg.loss).at(0) == 32.0);

        Tape t0;
        LossGraph lg0 = sobolev_loss(t0, square, b, loss_spec(0));
        CHECK(t0.value(lg0.loss).at(0) == 16.0);
    }

    SUBCASE("model that reproduces targets and gradients has exactly zero loss") {
        for (int o : {1, 3}) {
            nn::Mlp m = nn::init_mlp(spec_of({2, 8, o}), 101 + o);
            Rng rng(11);
            Tensor xs(5, 2);
            for (size_t i = 0; i < xs.size(); ++i) xs.at(i) = rng.uniform(-1, 1);
            SobolevBatch b = batch_from_model(m, xs);
            Tape t;
            LossGraph lg = sobolev_loss(t, m, b, loss_spec(1));
            CHECK(t.value(lg.loss).at(0) == 0.0);
        }
    }

    SUBCASE("order zero reduces to the plain value loss") {
        nn::Mlp m = nn::init_mlp(spec_of({3, 6, 2}), 13);
        Rng rng(14);
        SobolevBatch b = random_batch(rng, 4, 3, 2, false);
        Tape t;
        auto sf = nn::forward_mlp(t, m, b.inputs);
        const Tensor& out = t.value(sf.output);

        double l2 = 0.0, l1 = 0.0;
        for (size_t i = 0; i < out.size(); ++i) {
            const double d = out.at(i) - b.targets.at(i);
            l2 += d * d;
            l1 += std::fabs(d);
        }
        l2 /= 4.0;
        l1 /= 4.0;

        Tape t2;
        LossGraph g2 = sobolev_loss(t2, m, b, loss_spec(0));
        CHECK(t2.value(g2.loss).at(0) == doctest::Approx(l2).epsilon(1e-14));
        Tape t1;
        LossGraph g1 = sobolev_loss(t1, m, b, loss_spec(0, 1.0, PointLoss::l1, PointLoss::l1));
        CHECK(t1.value(g1.loss).at(0) == doctest::Approx(l1).epsilon(1e-14));
    }

    SUBCASE("derivative weight scales only the derivative term") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 6, 1}), 15);
        Rng rng(16);
        SobolevBatch b = random_batch(rng, 5, 2, 1, true);
        auto eval = [&](double alpha) {
            Tape t;
            return t.value(sobolev_loss(t, m, b, loss_spec(1, alpha)).loss).at(0);
        };
        const double l0 = eval(0.0), l1 = eval(1.0), l2 = eval(2.0);
        const double dterm = l1 - l0;
        CHECK(dterm > 0.0);
        CHECK(l2 == doctest::Approx(l0 + 2.0 * dterm).epsilon(1e-12));
    }

    SUBCASE("loss is nonnegative for both point losses") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 6, 2}), 17);
        Rng rng(18);
        for (int rep = 0; rep < 10; ++rep) {
            SobolevBatch b = random_batch(rng, 3, 2, 2, true);
            Tape t;
            CHECK(t.value(sobolev_loss(t, m, b, loss_spec(1)).loss).at(0) > 0.0);
            Tape t1;
            CHECK(t1.value(
                      sobolev_loss(t1, m, b, loss_spec(1, 1.0, PointLoss::l1, PointLoss::l1)).loss)
                      .at(0) > 0.0);
        }
    }

    SUBCASE("second-order term compares stored products against the model") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 6, 1}, nn::Activation::tanh), 19);
        Rng rng(20);
        SobolevBatch b = random_batch(rng, 3, 2, 1, true, true);
        Tape t;
        LossGraph lg = sobolev_loss(t, m, b, loss_spec(2));
        CHECK(lg.warnings.empty());
        const double with_hvp = t.value(lg.loss).at(0);
        Tape t1;
        const double first_only = t1.value(sobolev_loss(t1, m, b, loss_spec(1)).loss).at(0);
        CHECK(with_hvp > first_only);
    }

    SUBCASE("piecewise linear activations surface a warning at order two") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 6, 1}, nn::Activation::relu), 21);
        Rng rng(22);
        SobolevBatch b = random_batch(rng, 3, 2, 1, true, true);
        Tape t;
        LossGraph lg = sobolev_loss(t, m, b, loss_spec(2));
        REQUIRE(lg.warnings.size() == 1);
        CHECK(lg.warnings[0].find("piecewise linear") != std::string::npos);

        // The model Hessian term is identically zero, so the order-2 part is
        // the mean squared norm of the stored products.
        double hand = 0.0;
        for (size_t i = 0; i < b.hvp_values->size(); ++i)
            hand += b.hvp_values->at(i) * b.hvp_values->at(i);
        hand /= 3.0;
        Tape t1;
        const double first_only = t1.value(sobolev_loss(t1, m, b, loss_spec(1)).loss).at(0);
        CHECK(t.value(lg.loss).at(0) ==
              doctest::Approx(first_only + hand).epsilon(1e-12));
    }

    SUBCASE("input validation") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 4, 1}), 23);
        Rng rng(24);
        SobolevBatch no_grads = random_batch(rng, 3, 2, 1, false);
        Tape t;
        CHECK_THROWS_AS((void)sobolev_loss(t, m, no_grads, loss_spec(1)), Error);

        SobolevBatch b = random_batch(rng, 3, 2, 1, true, true);
        CHECK_THROWS_AS((void)sobolev_loss(t, m, b, loss_spec(3)), Error);

        SobolevBatch wide = random_batch(rng, 3, 2, 2, true, true);
        nn::Mlp m2 = nn::init_mlp(spec_of({2, 4, 2}), 25);
        CHECK_THROWS_AS((void)sobolev_loss(t, m2, wide, loss_spec(2)), Error);

        SobolevBatch wrong = random_batch(rng, 3, 3, 1, true);
        CHECK_THROWS_AS((void)sobolev_loss(t, m, wrong, loss_spec(1)), Error);
    }
}

TEST_CASE("stochastic sobolev loss") {
    SUBCASE("scalar outputs reproduce the full loss exactly") {
        for (auto act : {nn::Activation::tanh, nn::Activation::relu}) {
            nn::Mlp m = nn::init_mlp(spec_of({3, 8, 1}, act), 31);
            Rng rng(32);
            SobolevBatch b = random_batch(rng, 4, 3, 1, true);
            Tape tf;
            const double full = tf.value(sobolev_loss(tf, m, b, loss_spec(1)).loss).at(0);
            for (uint64_t seed = 0; seed < 8; ++seed) {
                ProjectionSampler sampler(1, seed);
                Tape t;
                const double st =
                    t.value(stochastic_sobolev_loss(t, m, b, loss_spec(1), sampler).loss).at(0);
                CHECK(st == full);
            }
        }
    }

    SUBCASE("zero at an exact match for every seed") {
        nn::Mlp m1 = nn::init_mlp(spec_of({2, 6, 1}), 33);
        Rng rng(34);
        Tensor xs(4, 2);
        for (size_t i = 0; i < xs.size(); ++i) xs.at(i) = rng.uniform(-1, 1);
        SobolevBatch b1 = batch_from_model(m1, xs);
        for (uint64_t seed = 0; seed < 10; ++seed) {
            ProjectionSampler sampler(1, seed);
            Tape t;
            CHECK(t.value(stochastic_sobolev_loss(t, m1, b1, loss_spec(1), sampler).loss).at(0) ==
                  0.0);
        }

        nn::Mlp m3 = nn::init_mlp(spec_of({2, 6, 3}), 35);
        SobolevBatch b3 = batch_from_model(m3, xs);
        for (uint64_t seed = 0; seed < 10; ++seed) {
            ProjectionSampler sampler(3, seed);
            Tape t;
            CHECK(t.value(stochastic_sobolev_loss(t, m3, b3, loss_spec(1), sampler).loss).at(0) <
                  1e-24);
        }
    }

    SUBCASE("expectation of the projected term is the full term over output dimension") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 4, 2}), 37);
        Rng rng(38);
        SobolevBatch b = random_batch(rng, 2, 2, 2, true);

        Tape tf;
        const double value_term = tf.value(sobolev_loss(tf, m, b, loss_spec(0)).loss).at(0);
        const double full_dterm =
            tf.value(sobolev_loss(tf, m, b, loss_spec(1)).loss).at(0) - value_term;

        ProjectionSampler sampler(2, 39);
        Tape t;
        const int N = 100000;
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            const size_t mark = t.mark();
            acc += t.value(stochastic_sobolev_loss(t, m, b, loss_spec(1), sampler).loss).at(0) -
                   value_term;
            t.rollback(mark);
        }
        const double expect = full_dterm / 2.0;
        CHECK(std::fabs(acc / N - expect) < 0.02 * expect);
    }

    SUBCASE("input validation") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 4, 2}), 41);
        Rng rng(42);
        SobolevBatch b = random_batch(rng, 3, 2, 2, true, true);
        ProjectionSampler s2(2, 1);
        Tape t;
        CHECK_THROWS_AS((void)stochastic_sobolev_loss(t, m, b, loss_spec(2), s2), Error);
        ProjectionSampler s3(3, 1);
        CHECK_THROWS_AS((void)stochastic_sobolev_loss(t, m, b, loss_spec(1), s3), Error);
        SobolevBatch ng = random_batch(rng, 3, 2, 2, false);
        CHECK_THROWS_AS((void)stochastic_sobolev_loss(t, m, ng, loss_spec(1), s2), Error);
    }
}

TEST_CASE("parameter gradients of the losses match finite differences") {
    auto theta_check = [](nn::Mlp m, const SobolevBatch& b, const LossSpec& ls,
                          uint64_t stochastic_seed, bool stochastic) {
        auto eval = [&](const std::vector<double>& theta) {
            nn::Mlp mm = m;
            unflatten_params(mm, theta);
            Tape t;
            if (stochastic) {
                ProjectionSampler sampler(b.output_dim(), stochastic_seed);
                return t.value(stochastic_sobolev_loss(t, mm, b, ls, sampler).loss).at(0);
            }
            return t.value(sobolev_loss(t, mm, b, ls).loss).at(0);
        };
        const std::vector<double> theta0 = flatten_params(m);
        Tape t;
        std::vector<double> got;
        if (stochastic) {
            ProjectionSampler sampler(b.output_dim(), stochastic_seed);
            LossGraph lg = stochastic_sobolev_loss(t, m, b, ls, sampler);
            got = analytic_theta_grad(m, lg, t);
        } else {
            LossGraph lg = sobolev_loss(t, m, b, ls);
            got = analytic_theta_grad(m, lg, t);
        }
        return grad_rel_err(got, fd_grad(eval, theta0));
    };

    Rng rng(51);

    SUBCASE("first order, scalar output") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 6, 1}), 52);
        SobolevBatch b = random_batch(rng, 5, 2, 1, true);
        CHECK(theta_check(m, b, loss_spec(1), 0, false) < 1e-4);
    }

    SUBCASE("first order, vector output") {
        nn::Mlp m = nn::init_mlp(spec_of({3, 5, 2}), 53);
        SobolevBatch b = random_batch(rng, 4, 3, 2, true);
        CHECK(theta_check(m, b, loss_spec(1), 0, false) < 1e-4);
    }

    SUBCASE("second order") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 5, 1}), 54);
        SobolevBatch b = random_batch(rng, 3, 2, 1, true, true);
        CHECK(theta_check(m, b, loss_spec(2), 0, false) < 1e-4);
    }

    SUBCASE("stochastic, fixed projection draws") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 5, 3}), 55);
        SobolevBatch b = random_batch(rng, 4, 2, 3, true);
        CHECK(theta_check(m, b, loss_spec(1), 91, true) < 1e-4);
    }

    SUBCASE("l1 point losses away from ties") {
        nn::Mlp m = nn::init_mlp(spec_of({2, 5, 1}), 56);
        SobolevBatch b = random_batch(rng, 4, 2, 1, true);
        CHECK(theta_check(m, b, loss_spec(1, 1.0, PointLoss::l1, PointLoss::l1), 0, false) < 1e-4);
    }
}
