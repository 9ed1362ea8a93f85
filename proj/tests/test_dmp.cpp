#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vagn/dmp.hpp"
#include "vagn/errors.hpp"
#include "vagn/tensor.hpp"

using namespace vagn::dmp;
using vagn::geom::Vec2;

namespace {
constexpr double kPi = std::numbers::pi;

LinearDmpState run_linear(LinearDmpState s, const Vec2& g, const DmpParams& p, double dt,
                          int steps) {
    for (int i = 0; i < steps; ++i) {
        s = classic_linear_step(s, g, p, nullptr, nullptr, dt);
    }
    return s;
}
}  // namespace

TEST_CASE("classic linear step holds the equilibrium") {
    DmpParams p;
    LinearDmpState s;
    s.y = {3.0, -1.0};
    s.ydot = {0.0, 0.0};
    const LinearDmpState next = classic_linear_step(s, s.y, p, nullptr, nullptr, 0.01);
    CHECK(next.y.x == s.y.x);
    CHECK(next.y.y == s.y.y);
    CHECK(next.ydot.norm() == 0.0);
}

TEST_CASE("critically damped response matches the closed form") {
    DmpParams p;
    p.alpha_y = 4.0;
    p.beta_y = 1.0;  // zeta = 1
    LinearDmpState s;
    s.y = {1.0, 0.0};
    const Vec2 g{0.0, 0.0};
    const double dt = 0.01;
    const LinearDmpState end = run_linear(s, g, p, dt, 1000);
    CHECK((end.y - g).norm() < 0.02);
    // Against the closed-form error trajectory at several times.
    LinearDmpState probe = s;
    for (int i = 1; i <= 1000; ++i) {
        probe = classic_linear_step(probe, g, p, nullptr, nullptr, dt);
        if (i % 200 == 0) {
            const double expected = oracle::second_order_error(1.0, 0.0, 4.0, 1.0, i * dt);
            CHECK(std::abs(probe.y.x - expected) < 5e-3);
        }
    }
}

TEST_CASE("linear DMP converges for random stable parameters and starts") {
    // Gains sampled near critical damping with a natural frequency where the
    // 20/min(alpha*beta, alpha) horizon provably suffices for a 1e-3 bound
    // from a 10 m ball (the closed form needs ~14 e-folds).
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 60; ++trial) {
        const double zeta = 0.9 + unif(rng) * 0.2;
        const double wn = 0.5 + unif(rng) * 0.4;
        DmpParams p;
        p.alpha_y = 2.0 * zeta * wn;
        p.beta_y = wn / (2.0 * zeta);
        LinearDmpState s;
        const double angle = unif(rng) * 2.0 * kPi;
        const double radius = unif(rng) * 10.0;
        s.y = {radius * std::cos(angle), radius * std::sin(angle)};
        s.ydot = {unif(rng) - 0.5, unif(rng) - 0.5};
        const Vec2 g{unif(rng) * 4.0 - 2.0, unif(rng) * 4.0 - 2.0};
        const double horizon = 20.0 / std::min(p.alpha_y * p.beta_y, p.alpha_y);
        const int steps = static_cast<int>(std::ceil(horizon / 0.01));
        const LinearDmpState end = run_linear(s, g, p, 0.01, steps);
        CHECK((end.y - g).norm() < 1e-3);

        // Dense RK4 reference on the x component agrees along the way.
        oracle::SecondOrderState ref{s.y.x, s.ydot.x};
        const auto rk = oracle::rk4_point_attractor(ref, g.x, p.alpha_y, p.beta_y, 0.01, steps);
        CHECK(std::abs(end.y.x - rk.y) < 1e-3 * std::max(1.0, std::abs(rk.y)) + 1e-3);
    }
}

TEST_CASE("semi-implicit Euler tracks RK4 within 1e-3 over 10 s") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const double alpha = 1.0 + unif(rng) * 4.0;
        const double beta = 0.5 + unif(rng) * 1.5;
        DmpParams p;
        p.alpha_y = alpha;
        p.beta_y = beta;
        LinearDmpState s;
        s.y = {unif(rng) * 4.0 - 2.0, 0.0};
        s.ydot = {unif(rng) - 0.5, 0.0};
        const Vec2 g{0.0, 0.0};
        const LinearDmpState end = run_linear(s, g, p, 0.01, 1000);
        const auto rk =
            oracle::rk4_point_attractor({s.y.x, s.ydot.x}, 0.0, alpha, beta, 0.01, 1000);
        CHECK(std::abs(end.y.x - rk.y) < 1e-3);
    }
}

TEST_CASE("no overshoot when critically or over damped") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        const double alpha = 1.0 + unif(rng) * 6.0;
        const double zeta = 1.0 + unif(rng) * 1.5;
        // zeta = sqrt(alpha/beta)/2  =>  beta = alpha / (4 zeta^2)
        const double beta = alpha / (4.0 * zeta * zeta);
        CHECK(damping_ratio(alpha, beta) == doctest::Approx(zeta).epsilon(1e-12));
        DmpParams p;
        p.alpha_y = alpha;
        p.beta_y = beta;
        LinearDmpState s;
        s.y = {unif(rng) * 6.0 + 0.5, -(unif(rng) * 6.0 + 0.5)};
        const Vec2 g{0.0, 0.0};
        const double sign_x = s.y.x > 0 ? 1.0 : -1.0;
        const double sign_y = s.y.y > 0 ? 1.0 : -1.0;
        LinearDmpState cur = s;
        for (int i = 0; i < 3000; ++i) {
            cur = classic_linear_step(cur, g, p, nullptr, nullptr, 0.01);
            CHECK(sign_x * cur.y.x > -1e-9);
            CHECK(sign_y * cur.y.y > -1e-9);
            // Closed form agrees about the sign everywhere.
            const double e = oracle::second_order_error(s.y.x, 0.0, alpha, beta, (i + 1) * 0.01);
            CHECK(sign_x * e > -1e-9);
        }
    }
}

TEST_CASE("quaternion DMP") {
    SUBCASE("equilibrium") {
        QuatDmpState s;
        s.q = vagn::quat::yaw_to_quat(0.7);
        DmpParams p;
        const QuatDmpState next = classic_quat_step(s, s.q, p, nullptr, 1.0, 0.01);
        CHECK(vagn::quat::norm3(next.eta) == 0.0);
        CHECK(std::abs(vagn::quat::quat_to_yaw(next.q) - 0.7) < 1e-12);
    }
    SUBCASE("90 degree heading error settles under critical damping") {
        DmpParams p;
        p.alpha_q = 4.0;
        p.beta_q = 1.0;
        QuatDmpState s;
        s.q = vagn::quat::yaw_to_quat(0.0);
        const auto goal = vagn::quat::yaw_to_quat(kPi / 2.0);
        for (int i = 0; i < 1000; ++i) {
            s = classic_quat_step(s, goal, p, nullptr, 1.0, 0.01);
        }
        const double err = std::abs(vagn::quat::quat_to_yaw(s.q) - kPi / 2.0);
        CHECK(err < kPi / 180.0);
        // Scalar second-order oracle on the yaw error: 2 log(g * conj(q))
        // is exactly the wrapped angle error, so the yaw obeys
        // edd + alpha ed + alpha beta e = 0.
        const double ref =
            std::abs(oracle::second_order_error(-kPi / 2.0, 0.0, p.alpha_q, p.beta_q, 10.0));
        CHECK(std::abs(err - ref) < 1e-2);
    }
    SUBCASE("error norm decays monotonically after the initial phase for zeta >= 1") {
        DmpParams p;
        p.alpha_q = 6.0;
        p.beta_q = p.alpha_q / 8.0;  // zeta = sqrt(2) > 1
        QuatDmpState s;
        s.q = vagn::quat::yaw_to_quat(-1.2);
        const auto goal = vagn::quat::yaw_to_quat(1.1);
        double prev = std::abs(vagn::quat::rotation_error(goal, s.q)[2]);
        for (int i = 0; i < 2000; ++i) {
            s = classic_quat_step(s, goal, p, nullptr, 1.0, 0.01);
            const double err = std::abs(vagn::quat::rotation_error(goal, s.q)[2]);
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("rbf forcing") {
    RbfForcing f = RbfForcing::make(10, 2.0);
    SUBCASE("zero weights give zero") {
        CHECK(f.eval(0.5) == 0.0);
        CHECK(f.eval(1.0) == 0.0);
    }
    SUBCASE("constant weights give c*x") {
        for (double& w : f.weights) {
            w = 3.0;
        }
        CHECK(f.eval(0.25) == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(f.eval(1.0) == doctest::Approx(3.0).epsilon(1e-12));
    }
    SUBCASE("single basis") {
        RbfForcing single = RbfForcing::make(1, 2.0);
        single.weights[0] = 2.0;
        CHECK(single.eval(0.5) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("forced step bends the trajectory") {
        DmpParams p;
        RbfForcing fx = RbfForcing::make(8, p.alpha_x);
        for (double& w : fx.weights) {
            w = 10.0;
        }
        LinearDmpState s;
        const LinearDmpState unforced = classic_linear_step(s, {0, 0}, p, nullptr, nullptr, 0.01);
        const LinearDmpState forced = classic_linear_step(s, {0, 0}, p, &fx, nullptr, 0.01);
        CHECK(forced.ydot.x > unforced.ydot.x);
        CHECK(forced.x == unforced.x);
    }
}

TEST_CASE("canonical phase decays") {
    DmpParams p;
    p.alpha_x = 2.0;
    LinearDmpState s;
    for (int i = 0; i < 500; ++i) {
        const double prev = s.x;
        s = classic_linear_step(s, {0, 0}, p, nullptr, nullptr, 0.01);
        CHECK(s.x < prev);
        CHECK(s.x > 0.0);
    }
    CHECK(s.x == doctest::Approx(std::exp(-2.0 * 5.0)).epsilon(0.15));
}

TEST_CASE("modulated step") {
    SUBCASE("zero accelerations at the goal") {
        LinearDmpState lin;
        lin.y = {2.0, 2.0};
        QuatDmpState qs;
        qs.q = vagn::quat::yaw_to_quat(0.3);
        DmpParams p;
        const ModulatedResult r = modulated_step(lin, qs, lin.y, qs.q, p, 0.5);
        CHECK(r.accel.norm() == 0.0);
        CHECK(vagn::quat::norm3(r.etadot) == 0.0);
    }
    SUBCASE("hand arithmetic") {
        LinearDmpState lin;
        lin.y = {-1.0, 0.0};
        QuatDmpState qs;
        DmpParams p;
        p.alpha_y = 2.0;
        p.beta_y = 0.5;
        const ModulatedResult r = modulated_step(lin, qs, {0.0, 0.0}, qs.q, p, 0.5);
        CHECK(r.accel.x == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(r.accel.y == 0.0);
    }
    SUBCASE("matches the classic steps with zero forcing and tau=1") {
        std::mt19937_64 rng(43);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        DmpParams p;
        p.alpha_y = 3.0;
        p.beta_y = 1.1;
        p.alpha_q = 2.5;
        p.beta_q = 0.8;
        p.tau = 1.0;
        LinearDmpState lin;
        lin.y = {unif(rng) * 4.0, unif(rng) * 4.0};
        lin.ydot = {unif(rng), unif(rng)};
        QuatDmpState qs;
        qs.q = vagn::quat::yaw_to_quat(0.4);
        const Vec2 g{-1.0, 2.0};
        const auto g_q = vagn::quat::yaw_to_quat(-0.9);
        LinearDmpState lin_c = lin;
        QuatDmpState qs_c = qs;
        LinearDmpState lin_m = lin;
        QuatDmpState qs_m = qs;
        for (int i = 0; i < 200; ++i) {
            lin_c = classic_linear_step(lin_c, g, p, nullptr, nullptr, 0.01);
            qs_c = classic_quat_step(qs_c, g_q, p, nullptr, 1.0, 0.01);
            const ModulatedResult r = modulated_step(lin_m, qs_m, g, g_q, p, 0.01);
            lin_m = r.lin;
            qs_m = r.quat;
            CHECK(std::abs(lin_c.y.x - lin_m.y.x) < 1e-12);
            CHECK(std::abs(lin_c.y.y - lin_m.y.y) < 1e-12);
            CHECK(std::abs(lin_c.ydot.x - lin_m.ydot.x) < 1e-12);
            CHECK(std::abs(vagn::quat::quat_to_yaw(qs_c.q) - vagn::quat::quat_to_yaw(qs_m.q)) <
                  1e-12);
        }
    }
    SUBCASE("bounded under random positive parameter schedules") {
        std::mt19937_64 rng(47);
        std::uniform_real_distribution<double> unif(0.1, 8.0);
        for (int trial = 0; trial < 10; ++trial) {
            LinearDmpState lin;
            lin.y = {unif(rng), unif(rng)};
            QuatDmpState qs;
            const Vec2 g{0.0, 0.0};
            const auto g_q = vagn::quat::yaw_to_quat(0.0);
            const double initial = std::max(lin.y.norm(), 1.0);
            DmpParams p;
            for (int i = 0; i < 1000; ++i) {
                if (i % 25 == 0) {  // bounded parameter dwell
                    p.alpha_y = unif(rng);
                    p.beta_y = unif(rng) / 2.0;
                    p.alpha_q = unif(rng);
                    p.beta_q = unif(rng) / 2.0;
                }
                const ModulatedResult r = modulated_step(lin, qs, g, g_q, p, 0.01);
                lin = r.lin;
                qs = r.quat;
                CHECK(lin.y.norm() < 10.0 * initial);
            }
        }
    }
}

TEST_CASE("damping ratio") {
    CHECK(damping_ratio(4.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(damping_ratio(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(damping_ratio(0.01, 100.0) == doctest::Approx(0.0005).epsilon(1e-12));
    CHECK_THROWS_AS(damping_ratio(-1.0, 1.0), vagn::SchemaError);
}

TEST_CASE("zeta hinge penalty") {
    CHECK(zeta_hinge_penalty(4.0, 1.0, 0.5, 2.0) == 0.0);
    // zeta = 0.1 needs beta = 25 alpha
    CHECK(zeta_hinge_penalty(1.0, 25.0, 0.2, 1.0) == doctest::Approx(0.01).epsilon(1e-12));

    // Differentiable through the tape ops used by the training-time penalty.
    using vagn::ad::Tape;
    using vagn::ad::Tensor;
    auto penalty = [](Tape& t, const Tensor& a, const Tensor& b) {
        const Tensor zeta = t.scale(t.sqrt(t.div(a, b)), 0.5);
        const Tensor gap = t.relu(t.add_scalar(t.neg(zeta), 0.7));
        return t.scale(t.mul(gap, gap), 1.3);
    };
    auto forward = [&](const std::vector<Tensor>& vals) {
        Tape t;
        return penalty(t, t.leaf(vals[0]), t.leaf(vals[1])).item();
    };
    auto analytic = [&](const std::vector<Tensor>& vals) {
        Tape t;
        const Tensor a = t.leaf(vals[0]);
        const Tensor b = t.leaf(vals[1]);
        t.backward(penalty(t, a, b));
        return std::vector<Tensor>{t.grad(a), t.grad(b)};
    };
    const auto res = oracle::check_gradients(
        forward, analytic, {Tensor::scalar(1.0), Tensor::scalar(9.0)});  // zeta = 1/6 < 0.7
    CHECK(res.max_rel_err < 1e-6);
    const double scalar = zeta_hinge_penalty(1.0, 9.0, 0.7, 1.3);
    Tape t;
    CHECK(penalty(t, t.leaf(Tensor::scalar(1.0)), t.leaf(Tensor::scalar(9.0))).item() ==
          doctest::Approx(scalar).epsilon(1e-12));
}
