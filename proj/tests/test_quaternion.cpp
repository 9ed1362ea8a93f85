#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "vagn/errors.hpp"
#include "vagn/geometry.hpp"
#include "vagn/quaternion.hpp"

using namespace vagn::quat;

namespace {

constexpr double kPi = std::numbers::pi;

Quaternion random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Quaternion(n(rng), {n(rng), n(rng), n(rng)});
}

double qdist(const Quaternion& a, const Quaternion& b) {
    return std::sqrt((a.v - b.v) * (a.v - b.v) + (a.u[0] - b.u[0]) * (a.u[0] - b.u[0]) +
                     (a.u[1] - b.u[1]) * (a.u[1] - b.u[1]) + (a.u[2] - b.u[2]) * (a.u[2] - b.u[2]));
}

}  // namespace

TEST_CASE("quaternion product") {
    std::mt19937_64 rng(3);
    SUBCASE("identity is neutral") {
        const Quaternion q = random_unit(rng);
        CHECK(qdist(qmul(q, Quaternion::identity()), q) < 1e-12);
    }
    SUBCASE("i * j = k") {
        const Quaternion i(0.0, {1.0, 0.0, 0.0});
        const Quaternion j(0.0, {0.0, 1.0, 0.0});
        const Quaternion k = qmul(i, j);
        CHECK(k.v == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(k.u[2] == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("q * conj(q) is the identity") {
        for (int i = 0; i < 200; ++i) {
            const Quaternion q = random_unit(rng);
            CHECK(qdist(qmul(q, qconj(q)), Quaternion::identity()) < 1e-12);
        }
    }
    SUBCASE("non-unit input is rejected") {
        Quaternion bad = Quaternion::identity();
        bad.v = 1.5;
        CHECK_THROWS_AS(qmul(bad, Quaternion::identity()), vagn::SchemaError);
    }
}

TEST_CASE("conjugation") {
    CHECK(qdist(qconj(Quaternion::identity()), Quaternion::identity()) == 0.0);
    const Quaternion q(0.6, {0.8, 0.0, 0.0});
    const Quaternion c = qconj(q);
    CHECK(c.v == doctest::Approx(0.6));
    CHECK(c.u[0] == doctest::Approx(-0.8));
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        const Quaternion r = random_unit(rng);
        CHECK(qdist(qconj(qconj(r)), r) < 1e-15);
    }
}

TEST_CASE("log map") {
    const RotVec zero = qlog(Quaternion::identity());
    CHECK(norm3(zero) == 0.0);

    const RotVec w = qlog(Quaternion(0.0, {1.0, 0.0, 0.0}));
    CHECK(w[0] == doctest::Approx(kPi / 2.0).epsilon(1e-12));
    CHECK(w[1] == 0.0);

    Quaternion antipode;
    antipode.v = -1.0;
    antipode.u = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(qlog(antipode), vagn::NumericError);
}

TEST_CASE("exp map") {
    CHECK(qdist(qexp({0.0, 0.0, 0.0}), Quaternion::identity()) == 0.0);
    const Quaternion q = qexp({kPi / 2.0, 0.0, 0.0});
    CHECK(q.v == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(q.u[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(qexp({kPi, 0.0, 0.0}), vagn::NumericError);
}

TEST_CASE("exp and log are mutual inverses on their restricted domains") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    int tested = 0;
    while (tested < 1000) {
        const Quaternion q = random_unit(rng);
        if (q.v <= -1.0 + 1e-6) {
            continue;
        }
        ++tested;
        const Quaternion back = qexp(qlog(q));
        CHECK(qdist(back, q) < 1e-9);
    }
    for (int i = 0; i < 1000; ++i) {
        std::normal_distribution<double> n(0.0, 1.0);
        RotVec w{n(rng), n(rng), n(rng)};
        const double norm = norm3(w);
        // Rescale into a radius-3 ball, below the pi domain bound.
        const double target = unif(rng) * std::min(3.0, kPi - 1e-6);
        if (norm > 1e-12) {
            for (double& c : w) {
                c *= target / norm;
            }
        } else {
            w = {0.0, 0.0, 0.0};
        }
        const RotVec back = qlog(qexp(w));
        CHECK(std::abs(back[0] - w[0]) < 1e-9);
        CHECK(std::abs(back[1] - w[1]) < 1e-9);
        CHECK(std::abs(back[2] - w[2]) < 1e-9);
    }
}

TEST_CASE("integration step") {
    SUBCASE("zero velocity leaves the state unchanged") {
        std::mt19937_64 rng(11);
        const Quaternion q = random_unit(rng);
        CHECK(qdist(qintegrate(q, {0.0, 0.0, 0.0}, 0.1, 1.0), q) < 1e-15);
    }
    SUBCASE("half-angle rotation") {
        const Quaternion q = qintegrate(Quaternion::identity(), {kPi, 0.0, 0.0}, 1.0, 1.0);
        CHECK(q.v == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(q.u[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("constant-velocity flow is exact under step splitting") {
        std::mt19937_64 rng(13);
        std::normal_distribution<double> n(0.0, 0.8);
        for (int trial = 0; trial < 20; ++trial) {
            const RotVec eta{n(rng), n(rng), n(rng)};
            const Quaternion q0 = random_unit(rng);
            Quaternion fine = q0;
            for (int i = 0; i < 100; ++i) {
                fine = qintegrate(fine, eta, 0.01, 1.0);
            }
            const Quaternion coarse = qintegrate(q0, eta, 1.0, 1.0);
            CHECK(qdist(fine, coarse) < 1e-6);
        }
    }
}

TEST_CASE("yaw embedding") {
    CHECK(qdist(yaw_to_quat(0.0), Quaternion::identity()) == 0.0);
    const Quaternion q = yaw_to_quat(kPi / 2.0);
    CHECK(q.v == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
    CHECK(q.u[2] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-kPi + 1e-9, kPi - 1e-9);
    for (int i = 0; i < 1000; ++i) {
        const double psi = unif(rng);
        CHECK(quat_to_yaw(yaw_to_quat(psi)) == doctest::Approx(psi).epsilon(1e-12));
    }
}

TEST_CASE("rotation error equals the wrapped planar angle difference") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unif(-kPi + 1e-6, kPi - 1e-6);
    for (int i = 0; i < 1000; ++i) {
        const double psi = unif(rng);
        const double psi_g = unif(rng);
        const RotVec err = rotation_error(yaw_to_quat(psi_g), yaw_to_quat(psi));
        const double expected = vagn::geom::wrap_angle(psi_g - psi);
        CHECK(err[2] == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(err[0]) < 1e-12);
        CHECK(std::abs(err[1]) < 1e-12);
    }
}

TEST_CASE("operations keep quaternions unit") {
    std::mt19937_64 rng(23);
    Quaternion q = random_unit(rng);
    std::normal_distribution<double> n(0.0, 0.5);
    for (int i = 0; i < 10000; ++i) {
        q = qintegrate(q, {n(rng), n(rng), n(rng)}, 0.01, 1.0);
    }
    CHECK(std::abs(q.norm() - 1.0) < 1e-9);
}
