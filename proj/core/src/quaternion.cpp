#include "vagn/quaternion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vagn/errors.hpp"

namespace vagn::quat {

namespace {
constexpr double kUnitTol = 1e-6;
constexpr double kSeriesTol = 1e-8;
}  // namespace

double norm3(const RotVec& w) { return std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]); }

Quaternion::Quaternion(double v_, const std::array<double, 3>& u_) : v(v_), u(u_) {
    *this = normalized();
}

double Quaternion::norm() const {
    return std::sqrt(v * v + u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
}

Quaternion Quaternion::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw NumericError("quaternion normalization: degenerate norm");
    }
    Quaternion q;
    q.v = v / n;
    q.u = {u[0] / n, u[1] / n, u[2] / n};
    return q;
}

Quaternion qmul(const Quaternion& q1, const Quaternion& q2) {
    if (std::abs(q1.norm() - 1.0) > kUnitTol || std::abs(q2.norm() - 1.0) > kUnitTol) {
        throw SchemaError("qmul: inputs must be unit quaternions");
    }
    const double v = q1.v * q2.v - (q1.u[0] * q2.u[0] + q1.u[1] * q2.u[1] + q1.u[2] * q2.u[2]);
    const std::array<double, 3> u{
        q1.v * q2.u[0] + q2.v * q1.u[0] + q1.u[1] * q2.u[2] - q1.u[2] * q2.u[1],
        q1.v * q2.u[1] + q2.v * q1.u[1] + q1.u[2] * q2.u[0] - q1.u[0] * q2.u[2],
        q1.v * q2.u[2] + q2.v * q1.u[2] + q1.u[0] * q2.u[1] - q1.u[1] * q2.u[0],
    };
    return Quaternion(v, u);
}

Quaternion qconj(const Quaternion& q) {
    Quaternion c;
    c.v = q.v;
    c.u = {-q.u[0], -q.u[1], -q.u[2]};
    return c;
}

RotVec qlog(const Quaternion& q) {
    const double un = norm3(q.u);
    if (q.v < -1.0 + 1e-12 && un < 1e-12) {
        throw NumericError("qlog: antipodal quaternion is outside the log domain");
    }
    if (un < kSeriesTol) {
        return {0.0, 0.0, 0.0};
    }
    const double angle = std::acos(std::clamp(q.v, -1.0, 1.0));
    const double s = angle / un;
    return {q.u[0] * s, q.u[1] * s, q.u[2] * s};
}

Quaternion qexp(const RotVec& w) {
    const double n = norm3(w);
    if (n >= std::numbers::pi) {
        throw NumericError("qexp: rotation vector norm must be < pi");
    }
    // sin(n)/n via its series for tiny n.
    const double s = n < kSeriesTol ? 1.0 - n * n / 6.0 : std::sin(n) / n;
    return Quaternion(std::cos(n), {w[0] * s, w[1] * s, w[2] * s});
}

Quaternion qintegrate(const Quaternion& q, const RotVec& eta, double dt, double tau) {
    const double c = 0.5 * dt / tau;
    const RotVec step{eta[0] * c, eta[1] * c, eta[2] * c};
    return qmul(qexp(step), q);
}

RotVec rotation_error(const Quaternion& goal, const Quaternion& q) {
    Quaternion d = qmul(goal, qconj(q));
    if (d.v < 0.0) {
        d.v = -d.v;
        d.u = {-d.u[0], -d.u[1], -d.u[2]};
    }
    RotVec w = qlog(d);
    return {2.0 * w[0], 2.0 * w[1], 2.0 * w[2]};
}

Quaternion yaw_to_quat(double psi) {
    return Quaternion(std::cos(0.5 * psi), {0.0, 0.0, std::sin(0.5 * psi)});
}

double quat_to_yaw(const Quaternion& q) {
    return 2.0 * std::atan2(q.u[2], q.v);
}

}  // namespace vagn::quat
