#pragma once

#include <array>

namespace vagn::quat {

// Scaled rotation axis in R^3 (radians). Inputs to the exponential map must
// satisfy norm < pi.
using RotVec = std::array<double, 3>;

double norm3(const RotVec& w);

// Unit quaternion v + u on S^3. Constructors and operations renormalize so
// the norm stays within 1e-9 of one.
struct Quaternion {
    double v = 1.0;
    std::array<double, 3> u{0.0, 0.0, 0.0};

    Quaternion() = default;
    Quaternion(double v_, const std::array<double, 3>& u_);

    static Quaternion identity() { return Quaternion(); }
    double norm() const;
    Quaternion normalized() const;
};

// Hamilton product, renormalized. Both inputs must be unit within 1e-6.
Quaternion qmul(const Quaternion& q1, const Quaternion& q2);

Quaternion qconj(const Quaternion& q);

// Logarithmic map S^3 -> R^3: arccos(v) * u/|u|, zero for the identity.
// The antipode (-1, 0) is outside the domain.
RotVec qlog(const Quaternion& q);

// Exponential map R^3 -> S^3: cos|w| + sin|w| * w/|w|. Requires |w| < pi.
Quaternion qexp(const RotVec& w);

// One integration step: Exp((dt/2) * eta / tau) * q, renormalized.
Quaternion qintegrate(const Quaternion& q, const RotVec& eta, double dt, double tau);

// Orientation error 2*log(g * conj(q)) with the log branch chosen on the
// v >= 0 hemisphere (q and -q are the same rotation), so the z component of a
// planar pair is the signed yaw difference wrapped to (-pi, pi].
RotVec rotation_error(const Quaternion& goal, const Quaternion& q);

// Rotation about z: (cos(psi/2), [0, 0, sin(psi/2)]).
Quaternion yaw_to_quat(double psi);
double quat_to_yaw(const Quaternion& q);

}  // namespace vagn::quat
