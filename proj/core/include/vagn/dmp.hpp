#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "vagn/geometry.hpp"
#include "vagn/quaternion.hpp"

namespace vagn::dmp {

// Planar point-attractor state: position (m), velocity (m/s), canonical
// phase x in (0, 1].
struct LinearDmpState {
    geom::Vec2 y;
    geom::Vec2 ydot;
    double x = 1.0;
};

// Orientation state: heading on S^3 plus scaled angular velocity (rad/s).
struct QuatDmpState {
    quat::Quaternion q;
    quat::RotVec eta{0.0, 0.0, 0.0};
};

// Attractor gains. tau and alpha_x only drive the classic (forced) form; the
// modulated form folds tau into the four gains.
struct DmpParams {
    double alpha_y = 4.0;
    double beta_y = 1.0;
    double alpha_q = 4.0;
    double beta_q = 1.0;
    double tau = 1.0;
    double alpha_x = 2.0;
};

// Normalized radial-basis forcing term on the canonical phase:
// f(x) = (sum_i psi_i(x) w_i / sum_i psi_i(x)) * x, psi_i = exp(-h_i (x-c_i)^2).
struct RbfForcing {
    std::vector<double> centers;
    std::vector<double> widths;
    std::vector<double> weights;

    // Centers exponentially spaced in phase to track the canonical decay;
    // widths 1/(c_{i+1}-c_i)^2.
    static RbfForcing make(int basis_count, double alpha_x, double tau = 1.0);

    double eval(double x) const;
};

// One semi-implicit Euler step of the classic forced DMP:
//   tau*ydd = alpha_y*(beta_y*(g - y) - ydot) + f(x),  tau*xd = -alpha_x*x.
// Update order: ydot, then y, then x. Null forcing means f == 0.
LinearDmpState classic_linear_step(const LinearDmpState& state, const geom::Vec2& g,
                                   const DmpParams& params, const RbfForcing* forcing_x,
                                   const RbfForcing* forcing_y, double dt);

// Orientation counterpart:
//   tau*etad = alpha_q*(beta_q * 2 log(g * conj(q)) - eta) + f_q(x),
// with q advanced by the quaternion exponential step. Forcing, when present,
// acts about the z axis (planar instantiation).
QuatDmpState classic_quat_step(const QuatDmpState& state, const quat::Quaternion& g_q,
                               const DmpParams& params, const RbfForcing* forcing_z,
                               double phase, double dt);

struct ModulatedResult {
    LinearDmpState lin;
    QuatDmpState quat;
    geom::Vec2 accel;
    quat::RotVec etadot{0.0, 0.0, 0.0};
};

// Parameter-modulated point attractor: no forcing term, no canonical system,
// tau = 1. Matches classic_linear_step / classic_quat_step with zero forcing
// step for step.
ModulatedResult modulated_step(const LinearDmpState& lin, const QuatDmpState& qs,
                               const geom::Vec2& g, const quat::Quaternion& g_q,
                               const DmpParams& params, double dt);

// zeta = alpha / (2 sqrt(alpha beta)); >= 1 is non-oscillatory, ~0 near-periodic.
double damping_ratio(double alpha, double beta);

// weight * max(0, zeta_min - zeta)^2.
double zeta_hinge_penalty(double alpha, double beta, double zeta_min, double weight);

// Trajectory dump row for offline inspection.
struct TrajectoryRow {
    double t;
    geom::Vec2 y;
    geom::Vec2 ydot;
    double yaw;
    double eta_z;
    DmpParams params;
};

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRow>& rows);

}  // namespace vagn::dmp
