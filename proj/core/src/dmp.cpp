#include "vagn/dmp.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "vagn/errors.hpp"

namespace vagn::dmp {

namespace {

void require_finite_state(const LinearDmpState& s) {
    if (!std::isfinite(s.y.x) || !std::isfinite(s.y.y) || !std::isfinite(s.ydot.x) ||
        !std::isfinite(s.ydot.y) || !std::isfinite(s.x)) {
        throw NumericError("dmp: non-finite linear state");
    }
}

void require_positive_dt(double dt) {
    if (!(dt > 0.0)) {
        throw SchemaError("dmp: dt must be positive");
    }
}

}  // namespace

RbfForcing RbfForcing::make(int basis_count, double alpha_x, double tau) {
    if (basis_count < 1) {
        throw SchemaError("rbf forcing needs at least one basis function");
    }
    RbfForcing f;
    f.centers.resize(static_cast<std::size_t>(basis_count));
    f.widths.resize(static_cast<std::size_t>(basis_count));
    f.weights.assign(static_cast<std::size_t>(basis_count), 0.0);
    for (int i = 0; i < basis_count; ++i) {
        const double t = basis_count == 1 ? 0.0 : static_cast<double>(i) / (basis_count - 1);
        f.centers[static_cast<std::size_t>(i)] = std::exp(-alpha_x * t / tau);
    }
    for (int i = 0; i < basis_count; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        if (i + 1 < basis_count) {
            const double gap = f.centers[k] - f.centers[k + 1];
            f.widths[k] = 1.0 / (gap * gap);
        } else {
            f.widths[k] = basis_count > 1 ? f.widths[k - 1] : 1.0;
        }
    }
    return f;
}

double RbfForcing::eval(double x) const {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double d = x - centers[i];
        const double psi = std::exp(-widths[i] * d * d);
        num += psi * weights[i];
        den += psi;
    }
    if (den < 1e-12) {
        den = 1e-12;
    }
    return num / den * x;
}

LinearDmpState classic_linear_step(const LinearDmpState& state, const geom::Vec2& g,
                                   const DmpParams& params, const RbfForcing* forcing_x,
                                   const RbfForcing* forcing_y, double dt) {
    require_positive_dt(dt);
    require_finite_state(state);
    const geom::Vec2 f{forcing_x ? forcing_x->eval(state.x) : 0.0,
                       forcing_y ? forcing_y->eval(state.x) : 0.0};
    const geom::Vec2 ydd =
        (params.alpha_y * (params.beta_y * (g - state.y) - state.ydot) + f) * (1.0 / params.tau);
    LinearDmpState next = state;
    next.ydot += ydd * dt;
    next.y += next.ydot * dt;
    next.x += -params.alpha_x * state.x / params.tau * dt;
    require_finite_state(next);
    return next;
}

QuatDmpState classic_quat_step(const QuatDmpState& state, const quat::Quaternion& g_q,
                               const DmpParams& params, const RbfForcing* forcing_z,
                               double phase, double dt) {
    require_positive_dt(dt);
    const quat::RotVec err = quat::rotation_error(g_q, state.q);
    const double fz = forcing_z ? forcing_z->eval(phase) : 0.0;
    quat::RotVec etadot;
    for (int i = 0; i < 3; ++i) {
        const double f = i == 2 ? fz : 0.0;
        etadot[static_cast<std::size_t>(i)] =
            (params.alpha_q * (params.beta_q * err[static_cast<std::size_t>(i)] -
                               state.eta[static_cast<std::size_t>(i)]) +
             f) /
            params.tau;
    }
    QuatDmpState next = state;
    for (int i = 0; i < 3; ++i) {
        next.eta[static_cast<std::size_t>(i)] += etadot[static_cast<std::size_t>(i)] * dt;
    }
    next.q = quat::qintegrate(state.q, next.eta, dt, params.tau);
    return next;
}

ModulatedResult modulated_step(const LinearDmpState& lin, const QuatDmpState& qs,
                               const geom::Vec2& g, const quat::Quaternion& g_q,
                               const DmpParams& params, double dt) {
    require_positive_dt(dt);
    if (!(params.alpha_y > 0.0 && params.beta_y > 0.0 && params.alpha_q > 0.0 &&
          params.beta_q > 0.0)) {
        throw SchemaError("modulated_step: gains must be positive");
    }
    ModulatedResult out;
    out.accel = params.alpha_y * (params.beta_y * (g - lin.y) - lin.ydot);
    const quat::RotVec err = quat::rotation_error(g_q, qs.q);
    for (int i = 0; i < 3; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        out.etadot[k] = params.alpha_q * (params.beta_q * err[k] - qs.eta[k]);
    }
    out.lin = lin;
    out.lin.ydot += out.accel * dt;
    out.lin.y += out.lin.ydot * dt;
    out.quat = qs;
    for (int i = 0; i < 3; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        out.quat.eta[k] += out.etadot[k] * dt;
    }
    out.quat.q = quat::qintegrate(qs.q, out.quat.eta, dt, 1.0);
    require_finite_state(out.lin);
    return out;
}

double damping_ratio(double alpha, double beta) {
    if (!(alpha > 0.0 && beta > 0.0)) {
        throw SchemaError("damping_ratio: gains must be positive");
    }
    return alpha / (2.0 * std::sqrt(alpha * beta));
}

double zeta_hinge_penalty(double alpha, double beta, double zeta_min, double weight) {
    if (!(zeta_min > 0.0)) {
        throw SchemaError("zeta_hinge_penalty: zeta_min must be positive");
    }
    const double gap = zeta_min - damping_ratio(alpha, beta);
    return gap > 0.0 ? weight * gap * gap : 0.0;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRow>& rows) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string());
    }
    out << "t,y_x,y_y,ydot_x,ydot_y,yaw,eta_z,alpha_y,beta_y,alpha_q,beta_q\n";
    char buf[512];
    for (const TrajectoryRow& r : rows) {
        std::snprintf(buf, sizeof(buf),
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                      r.y.x, r.y.y, r.ydot.x, r.ydot.y, r.yaw, r.eta_z, r.params.alpha_y,
                      r.params.beta_y, r.params.alpha_q, r.params.beta_q);
        out << buf;
    }
}

}  // namespace vagn::dmp
