#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "vagn/tensor.hpp"

namespace oracle {

// Central finite differences against the tape's analytic gradients.
//
// `forward` rebuilds the whole graph from parameter values and returns the
// scalar loss; it must be deterministic. Returns the max relative error over
// every element of every parameter, with |err| measured against
// max(1, |analytic|, |numeric|).
struct GradCheck {
    double max_rel_err = 0.0;
    int checked = 0;
};

inline GradCheck check_gradients(
    const std::function<double(const std::vector<vagn::ad::Tensor>&)>& forward,
    const std::function<std::vector<vagn::ad::Tensor>(const std::vector<vagn::ad::Tensor>&)>&
        analytic,
    std::vector<vagn::ad::Tensor> params, double h = 1e-5) {
    GradCheck result;
    const std::vector<vagn::ad::Tensor> grads = analytic(params);
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (int i = 0; i < params[p].size(); ++i) {
            const double saved = params[p][i];
            params[p][i] = saved + h;
            const double fp = forward(params);
            params[p][i] = saved - h;
            const double fm = forward(params);
            params[p][i] = saved;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = grads[p][i];
            const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
            result.max_rel_err = std::max(result.max_rel_err, std::abs(a - numeric) / denom);
            ++result.checked;
        }
    }
    return result;
}

inline vagn::ad::Tensor random_tensor(std::vector<int> shape, std::mt19937_64& rng, double lo = -2.0,
                                      double hi = 2.0) {
    vagn::ad::Tensor t = vagn::ad::Tensor::zeros(std::move(shape));
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : t.data) {
        v = dist(rng);
    }
    return t;
}

// Dense RK4 reference for the planar point attractor
//   ydd = alpha (beta (g - y) - yd),
// integrated as a first-order system in (y, yd).
struct SecondOrderState {
    double y = 0.0;
    double yd = 0.0;
};

inline SecondOrderState rk4_point_attractor(SecondOrderState s, double g, double alpha,
                                            double beta, double dt, int steps) {
    auto acc = [&](double y, double yd) { return alpha * (beta * (g - y) - yd); };
    for (int i = 0; i < steps; ++i) {
        const double k1y = s.yd, k1v = acc(s.y, s.yd);
        const double k2y = s.yd + 0.5 * dt * k1v, k2v = acc(s.y + 0.5 * dt * k1y, s.yd + 0.5 * dt * k1v);
        const double k3y = s.yd + 0.5 * dt * k2v, k3v = acc(s.y + 0.5 * dt * k2y, s.yd + 0.5 * dt * k2v);
        const double k4y = s.yd + dt * k3v, k4v = acc(s.y + dt * k3y, s.yd + dt * k3v);
        s.y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        s.yd += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    return s;
}

// Closed-form solution of ydd + a yd + a b y = 0 (error coordinates e = y - g)
// for the critically damped and general damped cases.
inline double second_order_error(double e0, double ed0, double alpha, double beta, double t) {
    const double wn = std::sqrt(alpha * beta);
    const double zeta = alpha / (2.0 * wn);
    if (std::abs(zeta - 1.0) < 1e-9) {
        const double a = e0;
        const double b = ed0 + wn * e0;
        return (a + b * t) * std::exp(-wn * t);
    }
    if (zeta > 1.0) {
        const double r1 = -wn * (zeta - std::sqrt(zeta * zeta - 1.0));
        const double r2 = -wn * (zeta + std::sqrt(zeta * zeta - 1.0));
        const double c2 = (ed0 - r1 * e0) / (r2 - r1);
        const double c1 = e0 - c2;
        return c1 * std::exp(r1 * t) + c2 * std::exp(r2 * t);
    }
    const double wd = wn * std::sqrt(1.0 - zeta * zeta);
    const double a = e0;
    const double b = (ed0 + zeta * wn * e0) / wd;
    return std::exp(-zeta * wn * t) * (a * std::cos(wd * t) + b * std::sin(wd * t));
}

}  // namespace oracle
