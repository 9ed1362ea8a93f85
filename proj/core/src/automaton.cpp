#include "vagn/automaton.hpp"

#include <cmath>

#include "vagn/errors.hpp"

namespace vagn::autom {

namespace {
std::size_t idx(int i) { return static_cast<std::size_t>(i); }
}  // namespace

ad::Tensor combine_transitions(ad::Tape& tape, const ad::Tensor& W, const ad::Tensor& pv) {
    if (W.rank() != 3 || W.dim(1) != W.dim(2)) {
        throw SchemaError("combine_transitions: W must be [M,N,N]");
    }
    if (pv.rank() != 1 || pv.dim(0) != W.dim(0)) {
        throw SchemaError("combine_transitions: pv length must match W's first dimension");
    }
    const int m = W.dim(0);
    const int nn = W.dim(1) * W.dim(2);
    ad::Tensor out = ad::Tensor::zeros({W.dim(1), W.dim(2)});
    for (int i = 0; i < m; ++i) {
        const double p = pv.data[idx(i)];
        const double* wi = W.data.data() + idx(i * nn);
        for (int k = 0; k < nn; ++k) {
            out.data[idx(k)] += p * wi[k];
        }
    }
    return tape.attach(std::move(out), {&W, &pv},
                       [wv = W.data, pvv = pv.data, m, nn, wshape = W.shape](const ad::Tensor& g) {
                           ad::Tensor gw(wshape, std::vector<double>(idx(m * nn), 0.0));
                           ad::Tensor gpv = ad::Tensor::zeros({m});
                           for (int i = 0; i < m; ++i) {
                               const double p = pvv[idx(i)];
                               double acc = 0.0;
                               for (int k = 0; k < nn; ++k) {
                                   gw.data[idx(i * nn + k)] = p * g.data[idx(k)];
                                   acc += wv[idx(i * nn + k)] * g.data[idx(k)];
                               }
                               gpv.data[idx(i)] = acc;
                           }
                           return std::vector<ad::Tensor>{gw, gpv};
                       });
}

ad::Tensor transition_matrix(ad::Tape& tape, const ad::Tensor& W, const ad::Tensor& pv) {
    return tape.softmax_columns(tape.relu(combine_transitions(tape, W, pv)));
}

ad::Tensor step(ad::Tape& tape, const ad::Tensor& W, const ad::Tensor& pv,
                const ad::Tensor& q_prev) {
    if (!on_simplex(q_prev, 1e-6)) {
        throw SchemaError("automaton step: q_prev is not on the probability simplex");
    }
    return tape.matvec(transition_matrix(tape, W, pv), q_prev);
}

ad::Tensor init_state(int n, QInit mode, std::mt19937_64& rng) {
    if (n < 2) {
        throw SchemaError("init_state: need at least 2 automaton nodes");
    }
    ad::Tensor q = ad::Tensor::zeros({n});
    if (mode == QInit::uniform) {
        for (int i = 0; i < n; ++i) {
            q.data[idx(i)] = 1.0 / n;
        }
        return q;
    }
    // Flat Dirichlet: normalized i.i.d. exponentials.
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double e = -std::log(1.0 - unif(rng));
        q.data[idx(i)] = e;
        total += e;
    }
    for (int i = 0; i < n; ++i) {
        q.data[idx(i)] /= total;
    }
    return q;
}

bool on_simplex(const ad::Tensor& q, double tol) {
    if (q.rank() != 1) {
        return false;
    }
    double sum = 0.0;
    for (double v : q.data) {
        if (v < -tol) {
            return false;
        }
        sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
}

}  // namespace vagn::autom
