#pragma once

#include <cstdint>
#include <random>

#include "vagn/tensor.hpp"

namespace vagn::autom {

enum class QInit { uniform, random };

// Input-weighted transition synthesis: W_pv = sum_i pv[i] * W[i], with
// W of shape [M,N,N] and pv of shape [M]. Differentiable through both.
ad::Tensor combine_transitions(ad::Tape& tape, const ad::Tensor& W, const ad::Tensor& pv);

// Column-stochastic transition matrix softmax_columns(relu(W_pv)).
// Entry (i,j) is the probability of moving from state j to state i; columns
// are normalized over destinations.
ad::Tensor transition_matrix(ad::Tape& tape, const ad::Tensor& W, const ad::Tensor& pv);

// One automaton update: q_t = transition_matrix(W, pv) * q_prev. Keeps the
// output on the probability simplex.
ad::Tensor step(ad::Tape& tape, const ad::Tensor& W, const ad::Tensor& pv,
                const ad::Tensor& q_prev);

// State distribution over n >= 2 nodes: uniform, or a flat-Dirichlet sample
// (normalized i.i.d. exponentials).
ad::Tensor init_state(int n, QInit mode, std::mt19937_64& rng);

bool on_simplex(const ad::Tensor& q, double tol);

}  // namespace vagn::autom
