#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "matrix.hpp"
#include "topology.hpp"

namespace deepca {

// ============================================================================
// Agent tensors and gossip averaging
//
// An AgentTensor is one d x k matrix per agent, the unit of state that moves
// through the network. Mixing replaces every slice with a weighted
// combination of its neighbours' slices; the mean over agents is the
// conserved quantity and the distance from consensus is what contracts.
// ============================================================================

struct AgentTensor {
    std::vector<Matrix> slices;

    explicit AgentTensor(std::vector<Matrix> s) : slices(std::move(s)) {
        if (slices.empty())
            throw std::invalid_argument("agent tensor: needs at least one slice");
        for (const Matrix& slice : slices)
            if (slice.rows() != slices.front().rows() ||
                slice.cols() != slices.front().cols())
                throw DimensionMismatch("agent tensor: slices must share one shape");
    }

    AgentTensor(std::size_t d, std::size_t k, std::size_t m)
        : slices(m, Matrix(d, k)) {
        if (m == 0)
            throw std::invalid_argument("agent tensor: needs at least one slice");
    }

    std::size_t d() const { return slices.front().rows(); }
    std::size_t k() const { return slices.front().cols(); }
    std::size_t m() const { return slices.size(); }

    Matrix& slice(std::size_t j) { return slices[j]; }
    const Matrix& slice(std::size_t j) const { return slices[j]; }
};

// Mean slice, summed in agent order so results are reproducible bit for bit.
inline Matrix agent_mean(const AgentTensor& x) {
    Matrix acc = x.slices.front();
    for (std::size_t j = 1; j < x.m(); ++j) acc += x.slices[j];
    acc *= 1.0 / double(x.m());
    return acc;
}

// Frobenius distance of the stacked tensor from perfect consensus:
// sqrt(sum_j ||x_j - mean||_F^2). Zero exactly when all slices agree.
inline double consensus_error(const AgentTensor& x) {
    const Matrix mean = agent_mean(x);
    double total = 0.0;
    for (const Matrix& slice : x.slices) {
        for (std::size_t i = 0; i < slice.rows(); ++i)
            for (std::size_t j = 0; j < slice.cols(); ++j) {
                const double dev = slice(i, j) - mean(i, j);
                total += dev * dev;
            }
    }
    return std::sqrt(total);
}

// Before/after summary of one mixing call. rho_bound is the nominal
// contraction factor the consensus error is guaranteed not to exceed
// (up to roundoff): (1 - sqrt(1 - lambda2))^k_steps for the accelerated
// scheme, lambda2^k_steps for plain averaging.
struct ConsensusReport {
    Matrix mean_before;
    Matrix mean_after;
    double err_before;
    double err_after;
    double rho_bound;
};

struct MixResult {
    AgentTensor tensor;
    ConsensusReport report;
};

namespace detail {

// One round of gossip: out_j = sum_i x_i * l(i, j), accumulated in ascending
// agent order.
inline AgentTensor weighted_combination(const AgentTensor& x, const Matrix& l) {
    const std::size_t m = x.m();
    AgentTensor out(x.d(), x.k(), m);
    for (std::size_t j = 0; j < m; ++j) {
        Matrix& dst = out.slices[j];
        for (std::size_t i = 0; i < m; ++i) {
            const double weight = l(i, j);
            const Matrix& src = x.slices[i];
            for (std::size_t r = 0; r < src.rows(); ++r)
                for (std::size_t c = 0; c < src.cols(); ++c)
                    dst(r, c) += weight * src(r, c);
        }
    }
    return out;
}

inline void require_compatible(const AgentTensor& x, const WeightMatrix& w,
                               const char* who) {
    if (w.l.rows() != w.l.cols() || w.l.rows() != x.m())
        throw DimensionMismatch(std::string(who) +
                                ": weight matrix does not match agent count");
}

} // namespace detail

/**
 * Accelerated gossip averaging (heavy-ball over the weight matrix).
 *
 * A budget of k_steps = 0 returns the input untouched and performs no
 * multiplications. For k_steps >= 1 the momentum recurrence
 *
 *     x_{t+1} = (1 + eta) x_t l - eta x_{t-1},   x_0 = x_{-1} = input,
 *     eta = (1 - sqrt(1 - lambda2^2)) / (1 + sqrt(1 - lambda2^2)),
 *
 * runs through t = k_steps and the final iterate is returned, so the budget
 * costs k_steps + 1 weight multiplications. Running one step past the budget
 * is what keeps small budgets inside the reported contraction factor
 * (1 - sqrt(1 - lambda2))^k_steps; the recurrence truncated at k_steps
 * multiplications can exceed that factor by a few percent at k_steps = 1.
 *
 * The agent mean is preserved to roundoff and every slice converges to it
 * as the budget grows.
 */
inline MixResult fast_mix(const AgentTensor& x, const WeightMatrix& w,
                          std::size_t k_steps) {
    detail::require_compatible(x, w, "fast_mix");

    const Matrix mean_before = agent_mean(x);
    const double err_before = consensus_error(x);
    const double rho_bound =
        std::pow(1.0 - std::sqrt(1.0 - w.lambda2), double(k_steps));

    AgentTensor prev = x;
    AgentTensor cur = x;
    if (k_steps >= 1) {
        const double root = std::sqrt(1.0 - w.lambda2 * w.lambda2);
        const double eta = (1.0 - root) / (1.0 + root);
        for (std::size_t t = 0; t <= k_steps; ++t) {
            AgentTensor next = detail::weighted_combination(cur, w.l);
            for (std::size_t j = 0; j < x.m(); ++j) {
                Matrix& n = next.slices[j];
                const Matrix& p = prev.slices[j];
                for (std::size_t r = 0; r < n.rows(); ++r)
                    for (std::size_t c = 0; c < n.cols(); ++c)
                        n(r, c) = (1.0 + eta) * n(r, c) - eta * p(r, c);
            }
            prev = std::move(cur);
            cur = std::move(next);
        }
    }

    const Matrix mean_after = agent_mean(cur);
    const double err_after = consensus_error(cur);
    return {std::move(cur),
            {mean_before, mean_after, err_before, err_after, rho_bound}};
}

/**
 * Plain gossip averaging: exactly k_steps multiplications by the weight
 * matrix, no momentum. The reported contraction factor lambda2^k_steps is
 * the exact worst case over inputs. Mostly useful as a baseline against
 * the accelerated scheme.
 */
inline MixResult plain_mix(const AgentTensor& x, const WeightMatrix& w,
                           std::size_t k_steps) {
    detail::require_compatible(x, w, "plain_mix");

    const Matrix mean_before = agent_mean(x);
    const double err_before = consensus_error(x);
    const double rho_bound = std::pow(w.lambda2, double(k_steps));

    AgentTensor cur = x;
    for (std::size_t t = 0; t < k_steps; ++t)
        cur = detail::weighted_combination(cur, w.l);

    const Matrix mean_after = agent_mean(cur);
    const double err_after = consensus_error(cur);
    return {std::move(cur),
            {mean_before, mean_after, err_before, err_after, rho_bound}};
}

} // namespace deepca
