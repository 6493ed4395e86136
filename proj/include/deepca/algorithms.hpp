#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixing.hpp"
#include "problem.hpp"

namespace deepca {

// ============================================================================
// The three procedures under study
//
// run_deepca: decentralized power iteration with subspace tracking. Each
// agent keeps a tracking variable S_j that accumulates the *change* in its
// local product A_j W_j and is then gossip-averaged, so the agent mean of S
// follows the mean of the local products exactly and the consensus error is
// the only thing left to fight.
//
// run_depca: the no-tracking baseline. Agents average their raw local
// products every round; whatever disagreement the averaging budget leaves
// over is re-injected each iteration, which is why it stalls on
// heterogeneous data.
//
// run_centralized_pm: the reference power method on the mean matrix,
// structured as the single-agent special case so traces are field-for-field
// comparable.
// ============================================================================

struct AgentState {
    Matrix w;      // current orthonormal iterate, d x k
    Matrix s;      // tracking variable, d x k
    Matrix g_prev; // local product from the previous iteration, d x k
};

// Metrics snapshot after iteration t (t = 0 is the shared initial state).
// tan values are +inf in no-oracle runs and when a mean iterate degenerates.
struct TraceRecord {
    std::size_t t;
    double mean_tan_theta;    // (1/m) sum_j tan theta(U, W_j)
    double tan_theta_sbar;    // tan theta(U, mean of S_j)
    double s_consensus_err;   // Frobenius distance of the S stack from consensus
    double w_consensus_err;   // same for the W stack
    double tracking_residual; // ||mean S - mean G|| / max(1, ||mean G||)
    double sigma_min_sbar;    // smallest singular value of mean S
};

struct RunResult {
    std::vector<AgentState> final_states;
    std::vector<TraceRecord> trace; // length iterations_run + 1
    std::size_t iterations_run = 0;
    bool converged = false;
    // Smallest <W_j(:,i), W0(:,i)> observed anywhere in the run; stays >= 0
    // when sign adjustment is active.
    double min_w0_alignment = std::numeric_limits<double>::infinity();
    // Nonempty when the run aborted; the trace then covers the completed
    // iterations only.
    std::string error;
};

/**
 * Per-column sign fix: column i of w is negated exactly when its inner
 * product with column i of w0 is strictly negative, so every output column
 * has non-negative alignment with the reference. A zero inner product leaves
 * the column alone. Spans are untouched; this only removes the per-agent
 * sign ambiguity QR leaves behind, which would otherwise wreck averaging.
 */
inline Matrix sign_adjust(const Matrix& w, const Matrix& w0) {
    if (w.rows() != w0.rows() || w.cols() != w0.cols())
        throw DimensionMismatch("sign_adjust: shape mismatch");
    Matrix out = w;
    for (std::size_t col = 0; col < w.cols(); ++col) {
        double dot = 0.0;
        for (std::size_t row = 0; row < w.rows(); ++row)
            dot += w(row, col) * w0(row, col);
        if (dot < 0.0)
            for (std::size_t row = 0; row < w.rows(); ++row)
                out(row, col) = -out(row, col);
    }
    return out;
}

namespace detail {

// Everything tan-theta metrics need, resolved once per run. u_perp is the
// cached orthonormal complement of the truth block (it exists whenever a
// truth is supplied, because ground truths require k < d).
struct TraceContext {
    const GroundTruth* truth = nullptr;
    std::optional<Matrix> u_perp;
};

inline TraceContext make_trace_context(const GroundTruth* truth) {
    TraceContext ctx;
    ctx.truth = truth;
    if (truth && truth->u.rows() > truth->u.cols())
        ctx.u_perp = complement_basis(truth->u);
    return ctx;
}

// tan theta between the truth block and x, with the +inf sentinel both for
// no-oracle runs and for iterates too degenerate to orthonormalize. A
// degenerate *metric* input must not kill the run; the sentinel records it.
inline double tan_against_truth(const TraceContext& ctx, const Matrix& x) {
    if (!ctx.truth) return std::numeric_limits<double>::infinity();
    try {
        if (ctx.u_perp)
            return principal_angles(ctx.truth->u, *ctx.u_perp, x).tan_theta;
        return principal_angles(ctx.truth->u, x).tan_theta;
    } catch (const RankDeficient&) {
        return std::numeric_limits<double>::infinity();
    }
}

inline TraceRecord make_record(std::size_t t,
                               const std::vector<AgentState>& states,
                               const TraceContext& ctx) {
    const std::size_t m = states.size();
    std::vector<Matrix> w_slices;
    std::vector<Matrix> s_slices;
    w_slices.reserve(m);
    s_slices.reserve(m);
    for (const AgentState& st : states) {
        w_slices.push_back(st.w);
        s_slices.push_back(st.s);
    }
    const AgentTensor w_tensor(std::move(w_slices));
    const AgentTensor s_tensor(std::move(s_slices));

    double mean_tan = 0.0;
    for (const AgentState& st : states) mean_tan += tan_against_truth(ctx, st.w);
    mean_tan /= double(m);

    const Matrix s_mean = agent_mean(s_tensor);

    Matrix g_mean = states.front().g_prev;
    for (std::size_t j = 1; j < m; ++j) g_mean += states[j].g_prev;
    g_mean *= 1.0 / double(m);

    const double tracking = (s_mean - g_mean).frobenius_norm() /
                            std::max(1.0, g_mean.frobenius_norm());

    return {t,
            mean_tan,
            tan_against_truth(ctx, s_mean),
            consensus_error(s_tensor),
            consensus_error(w_tensor),
            tracking,
            smallest_singular_value(s_mean)};
}

inline double min_alignment(const std::vector<AgentState>& states,
                            const Matrix& w0) {
    double worst = std::numeric_limits<double>::infinity();
    for (const AgentState& st : states)
        for (std::size_t col = 0; col < w0.cols(); ++col) {
            double dot = 0.0;
            for (std::size_t row = 0; row < w0.rows(); ++row)
                dot += st.w(row, col) * w0(row, col);
            worst = std::min(worst, dot);
        }
    return worst;
}

inline void validate_run_inputs(const ProblemInstance& problem,
                                const WeightMatrix& w, const Matrix& w0,
                                const GroundTruth* truth) {
    if (problem.m == 0 || problem.local_matrices.size() != problem.m)
        throw std::invalid_argument("run: malformed problem instance");
    if (w.l.rows() != problem.m || w.l.cols() != problem.m)
        throw DimensionMismatch("run: weight matrix does not match agent count");
    if (w0.rows() != problem.d || w0.cols() != problem.k)
        throw DimensionMismatch("run: w0 must be d x k");
    require_orthonormal(w0, "run: w0");
    if (truth && (truth->u.rows() != problem.d || truth->u.cols() != problem.k))
        throw DimensionMismatch("run: ground truth does not match problem shape");
}

// Mean slice of the S stack, for the no-oracle stopping rule.
inline Matrix s_mean_of(const std::vector<AgentState>& states) {
    Matrix mean = states.front().s;
    for (std::size_t j = 1; j < states.size(); ++j) mean += states[j].s;
    mean *= 1.0 / double(states.size());
    return mean;
}

// Oracle runs stop on the plotted metric; oracle-free runs stop once the
// stack has both reached consensus and stopped moving.
inline bool should_stop(const TraceRecord& rec, const TraceContext& ctx,
                        double tol, const std::vector<AgentState>& states,
                        const Matrix* prev_s_mean) {
    if (ctx.truth) return rec.mean_tan_theta <= tol;
    if (!prev_s_mean) return false;
    const Matrix s_mean = s_mean_of(states);
    const double drift = (s_mean - *prev_s_mean).frobenius_norm() /
                         std::max(1.0, s_mean.frobenius_norm());
    return rec.s_consensus_err / std::sqrt(double(states.size())) <= tol &&
           drift <= tol;
}

} // namespace detail

/**
 * One synchronous round of the tracking algorithm:
 *   (i)  S_j += A_j W_j - G_j_prev, then remember G_j = A_j W_j;
 *   (ii) gossip-average the S stack with the accelerated mixer;
 *   (iii) W_j = sign_adjust(QR(S_j).q, w0).
 * The difference form in (i) keeps the agent mean of S glued to the mean of
 * the local products (the tracking identity) up to accumulated roundoff.
 * Throws RankDeficient out of (iii) when some S_j degenerates.
 */
inline std::vector<AgentState> deepca_step(const std::vector<AgentState>& states,
                                           const ProblemInstance& problem,
                                           const WeightMatrix& w,
                                           std::size_t k_steps,
                                           const Matrix& w0) {
    const std::size_t m = states.size();
    if (m != problem.m)
        throw DimensionMismatch("deepca_step: state count != agent count");

    std::vector<Matrix> s_slices;
    std::vector<Matrix> g_new;
    s_slices.reserve(m);
    g_new.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        Matrix g = problem.local_matrices[j] * states[j].w;
        Matrix s = states[j].s;
        s += g - states[j].g_prev;
        s_slices.push_back(std::move(s));
        g_new.push_back(std::move(g));
    }

    MixResult mixed = fast_mix(AgentTensor(std::move(s_slices)), w, k_steps);

    std::vector<AgentState> next;
    next.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        Matrix s = std::move(mixed.tensor.slices[j]);
        Matrix q = sign_adjust(qr_decompose(s).q, w0);
        next.push_back({std::move(q), std::move(s), std::move(g_new[j])});
    }
    return next;
}

/**
 * Full tracking run from the shared initial point w0 (every agent starts at
 * W_j = S_j = w0, with the previous-product convention G_j = w0). Stops when
 * the mean tan theta against the oracle truth drops to tol, or at max_iters.
 * Pass ground_truth = nullptr for the oracle-free mode: tan metrics become
 * +inf sentinels and stopping falls back to consensus-plus-stability.
 * A thrown step error ends the run early with the partial trace and the
 * message in RunResult::error.
 */
inline RunResult run_deepca(const ProblemInstance& problem, const WeightMatrix& w,
                            const Matrix& w0, std::size_t k_steps,
                            std::size_t max_iters, double tol,
                            const GroundTruth* ground_truth) {
    detail::validate_run_inputs(problem, w, w0, ground_truth);
    const detail::TraceContext ctx = detail::make_trace_context(ground_truth);

    std::vector<AgentState> states(problem.m, AgentState{w0, w0, w0});
    RunResult result;

    TraceRecord rec = detail::make_record(0, states, ctx);
    result.trace.push_back(rec);
    result.min_w0_alignment = detail::min_alignment(states, w0);
    result.converged = detail::should_stop(rec, ctx, tol, states, nullptr);

    Matrix prev_s_mean = detail::s_mean_of(states);
    std::size_t t = 0;
    while (t < max_iters && !result.converged) {
        try {
            states = deepca_step(states, problem, w, k_steps, w0);
        } catch (const Error& e) {
            result.error = e.what();
            break;
        }
        ++t;
        rec = detail::make_record(t, states, ctx);
        result.trace.push_back(rec);
        result.min_w0_alignment =
            std::min(result.min_w0_alignment, detail::min_alignment(states, w0));
        result.converged = detail::should_stop(rec, ctx, tol, states, &prev_s_mean);
        prev_s_mean = detail::s_mean_of(states);
    }

    result.iterations_run = t;
    result.final_states = std::move(states);
    return result;
}

/**
 * The no-tracking baseline. Each round every agent forms its raw local
 * product, the stack is gossip-averaged (accelerated or plain mixing by
 * flag), and the result is orthonormalized, optionally sign-adjusted.
 * Trace bookkeeping mirrors run_deepca: s holds the post-mix pre-QR stack,
 * g_prev the pre-mix local products.
 */
inline RunResult run_depca(const ProblemInstance& problem, const WeightMatrix& w,
                           const Matrix& w0, std::size_t k_steps,
                           std::size_t max_iters, double tol,
                           const GroundTruth* ground_truth, bool use_fast_mix,
                           bool use_sign_adjust) {
    detail::validate_run_inputs(problem, w, w0, ground_truth);
    const detail::TraceContext ctx = detail::make_trace_context(ground_truth);

    std::vector<AgentState> states(problem.m, AgentState{w0, w0, w0});
    RunResult result;

    TraceRecord rec = detail::make_record(0, states, ctx);
    result.trace.push_back(rec);
    result.min_w0_alignment = detail::min_alignment(states, w0);
    result.converged = detail::should_stop(rec, ctx, tol, states, nullptr);

    Matrix prev_s_mean = detail::s_mean_of(states);
    std::size_t t = 0;
    while (t < max_iters && !result.converged) {
        try {
            std::vector<Matrix> products;
            products.reserve(problem.m);
            for (std::size_t j = 0; j < problem.m; ++j)
                products.push_back(problem.local_matrices[j] * states[j].w);

            AgentTensor stack(products);
            MixResult mixed = use_fast_mix ? fast_mix(stack, w, k_steps)
                                           : plain_mix(stack, w, k_steps);

            for (std::size_t j = 0; j < problem.m; ++j) {
                Matrix s = std::move(mixed.tensor.slices[j]);
                Matrix q = qr_decompose(s).q;
                if (use_sign_adjust) q = sign_adjust(q, w0);
                states[j] = {std::move(q), std::move(s), std::move(products[j])};
            }
        } catch (const Error& e) {
            result.error = e.what();
            break;
        }
        ++t;
        rec = detail::make_record(t, states, ctx);
        result.trace.push_back(rec);
        result.min_w0_alignment =
            std::min(result.min_w0_alignment, detail::min_alignment(states, w0));
        result.converged = detail::should_stop(rec, ctx, tol, states, &prev_s_mean);
        prev_s_mean = detail::s_mean_of(states);
    }

    result.iterations_run = t;
    result.final_states = std::move(states);
    return result;
}

/**
 * Reference power method W <- sign_adjust(QR(A W).q, w0) on a single matrix,
 * emitted as a one-agent run so its trace lines up field-for-field with the
 * decentralized traces (consensus errors are identically zero).
 */
inline RunResult run_centralized_pm(const Matrix& a, const Matrix& w0,
                                    std::size_t max_iters, double tol,
                                    const GroundTruth* ground_truth) {
    if (a.rows() != a.cols() || a.rows() != w0.rows())
        throw DimensionMismatch("run_centralized_pm: a must be d x d matching w0");
    detail::require_orthonormal(w0, "run_centralized_pm: w0");
    if (ground_truth && (ground_truth->u.rows() != w0.rows() ||
                         ground_truth->u.cols() != w0.cols()))
        throw DimensionMismatch("run_centralized_pm: ground truth shape mismatch");

    const detail::TraceContext ctx = detail::make_trace_context(ground_truth);

    std::vector<AgentState> states{AgentState{w0, w0, w0}};
    RunResult result;

    TraceRecord rec = detail::make_record(0, states, ctx);
    result.trace.push_back(rec);
    result.min_w0_alignment = detail::min_alignment(states, w0);
    result.converged = detail::should_stop(rec, ctx, tol, states, nullptr);

    Matrix prev_s_mean = detail::s_mean_of(states);
    std::size_t t = 0;
    while (t < max_iters && !result.converged) {
        try {
            Matrix g = a * states[0].w;
            Matrix q = sign_adjust(qr_decompose(g).q, w0);
            Matrix s = g;
            states[0] = {std::move(q), std::move(s), std::move(g)};
        } catch (const Error& e) {
            result.error = e.what();
            break;
        }
        ++t;
        rec = detail::make_record(t, states, ctx);
        result.trace.push_back(rec);
        result.min_w0_alignment =
            std::min(result.min_w0_alignment, detail::min_alignment(states, w0));
        result.converged = detail::should_stop(rec, ctx, tol, states, &prev_s_mean);
        prev_s_mean = detail::s_mean_of(states);
    }

    result.iterations_run = t;
    result.final_states = std::move(states);
    return result;
}

} // namespace deepca
