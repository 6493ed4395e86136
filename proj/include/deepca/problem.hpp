#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "linalg.hpp"

namespace deepca {

// ============================================================================
// Problem instances and the eigen oracle
//
// A problem is m local symmetric matrices A_j whose mean A is the matrix
// actually being decomposed. The individual A_j may be indefinite; only the
// mean has to be (numerically) positive semidefinite. The oracle solves the
// mean exactly so runs can be measured against the true invariant subspace.
// ============================================================================

struct ProblemInstance {
    std::vector<Matrix> local_matrices; // m matrices, each d x d
    Matrix mean;                        // (1/m) * sum of local matrices
    std::size_t d;
    std::size_t k; // target rank; loaders default it to 1, callers override
    std::size_t m;
    double spectral_bound; // L with ||A_j||_2 <= L for every agent
};

// Exact decomposition of the mean matrix: the top-k eigenvector block, the
// full descending spectrum, and the two eigenvalues that bracket the target
// rank. Requires 1 <= k < d so the gap quantities exist.
struct GroundTruth {
    Matrix u; // d x k
    std::vector<double> eigenvalues;
    double lambda_k;
    double lambda_k1;
    double spectral_bound;
};

namespace detail {

// Shared assembly for the loaders: mean, dimensions, and the bound
// L = max_j ||A_j||_2.
inline ProblemInstance assemble_problem(std::vector<Matrix> local,
                                        std::size_t k) {
    const std::size_t m = local.size();
    const std::size_t d = local.front().rows();
    for (const Matrix& a : local)
        if (a.rows() != d || a.cols() != d)
            throw DimensionMismatch("problem: local matrices must all be d x d");

    Matrix mean = local.front();
    for (std::size_t j = 1; j < m; ++j) mean += local[j];
    mean *= 1.0 / double(m);

    double bound = 0.0;
    for (const Matrix& a : local) bound = std::max(bound, spectral_norm(a));

    return {std::move(local), std::move(mean), d, k, m, bound};
}

} // namespace detail

/**
 * Solve the mean matrix with the symmetric eigensolver and package the top-k
 * block. Rejects problems whose mean is not positive semidefinite within
 * 1e-8 (relative to its largest eigenvalue) and ranks outside [1, d).
 */
inline GroundTruth compute_ground_truth(const ProblemInstance& problem) {
    if (problem.k < 1 || problem.k >= problem.d)
        throw std::invalid_argument("ground truth: need 1 <= k < d");

    EigenDecomposition eig = symmetric_eigen(problem.mean);
    const double scale = std::max(1.0, eig.values.front());
    if (eig.values.back() < -1e-8 * scale)
        throw std::invalid_argument(
            "ground truth: mean matrix is not positive semidefinite");

    Matrix u = eig.vectors.columns(0, problem.k);
    const double lambda_k = eig.values[problem.k - 1];
    const double lambda_k1 = eig.values[problem.k];
    return {std::move(u), std::move(eig.values), lambda_k, lambda_k1,
            problem.spectral_bound};
}

} // namespace deepca
