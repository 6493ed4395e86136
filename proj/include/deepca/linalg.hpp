#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "matrix.hpp"

namespace deepca {

// ============================================================================
// Dense linear-algebra kernels
//
// Self-contained double-precision kernels sized for desk-scale problems
// (hundreds of rows, a handful of columns): Householder QR, a cyclic Jacobi
// eigensolver for symmetric matrices, spectral extremes through the smaller
// Gram matrix, and principal angles between subspaces. No pivoting heuristic
// depends on data-dependent ties and reductions always run in index order,
// so every kernel is deterministic.
// ============================================================================

struct QrResult {
    Matrix q; // orthonormal columns, same shape as the input
    Matrix r; // square upper triangular, non-negative diagonal
};

struct EigenDecomposition {
    std::vector<double> values; // descending
    Matrix vectors;             // column i pairs with values[i]
};

struct PrincipalAngles {
    double cos_theta;
    double sin_theta;
    double tan_theta; // +infinity when the subspaces are numerically orthogonal
};

// ============================================================================
// Symmetric eigendecomposition (cyclic Jacobi)
// ============================================================================

/**
 * Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
 *
 * Sweeps rotate every off-diagonal pair in row-major order until the
 * off-diagonal Frobenius norm drops below 1e-12 times the input norm.
 * Eigenpairs come back sorted by descending eigenvalue; the sort is stable,
 * so ties keep the order the rotations produced.
 *
 * Throws NotSymmetric when ||a - a^T||_F exceeds 1e-10 * ||a||_F and
 * NoConvergence if 100 sweeps do not reach the threshold (in practice the
 * quadratic tail converges in well under twenty).
 */
inline EigenDecomposition symmetric_eigen(const Matrix& a) {
    if (a.rows() != a.cols())
        throw DimensionMismatch("symmetric_eigen: matrix must be square");
    const std::size_t n = a.rows();
    const double fnorm = a.frobenius_norm();

    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = a(i, j) - a(j, i);
            asym += 2.0 * d * d;
        }
    if (std::sqrt(asym) > 1e-10 * fnorm)
        throw NotSymmetric("symmetric_eigen: input is not symmetric");

    // Work on the exactly symmetrised copy; the input may carry asymmetry up
    // to the gate above, and the rotation update assumes w(i,p) == w(p,i).
    Matrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        w(i, i) = a(i, i);
        for (std::size_t j = i + 1; j < n; ++j)
            w(i, j) = w(j, i) = 0.5 * (a(i, j) + a(j, i));
    }
    Matrix v = Matrix::identity(n);

    const double thresh = 1e-12 * fnorm;
    const auto off_norm = [&w, n] {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * w(i, j) * w(i, j);
        return std::sqrt(sum);
    };

    bool converged = off_norm() <= thresh;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = w(p, q);
                if (apq == 0.0) continue;
                const double app = w(p, p);
                const double aqq = w(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                double t;
                if (std::abs(theta) > 1e150) {
                    t = 1.0 / (2.0 * theta); // asymptotic form, avoids theta^2 overflow
                } else {
                    t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                    if (theta < 0.0) t = -t;
                }
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                w(p, p) = app - t * apq;
                w(q, q) = aqq + t * apq;
                w(p, q) = w(q, p) = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = w(i, p);
                    const double aiq = w(i, q);
                    w(i, p) = w(p, i) = aip - s * (aiq + tau * aip);
                    w(i, q) = w(q, i) = aiq + s * (aip - tau * aiq);
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p);
                    const double viq = v(i, q);
                    v(i, p) = vip - s * (viq + tau * vip);
                    v(i, q) = viq + s * (vip - tau * viq);
                }
            }
        }
        converged = off_norm() <= thresh;
    }
    if (!converged)
        throw NoConvergence("symmetric_eigen: sweep limit reached");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&w](std::size_t i, std::size_t j) { return w(i, i) > w(j, j); });

    EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = w(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

// ============================================================================
// Spectral extremes via the smaller Gram matrix
// ============================================================================

// Largest singular value. Eigenvalues of x^T x (or x x^T, whichever is
// smaller) are the squared singular values of x.
inline double spectral_norm(const Matrix& x) {
    const Matrix g = x.rows() >= x.cols() ? gram(x) : outer_gram(x);
    const EigenDecomposition e = symmetric_eigen(g);
    return std::sqrt(std::max(e.values.front(), 0.0));
}

// Smallest singular value of a tall matrix.
inline double smallest_singular_value(const Matrix& x) {
    if (x.rows() < x.cols())
        throw DimensionMismatch("smallest_singular_value: needs rows >= cols");
    const EigenDecomposition e = symmetric_eigen(gram(x));
    return std::sqrt(std::max(e.values.back(), 0.0));
}

// ============================================================================
// Householder QR
// ============================================================================

namespace detail {

struct HouseholderFactor {
    Matrix q; // d x k (thin) or d x d (full)
    Matrix r; // k x k upper triangular
};

/**
 * Householder reduction of a tall matrix. The rank gate is relative to the
 * largest singular value, so rescaling the input never changes the verdict:
 * a pivot column whose remaining norm is at most 1e-13 * ||x||_2 means the
 * columns are numerically dependent and RankDeficient is thrown.
 *
 * With full_q the complete d x d orthogonal factor is accumulated; its last
 * d - k columns span the orthogonal complement of the column space.
 */
inline HouseholderFactor householder_qr(const Matrix& x, bool full_q) {
    const std::size_t d = x.rows();
    const std::size_t k = x.cols();
    if (d < k)
        throw DimensionMismatch("qr: more columns than rows");

    const double tol = 1e-13 * spectral_norm(x);

    Matrix a = x;
    std::vector<std::vector<double>> reflectors;
    reflectors.reserve(k);
    std::vector<double> betas(k, 0.0);

    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < d; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm <= tol)
            throw RankDeficient("qr: column " + std::to_string(j) +
                                " is numerically dependent on its predecessors");

        std::vector<double> v(d - j);
        for (std::size_t i = j; i < d; ++i) v[i - j] = a(i, j);
        v[0] += (v[0] >= 0.0 ? norm : -norm);
        double vtv = 0.0;
        for (double e : v) vtv += e * e;
        const double beta = 2.0 / vtv;

        for (std::size_t col = j; col < k; ++col) {
            double dot = 0.0;
            for (std::size_t i = j; i < d; ++i) dot += v[i - j] * a(i, col);
            const double f = beta * dot;
            for (std::size_t i = j; i < d; ++i) a(i, col) -= f * v[i - j];
        }
        reflectors.push_back(std::move(v));
        betas[j] = beta;
    }

    Matrix r(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) r(i, j) = a(i, j);

    // Accumulate Q by applying the reflectors, last to first, to an identity
    // block.
    const std::size_t qcols = full_q ? d : k;
    Matrix q(d, qcols);
    for (std::size_t i = 0; i < qcols; ++i) q(i, i) = 1.0;
    for (std::size_t j = k; j-- > 0;) {
        const std::vector<double>& v = reflectors[j];
        for (std::size_t col = 0; col < qcols; ++col) {
            double dot = 0.0;
            for (std::size_t i = j; i < d; ++i) dot += v[i - j] * q(i, col);
            const double f = betas[j] * dot;
            for (std::size_t i = j; i < d; ++i) q(i, col) -= f * v[i - j];
        }
    }

    // Canonical form: flip signs so every diagonal entry of R is
    // non-negative, which makes the factorisation unique.
    for (std::size_t j = 0; j < k; ++j) {
        if (r(j, j) < 0.0) {
            for (std::size_t col = j; col < k; ++col) r(j, col) = -r(j, col);
            for (std::size_t i = 0; i < d; ++i) q(i, j) = -q(i, j);
        }
    }
    return {std::move(q), std::move(r)};
}

// Solve y * r = b for y, with r upper triangular (columns resolved left to
// right). The caller guarantees r has a positive diagonal.
inline Matrix solve_right_upper(const Matrix& b, const Matrix& r) {
    const std::size_t k = r.rows();
    Matrix y(b.rows(), k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t i = 0; i < b.rows(); ++i) {
            double acc = b(i, j);
            for (std::size_t l = 0; l < j; ++l) acc -= y(i, l) * r(l, j);
            y(i, j) = acc / r(j, j);
        }
    }
    return y;
}

} // namespace detail

// Thin QR with orthonormal q and upper-triangular r whose diagonal is
// non-negative. Throws RankDeficient when the columns are numerically
// dependent.
inline QrResult qr_decompose(const Matrix& x) {
    detail::HouseholderFactor f = detail::householder_qr(x, false);
    return {std::move(f.q), std::move(f.r)};
}

// ============================================================================
// Subspace geometry
// ============================================================================

namespace detail {

inline void require_orthonormal(const Matrix& u, const char* who) {
    const Matrix g = gram(u);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) {
            const double target = i == j ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(g(i, j) - target));
        }
    if (worst > 1e-8)
        throw std::invalid_argument(std::string(who) + ": columns must be orthonormal");
}

} // namespace detail

/**
 * Orthonormal basis of the orthogonal complement of col(u).
 *
 * The full Householder factor of u is an orthogonal d x d matrix whose first
 * k columns span col(u); the remaining d - k columns are returned. Requires
 * orthonormal u with k < d.
 */
inline Matrix complement_basis(const Matrix& u) {
    const std::size_t d = u.rows();
    const std::size_t k = u.cols();
    if (k >= d)
        throw DimensionMismatch("complement_basis: subspace already fills the space");
    detail::require_orthonormal(u, "complement_basis");
    detail::HouseholderFactor f = detail::householder_qr(u, true);
    return f.q.columns(k, d - k);
}

namespace detail {

inline PrincipalAngles principal_angles_impl(const Matrix& u, const Matrix* u_perp,
                                             const Matrix& x) {
    if (u.rows() != x.rows() || u.cols() != x.cols())
        throw DimensionMismatch("principal_angles: u and x must share a shape");
    require_orthonormal(u, "principal_angles");

    // Only the span of x matters; orthonormalise it first. A rank-deficient
    // x has no well-defined k-dimensional span and RankDeficient propagates.
    const Matrix q = qr_decompose(x).q;

    const Matrix m = multiply_transposed(u, q); // k x k
    const double cos_theta = smallest_singular_value(m);
    const double sin_theta = u_perp ? spectral_norm(multiply_transposed(*u_perp, q)) : 0.0;

    constexpr double kDegenerate = 1e-13;
    const double inf = std::numeric_limits<double>::infinity();
    double tan_theta;
    if (cos_theta <= kDegenerate) {
        tan_theta = inf; // numerically orthogonal: report the sentinel
    } else if (!u_perp) {
        tan_theta = 0.0; // k == d: there is no direction to leak into
    } else {
        // tan = ||(u_perp^T q)(u^T q)^{-1}||_2. Factor m = q_m r_m; right-
        // multiplying by the orthogonal q_m^T preserves singular values, so
        // solving y r_m = u_perp^T q is enough.
        try {
            const QrResult f = qr_decompose(m);
            const Matrix y =
                solve_right_upper(multiply_transposed(*u_perp, q), f.r);
            tan_theta = spectral_norm(y);
        } catch (const RankDeficient&) {
            tan_theta = inf;
        }
    }
    return {cos_theta, sin_theta, tan_theta};
}

} // namespace detail

/**
 * Principal angles between col(u) and col(x), reported through the largest
 * angle theta_k: cos is the smallest singular value of u^T q, sin the
 * largest of u_perp^T q, and tan their CS-paired ratio. When the subspaces
 * are numerically orthogonal (cos <= 1e-13) tan is +infinity rather than an
 * error, so metric collection can keep going.
 *
 * This overload takes a precomputed complement basis; use it when many
 * angles against the same u are needed.
 */
inline PrincipalAngles principal_angles(const Matrix& u, const Matrix& u_perp,
                                        const Matrix& x) {
    return detail::principal_angles_impl(u, &u_perp, x);
}

// As above, computing the complement of u internally (or skipping it when u
// is square, in which case sin is exactly zero).
inline PrincipalAngles principal_angles(const Matrix& u, const Matrix& x) {
    if (u.cols() == u.rows())
        return detail::principal_angles_impl(u, nullptr, x);
    const Matrix comp = complement_basis(u);
    return detail::principal_angles_impl(u, &comp, x);
}

} // namespace deepca
