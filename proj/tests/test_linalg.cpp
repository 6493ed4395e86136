#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "deepca/linalg.hpp"
#include "deepca/random.hpp"

using namespace deepca;

namespace {

// ---------------------------------------------------------------------------
// Independent oracles. These are deliberately different algorithms from the
// library kernels they check: spans come from modified Gram-Schmidt, small
// eigenproblems from closed forms.
// ---------------------------------------------------------------------------

// Modified Gram-Schmidt with a re-orthogonalisation pass. Only the span of
// the result is compared against the library, via orthogonal projectors.
Matrix gram_schmidt(const Matrix& x) {
    Matrix q = x;
    for (std::size_t j = 0; j < q.cols(); ++j) {
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t l = 0; l < j; ++l) {
                double dot = 0.0;
                for (std::size_t i = 0; i < q.rows(); ++i) dot += q(i, l) * q(i, j);
                for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) -= dot * q(i, l);
            }
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < q.rows(); ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < q.rows(); ++i) q(i, j) /= norm;
    }
    return q;
}

// Closed-form eigenvalues of [[a, b], [b, c]], returned (largest, smallest).
std::pair<double, double> eigen2x2(double a, double b, double c) {
    const double mean = 0.5 * (a + c);
    const double radius = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    return {mean + radius, mean - radius};
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    return gaussian_matrix(rows, cols, rng);
}

Matrix random_psd(std::size_t n, std::uint64_t seed) {
    const Matrix b = random_matrix(n, n, seed);
    return gram(b) * (1.0 / static_cast<double>(n));
}

Matrix projector(const Matrix& q) { return outer_gram(q); }

double residual_norm(const Matrix& a, const Matrix& v, double lambda,
                     std::size_t column) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double av = 0.0;
        for (std::size_t l = 0; l < a.cols(); ++l) av += a(i, l) * v(l, column);
        const double r = av - lambda * v(i, column);
        sum += r * r;
    }
    return std::sqrt(sum);
}

} // namespace

// ---------------------------------------------------------------------------
// QR
// ---------------------------------------------------------------------------

TEST(Qr, IdentityPassesThrough) {
    const QrResult f = qr_decompose(Matrix::identity(3));
    EXPECT_LE(max_abs_difference(f.q, Matrix::identity(3)), 1e-15);
    EXPECT_LE(max_abs_difference(f.r, Matrix::identity(3)), 1e-15);
}

TEST(Qr, SingleColumnNormalises) {
    const Matrix x{{3.0}, {4.0}};
    const QrResult f = qr_decompose(x);
    EXPECT_NEAR(f.q(0, 0), 0.6, 1e-15);
    EXPECT_NEAR(f.q(1, 0), 0.8, 1e-15);
    EXPECT_NEAR(f.r(0, 0), 5.0, 1e-15);
}

TEST(Qr, ReconstructsAndIsOrthonormal) {
    const Matrix x = random_matrix(6, 3, 42);
    const QrResult f = qr_decompose(x);

    const Matrix back = f.q * f.r;
    EXPECT_LE((back - x).frobenius_norm(), 1e-10 * x.frobenius_norm());
    EXPECT_LE(max_abs_difference(gram(f.q), Matrix::identity(3)), 1e-12);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(f.r(i, j), 0.0);
}

TEST(Qr, SpanMatchesGramSchmidtOracle) {
    const Matrix x = random_matrix(6, 3, 42);
    const Matrix q_oracle = gram_schmidt(x);
    const Matrix q = qr_decompose(x).q;
    EXPECT_LE(max_abs_difference(projector(q), projector(q_oracle)), 1e-9);
}

TEST(Qr, DiagonalOfRIsNonNegative) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const QrResult f = qr_decompose(random_matrix(8, 4, seed));
        for (std::size_t j = 0; j < 4; ++j) EXPECT_GE(f.r(j, j), 0.0) << "seed " << seed;
    }
}

TEST(Qr, RankDeficientInputThrows) {
    Matrix dup(4, 2);
    for (std::size_t i = 0; i < 4; ++i) dup(i, 0) = dup(i, 1) = static_cast<double>(i + 1);
    EXPECT_THROW(qr_decompose(dup), RankDeficient);
    EXPECT_THROW(qr_decompose(Matrix(3, 2)), RankDeficient); // zero matrix
}

TEST(Qr, RankGateIsScaleInvariant) {
    const Matrix x = random_matrix(5, 3, 9);
    EXPECT_NO_THROW(qr_decompose(x));
    EXPECT_NO_THROW(qr_decompose(x * 1e-8));
    const Matrix q_big = qr_decompose(x).q;
    const Matrix q_small = qr_decompose(x * 1e-8).q;
    EXPECT_LE(max_abs_difference(projector(q_big), projector(q_small)), 1e-10);
}

TEST(Qr, WideInputThrows) {
    EXPECT_THROW(qr_decompose(random_matrix(2, 4, 1)), DimensionMismatch);
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition
// ---------------------------------------------------------------------------

TEST(Eigen, DiagonalInputIsImmediate) {
    const Matrix a{{3.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 1.0}};
    const EigenDecomposition e = symmetric_eigen(a);
    EXPECT_EQ(e.values, (std::vector<double>{3.0, 2.0, 1.0}));
    EXPECT_LE(max_abs_difference(e.vectors, Matrix::identity(3)), 0.0);
}

TEST(Eigen, MatchesClosedForm2x2) {
    const Matrix a{{2.0, 1.0}, {1.0, 2.0}};
    const auto [hi, lo] = eigen2x2(2.0, 1.0, 2.0);
    const EigenDecomposition e = symmetric_eigen(a);
    EXPECT_NEAR(e.values[0], hi, 1e-12); // 3
    EXPECT_NEAR(e.values[1], lo, 1e-12); // 1
    // Eigenvectors are (1,1)/sqrt(2) and (1,-1)/sqrt(2) up to sign.
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    EXPECT_NEAR(std::abs(e.vectors(0, 0) * inv_sqrt2 + e.vectors(1, 0) * inv_sqrt2), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(e.vectors(0, 1) * inv_sqrt2 - e.vectors(1, 1) * inv_sqrt2), 1.0, 1e-12);
}

TEST(Eigen, RandomPsdResidualsAndOrthogonality) {
    const Matrix a = random_psd(20, 7);
    const EigenDecomposition e = symmetric_eigen(a);

    for (std::size_t i = 0; i + 1 < e.values.size(); ++i)
        EXPECT_GE(e.values[i], e.values[i + 1]);
    for (std::size_t i = 0; i < e.values.size(); ++i)
        EXPECT_LE(residual_norm(a, e.vectors, e.values[i], i), 1e-8 * e.values.front());
    EXPECT_LE(max_abs_difference(gram(e.vectors), Matrix::identity(20)), 1e-10);

    // Reconstruction v diag(values) v^T.
    Matrix scaled = e.vectors;
    for (std::size_t j = 0; j < 20; ++j)
        for (std::size_t i = 0; i < 20; ++i) scaled(i, j) *= e.values[j];
    const Matrix back = scaled * e.vectors.transpose();
    EXPECT_LE((back - a).frobenius_norm(), 1e-9 * a.frobenius_norm());
}

TEST(Eigen, TraceAndFrobeniusIdentities) {
    const Matrix a = random_psd(16, 11);
    const EigenDecomposition e = symmetric_eigen(a);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double v : e.values) {
        sum += v;
        sum_sq += v * v;
    }
    EXPECT_NEAR(sum, a.trace(), 1e-10 * std::abs(a.trace()));
    const double f2 = a.frobenius_norm() * a.frobenius_norm();
    EXPECT_NEAR(sum_sq, f2, 1e-10 * f2);
}

TEST(Eigen, RejectsAsymmetricAndNonSquare) {
    const Matrix bad{{1.0, 2.0}, {0.5, 1.0}};
    EXPECT_THROW(symmetric_eigen(bad), NotSymmetric);
    EXPECT_THROW(symmetric_eigen(Matrix(2, 3)), DimensionMismatch);
}

TEST(Eigen, HandlesZeroAndScalar) {
    const EigenDecomposition z = symmetric_eigen(Matrix(3, 3));
    EXPECT_EQ(z.values, (std::vector<double>{0.0, 0.0, 0.0}));
    const EigenDecomposition s = symmetric_eigen(Matrix{{5.0}});
    EXPECT_EQ(s.values, (std::vector<double>{5.0}));
    EXPECT_EQ(s.vectors(0, 0), 1.0);
}

// ---------------------------------------------------------------------------
// Spectral extremes
// ---------------------------------------------------------------------------

TEST(SpectralNorm, KnownValues) {
    EXPECT_NEAR(spectral_norm(Matrix{{5.0, 0.0}, {0.0, 1.0}}), 5.0, 1e-12);
    EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0);
    EXPECT_NEAR(spectral_norm(Matrix{{0.0, 2.0}, {0.0, 0.0}}), 2.0, 1e-12);
}

TEST(SpectralNorm, AgreesAcrossGramSides) {
    const Matrix x = random_matrix(7, 3, 21);
    EXPECT_NEAR(spectral_norm(x), spectral_norm(x.transpose()), 1e-10);
}

TEST(SpectralNorm, DominatesSmallestSingularValue) {
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        const Matrix x = random_matrix(6, 4, seed);
        EXPECT_GE(spectral_norm(x) + 1e-14, smallest_singular_value(x));
    }
    // A single column has exactly one singular value.
    const Matrix col = random_matrix(5, 1, 40);
    EXPECT_NEAR(spectral_norm(col), smallest_singular_value(col), 1e-12);
}

TEST(SmallestSingularValue, KnownValues) {
    EXPECT_NEAR(smallest_singular_value(Matrix::identity(4)), 1.0, 1e-14);
    EXPECT_NEAR(smallest_singular_value(Matrix{{3.0, 0.0}, {0.0, 0.5}}), 0.5, 1e-13);
    EXPECT_THROW(smallest_singular_value(Matrix(2, 3)), DimensionMismatch);
}

TEST(SmallestSingularValue, NearCollinearColumns) {
    // Columns (1,0,0,0,0) and (1,1e-3,0,0,0): the Gram matrix is
    // [[1, 1], [1, 1 + 1e-6]], whose closed-form smallest eigenvalue gives
    // sigma_min ~= 7.071e-4.
    Matrix x(5, 2);
    x(0, 0) = 1.0;
    x(0, 1) = 1.0;
    x(1, 1) = 1e-3;
    const auto [hi, lo] = eigen2x2(1.0, 1.0, 1.0 + 1e-6);
    (void)hi;
    const double oracle = std::sqrt(lo);
    const double got = smallest_singular_value(x);
    EXPECT_NEAR(got, oracle, 1e-8 * oracle);
    EXPECT_NEAR(got, 7.0710678e-4, 1e-6 * 7.0710678e-4);
}

// ---------------------------------------------------------------------------
// Complement basis
// ---------------------------------------------------------------------------

TEST(ComplementBasis, AxisVector) {
    Matrix u(3, 1);
    u(0, 0) = 1.0;
    const Matrix v = complement_basis(u);
    ASSERT_EQ(v.rows(), 3u);
    ASSERT_EQ(v.cols(), 2u);
    EXPECT_LE(max_abs_difference(multiply_transposed(v, u), Matrix(2, 1)), 1e-10);
    EXPECT_LE(max_abs_difference(gram(v), Matrix::identity(2)), 1e-10);
}

TEST(ComplementBasis, CompletesToFullSpace) {
    const Matrix u = qr_decompose(random_matrix(8, 3, 3)).q;
    const Matrix v = complement_basis(u);
    EXPECT_LE(max_abs_difference(multiply_transposed(v, u), Matrix(5, 3)), 1e-10);
    EXPECT_LE(max_abs_difference(gram(v), Matrix::identity(5)), 1e-10);
    const Matrix full = projector(u) + projector(v);
    EXPECT_LE(max_abs_difference(full, Matrix::identity(8)), 1e-10);
}

TEST(ComplementBasis, RejectsFullSpaceAndSkewInput) {
    EXPECT_THROW(complement_basis(Matrix::identity(2)), DimensionMismatch);
    Matrix skew(4, 2);
    skew(0, 0) = 1.0;
    skew(0, 1) = 1.0;
    skew(1, 1) = 1.0;
    EXPECT_THROW(complement_basis(skew), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Principal angles
// ---------------------------------------------------------------------------

TEST(PrincipalAnglesTest, IdenticalSubspaces) {
    const Matrix u = qr_decompose(random_matrix(4, 2, 17)).q;
    // Same span, different basis.
    const Matrix c{{2.0, -1.0}, {1.0, 3.0}};
    const PrincipalAngles pa = principal_angles(u, u * c);
    EXPECT_NEAR(pa.cos_theta, 1.0, 1e-12);
    EXPECT_LE(pa.sin_theta, 1e-10);
    EXPECT_LE(pa.tan_theta, 1e-10);
}

TEST(PrincipalAnglesTest, OrthogonalSubspacesHitTheSentinel) {
    Matrix u(2, 1);
    u(0, 0) = 1.0;
    Matrix x(2, 1);
    x(1, 0) = 1.0;
    const PrincipalAngles pa = principal_angles(u, x);
    EXPECT_LE(pa.cos_theta, 1e-13);
    EXPECT_NEAR(pa.sin_theta, 1.0, 1e-12);
    EXPECT_TRUE(std::isinf(pa.tan_theta));
    EXPECT_GT(pa.tan_theta, 0.0);
}

TEST(PrincipalAnglesTest, PlaneRotationByKnownAngle) {
    Matrix u(2, 1);
    u(0, 0) = 1.0;
    Matrix x(2, 1);
    x(0, 0) = std::cos(0.3);
    x(1, 0) = std::sin(0.3);
    const PrincipalAngles pa = principal_angles(u, x);
    EXPECT_NEAR(pa.cos_theta, std::cos(0.3), 1e-12);
    EXPECT_NEAR(pa.sin_theta, std::sin(0.3), 1e-12);
    EXPECT_NEAR(pa.tan_theta, std::tan(0.3), 1e-12);
}

TEST(PrincipalAnglesTest, InvariantUnderChangeOfBasis) {
    const Matrix u = qr_decompose(random_matrix(8, 3, 5)).q;
    const Matrix x = random_matrix(8, 3, 6);
    // Well-conditioned basis change.
    Matrix c = random_matrix(3, 3, 8) * 0.4;
    for (std::size_t i = 0; i < 3; ++i) c(i, i) += 2.0;

    const PrincipalAngles a = principal_angles(u, x);
    const PrincipalAngles b = principal_angles(u, x * c);
    EXPECT_NEAR(a.cos_theta, b.cos_theta, 1e-9);
    EXPECT_NEAR(a.sin_theta, b.sin_theta, 1e-9);
    EXPECT_NEAR(a.tan_theta, b.tan_theta, 1e-9 * (1.0 + a.tan_theta));
}

TEST(PrincipalAnglesTest, TrigonometricIdentities) {
    for (std::uint64_t seed = 50; seed < 58; ++seed) {
        const Matrix u = qr_decompose(random_matrix(9, 3, seed)).q;
        const Matrix x = random_matrix(9, 3, seed + 100);
        const PrincipalAngles pa = principal_angles(u, x);
        EXPECT_NEAR(pa.cos_theta * pa.cos_theta + pa.sin_theta * pa.sin_theta, 1.0, 1e-8);
        if (pa.cos_theta > 1e-8) {
            const double ratio = pa.sin_theta / pa.cos_theta;
            EXPECT_NEAR(pa.tan_theta, ratio, 1e-6 * ratio);
        }
    }
}

TEST(PrincipalAnglesTest, PrecomputedComplementMatchesInternal) {
    const Matrix u = qr_decompose(random_matrix(7, 2, 61)).q;
    const Matrix comp = complement_basis(u);
    const Matrix x = random_matrix(7, 2, 62);
    const PrincipalAngles a = principal_angles(u, x);
    const PrincipalAngles b = principal_angles(u, comp, x);
    EXPECT_EQ(a.cos_theta, b.cos_theta);
    EXPECT_EQ(a.sin_theta, b.sin_theta);
    EXPECT_EQ(a.tan_theta, b.tan_theta);
}

TEST(PrincipalAnglesTest, RejectsBadInputs) {
    const Matrix u = qr_decompose(random_matrix(5, 2, 70)).q;
    Matrix skew(5, 2);
    skew(0, 0) = 1.0;
    skew(0, 1) = 1.0;
    skew(1, 1) = 1.0;
    EXPECT_THROW(principal_angles(skew, u), std::invalid_argument);

    Matrix dup(5, 2);
    for (std::size_t i = 0; i < 5; ++i) dup(i, 0) = dup(i, 1) = static_cast<double>(i) + 1.0;
    EXPECT_THROW(principal_angles(u, dup), RankDeficient);

    EXPECT_THROW(principal_angles(u, random_matrix(4, 2, 71)), DimensionMismatch);
}
