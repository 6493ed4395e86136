#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace deepca {

// ============================================================================
// Dense row-major matrix
//
// The value type everything else is built on. Storage is one contiguous
// vector of doubles, shapes are fixed at construction, and construction from
// data rejects NaN/Inf outright, so a non-finite value downstream can only
// mean "sentinel", never "corrupted input". All reductions run in index
// order; given identical inputs the results are bit-identical.
// ============================================================================

class Matrix {
public:
    // Zero matrix. Empty shapes are rejected; a 0xN matrix has no meaning
    // anywhere in this library.
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(checked_size(rows, cols), 0.0) {}

    // From a flat row-major entry vector.
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != checked_size(rows, cols))
            throw DimensionMismatch("matrix: entry count does not match shape");
        require_finite();
    }

    // Row-wise brace construction, mostly for tests and small fixtures:
    //   Matrix m{{1.0, 2.0}, {3.0, 4.0}};
    Matrix(std::initializer_list<std::initializer_list<double>> rows)
        : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
        data_.reserve(checked_size(rows_, cols_));
        for (const auto& row : rows) {
            if (row.size() != cols_)
                throw DimensionMismatch("matrix: ragged initializer rows");
            data_.insert(data_.end(), row.begin(), row.end());
        }
        require_finite();
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix transpose() const {
        Matrix out(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
        return out;
    }

    // Contiguous column slice [first, first + count).
    Matrix columns(std::size_t first, std::size_t count) const {
        if (first + count > cols_)
            throw DimensionMismatch("matrix: column slice out of range");
        Matrix out(rows_, count);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < count; ++j) out(i, j) = (*this)(i, first + j);
        return out;
    }

    Matrix& operator+=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& o) {
        require_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    Matrix operator*(const Matrix& o) const {
        if (cols_ != o.rows_)
            throw DimensionMismatch("matrix: inner dimensions differ");
        Matrix out(rows_, o.cols_);
        for (std::size_t i = 0; i < rows_; ++i) {
            double* orow = &out.data_[i * o.cols_];
            for (std::size_t l = 0; l < cols_; ++l) {
                const double a = data_[i * cols_ + l];
                const double* brow = &o.data_[l * o.cols_];
                for (std::size_t j = 0; j < o.cols_; ++j) orow[j] += a * brow[j];
            }
        }
        return out;
    }

    double frobenius_norm() const {
        double sum = 0.0;
        for (double v : data_) sum += v * v;
        return std::sqrt(sum);
    }

    double trace() const {
        const std::size_t n = rows_ < cols_ ? rows_ : cols_;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += (*this)(i, i);
        return sum;
    }

private:
    static std::size_t checked_size(std::size_t rows, std::size_t cols) {
        if (rows == 0 || cols == 0)
            throw DimensionMismatch("matrix: shape must be at least 1x1");
        return rows * cols;
    }

    void require_finite() const {
        for (double v : data_)
            if (!std::isfinite(v))
                throw std::invalid_argument("matrix: entries must be finite");
    }

    void require_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw DimensionMismatch("matrix: shape mismatch");
    }

    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// a^T * b without materialising the transpose.
inline Matrix multiply_transposed(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw DimensionMismatch("multiply_transposed: row counts differ");
    Matrix out(a.cols(), b.cols());
    for (std::size_t l = 0; l < a.rows(); ++l)
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double v = a(l, i);
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(l, j);
        }
    return out;
}

// x^T x. Exactly symmetric: each off-diagonal pair is written from the same
// accumulated sum.
inline Matrix gram(const Matrix& x) {
    Matrix g(x.cols(), x.cols());
    for (std::size_t i = 0; i < x.cols(); ++i)
        for (std::size_t j = i; j < x.cols(); ++j) {
            double sum = 0.0;
            for (std::size_t l = 0; l < x.rows(); ++l) sum += x(l, i) * x(l, j);
            g(i, j) = g(j, i) = sum;
        }
    return g;
}

// x x^T, the other Gram side.
inline Matrix outer_gram(const Matrix& x) {
    Matrix g(x.rows(), x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = i; j < x.rows(); ++j) {
            double sum = 0.0;
            for (std::size_t l = 0; l < x.cols(); ++l) sum += x(i, l) * x(j, l);
            g(i, j) = g(j, i) = sum;
        }
    return g;
}

inline double max_abs_difference(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionMismatch("max_abs_difference: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double d = std::abs(a.data()[i] - b.data()[i]);
        if (d > m) m = d;
    }
    return m;
}

} // namespace deepca
