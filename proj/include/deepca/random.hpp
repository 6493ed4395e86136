#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "matrix.hpp"

namespace deepca {

// ============================================================================
// Deterministic random values
//
// std::mt19937_64's output sequence is pinned down by the standard, but the
// standard *distributions* are not, so uniform and normal variates are built
// here directly from raw engine words. Identical seeds therefore give
// identical streams on every platform and standard library.
// ============================================================================

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Independent substream: same seed, different stream index.
    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{seed, stream};
        engine_.seed(seq);
    }

    std::uint64_t word() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the spare variate is cached so each
    // pair of uniforms yields two normals.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0, 1], keeps the log finite
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

inline Matrix gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

} // namespace deepca
