#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "problem.hpp"
#include "random.hpp"

namespace deepca {

// ============================================================================
// Dataset ingestion and synthetic problem generation
//
// Real problems come from libsvm-format text: agent j owns a contiguous
// block of n samples and its local matrix is the sum of their outer
// products. Synthetic problems plant an exact spectrum and split zero-sum
// perturbations across agents so the mean matrix is known by construction.
// ============================================================================

struct Sample {
    double label;
    // (index, value) pairs, 1-based, strictly increasing by index.
    std::vector<std::pair<std::size_t, double>> features;
};

struct SampleSet {
    std::vector<Sample> samples;
    std::size_t max_index = 0;
};

/**
 * Parse libsvm text: one sample per line, "label idx:val [idx:val ...]",
 * whitespace-separated, indices 1-based and strictly increasing within a
 * line. Lines that are blank or start with '#' are skipped. Malformed
 * tokens, non-increasing indices, and non-finite values raise ParseError
 * carrying the 1-based line number.
 */
inline SampleSet parse_libsvm(std::istream& in) {
    SampleSet set;
    std::string line;
    std::size_t line_no = 0;

    auto parse_real = [](const std::string& token, double& out) {
        const char* begin = token.c_str();
        char* end = nullptr;
        out = std::strtod(begin, &end);
        return end == begin + token.size() && token.size() > 0 &&
               std::isfinite(out);
    };

    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream tokens(line);
        std::string token;
        tokens >> token;

        Sample sample;
        if (!parse_real(token, sample.label))
            throw ParseError(line_no, "bad label \"" + token + "\"");

        std::size_t prev_index = 0;
        while (tokens >> token) {
            const std::size_t colon = token.find(':');
            if (colon == std::string::npos || colon == 0 ||
                colon + 1 == token.size())
                throw ParseError(line_no, "bad feature token \"" + token + "\"");

            const std::string index_part = token.substr(0, colon);
            char* end = nullptr;
            const unsigned long long raw =
                std::strtoull(index_part.c_str(), &end, 10);
            if (end != index_part.c_str() + index_part.size() ||
                !std::isdigit(static_cast<unsigned char>(index_part[0])) ||
                raw == 0)
                throw ParseError(line_no, "bad feature index \"" + token + "\"");
            const std::size_t index = static_cast<std::size_t>(raw);
            if (index <= prev_index)
                throw ParseError(line_no, "non-increasing feature index " +
                                              std::to_string(index));

            double value = 0.0;
            if (!parse_real(token.substr(colon + 1), value))
                throw ParseError(line_no, "bad feature value \"" + token + "\"");

            sample.features.emplace_back(index, value);
            prev_index = index;
            set.max_index = std::max(set.max_index, index);
        }
        set.samples.push_back(std::move(sample));
    }
    return set;
}

inline SampleSet parse_libsvm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("parse_libsvm: cannot open " + path);
    return parse_libsvm(in);
}

// Inverse of parse_libsvm at full double precision, so parse(serialize(s))
// reproduces s exactly.
inline void serialize_libsvm(const SampleSet& set, std::ostream& out) {
    char buffer[64];
    for (const Sample& sample : set.samples) {
        std::snprintf(buffer, sizeof buffer, "%.17g", sample.label);
        out << buffer;
        for (const auto& [index, value] : sample.features) {
            std::snprintf(buffer, sizeof buffer, "%.17g", value);
            out << " " << index << ":" << buffer;
        }
        out << "\n";
    }
    if (!out) throw IoError("serialize_libsvm: stream failure");
}

/**
 * Partition the first m*n samples into contiguous blocks of n per agent and
 * form each agent's matrix as the sum of outer products of its densified
 * feature vectors. Densification keeps the first d coordinates: indices
 * above d are dropped, absent ones are zero. Throws InsufficientSamples
 * when the set holds fewer than m*n samples.
 */
inline ProblemInstance build_agent_matrices(const SampleSet& set, std::size_t m,
                                            std::size_t n, std::size_t d) {
    if (m == 0 || n == 0 || d == 0)
        throw std::invalid_argument("build_agent_matrices: m, n, d must be >= 1");
    const std::size_t needed = m * n;
    if (set.samples.size() < needed)
        throw InsufficientSamples(needed, set.samples.size());

    std::vector<Matrix> local;
    local.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
        Matrix a(d, d);
        for (std::size_t i = 0; i < n; ++i) {
            const Sample& sample = set.samples[j * n + i];
            // Sum of v v^T accumulated pair-by-pair over the sparse entries;
            // both (p, q) and (q, p) receive the same product, so the result
            // is symmetric to the bit.
            for (const auto& [pi, pv] : sample.features) {
                if (pi > d) continue;
                for (const auto& [qi, qv] : sample.features) {
                    if (qi > d) continue;
                    a(pi - 1, qi - 1) += pv * qv;
                }
            }
        }
        local.push_back(std::move(a));
    }
    return detail::assemble_problem(std::move(local), 1);
}

// Recipe for a planted-spectrum problem. The perturbations are symmetric,
// have Frobenius norm `heterogeneity` each, and sum to zero across agents
// exactly, so the mean matrix keeps the planted eigenvalues.
struct SyntheticSpec {
    std::size_t d;
    std::size_t k;
    std::size_t m;
    std::vector<double> eigenvalues; // length d, descending, positive
    double heterogeneity;
    std::uint64_t seed;
};

/**
 * Build A = U diag(eigenvalues) U^T from a seeded random orthonormal U and
 * hand agent j the matrix A + E_j. The last agent absorbs the negated sum
 * of the other perturbations, which forces sum_j E_j = 0 without roundoff;
 * with one agent or zero heterogeneity every A_j is exactly A.
 */
inline ProblemInstance generate_synthetic(const SyntheticSpec& spec) {
    const std::size_t d = spec.d;
    const std::size_t m = spec.m;
    if (d == 0 || m == 0)
        throw std::invalid_argument("generate_synthetic: d and m must be >= 1");
    if (spec.k < 1 || spec.k >= d)
        throw std::invalid_argument("generate_synthetic: need 1 <= k < d");
    if (spec.eigenvalues.size() != d)
        throw std::invalid_argument("generate_synthetic: need d eigenvalues");
    for (std::size_t i = 0; i < d; ++i) {
        if (!(spec.eigenvalues[i] > 0.0))
            throw std::invalid_argument("generate_synthetic: eigenvalues must be positive");
        if (i > 0 && spec.eigenvalues[i] > spec.eigenvalues[i - 1])
            throw std::invalid_argument("generate_synthetic: eigenvalues must descend");
    }
    if (spec.heterogeneity < 0.0)
        throw std::invalid_argument("generate_synthetic: heterogeneity must be >= 0");

    Rng rng(spec.seed);
    const Matrix u_full = qr_decompose(gaussian_matrix(d, d, rng)).q;

    Matrix scaled = u_full;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) scaled(i, j) *= spec.eigenvalues[j];
    const Matrix product = scaled * u_full.transpose();
    Matrix a(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            a(i, j) = 0.5 * (product(i, j) + product(j, i));

    std::vector<Matrix> local(m, a);
    if (m > 1 && spec.heterogeneity > 0.0) {
        Matrix running_sum(d, d);
        for (std::size_t j = 0; j + 1 < m; ++j) {
            const Matrix g = gaussian_matrix(d, d, rng);
            Matrix e(d, d);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t c = 0; c < d; ++c)
                    e(r, c) = 0.5 * (g(r, c) + g(c, r));
            e *= spec.heterogeneity / e.frobenius_norm();
            local[j] += e;
            running_sum += e;
        }
        local[m - 1] -= running_sum;
    }

    ProblemInstance problem =
        detail::assemble_problem(std::move(local), spec.k);
    // The assembled mean carries a few ulps of summation noise; the planted
    // matrix is the exact mean by construction, so prefer it.
    problem.mean = std::move(a);
    return problem;
}

} // namespace deepca
