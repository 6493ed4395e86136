#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "linalg.hpp"
#include "random.hpp"

namespace deepca {

// ============================================================================
// Gossip topology
//
// Undirected connected graphs over m agents and the consensus weight matrix
// built from the graph Laplacian. Connectivity is part of the Graph type's
// contract: a Graph that exists is connected, so downstream code never has
// to re-check.
// ============================================================================

using Edge = std::pair<std::size_t, std::size_t>;

class Graph {
public:
    // Edges are stored normalised (i < j) and sorted. Construction validates
    // vertex bounds, forbids self loops and duplicates, and requires the
    // graph to be connected (trivially true for m = 1).
    Graph(std::size_t m, std::vector<Edge> edges) : m_(m), edges_(std::move(edges)) {
        if (m_ == 0)
            throw std::invalid_argument("graph: needs at least one agent");
        for (Edge& e : edges_) {
            if (e.first == e.second)
                throw std::invalid_argument("graph: self loops are not allowed");
            if (e.first > e.second) std::swap(e.first, e.second);
            if (e.second >= m_)
                throw std::invalid_argument("graph: edge endpoint out of range");
        }
        std::sort(edges_.begin(), edges_.end());
        if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
            throw std::invalid_argument("graph: duplicate edge");
        if (!connected())
            throw std::invalid_argument("graph: not connected");
    }

    std::size_t agents() const { return m_; }
    const std::vector<Edge>& edges() const { return edges_; }

private:
    bool connected() const {
        std::vector<std::vector<std::size_t>> adj(m_);
        for (const Edge& e : edges_) {
            adj[e.first].push_back(e.second);
            adj[e.second].push_back(e.first);
        }
        std::vector<bool> seen(m_, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        std::size_t visited = 1;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            for (std::size_t w : adj[v]) {
                if (!seen[w]) {
                    seen[w] = true;
                    ++visited;
                    stack.push_back(w);
                }
            }
        }
        return visited == m_;
    }

    std::size_t m_;
    std::vector<Edge> edges_;
};

/**
 * Erdos-Renyi sample conditioned on connectivity. Every unordered pair is an
 * edge with probability p; a disconnected draw is thrown away and redrawn
 * from a fresh substream of the same seed, so the result depends only on
 * (m, p, seed). Gives up with NotConnectable after 1000 attempts.
 */
inline Graph random_graph(std::size_t m, double p, std::uint64_t seed) {
    if (m == 0)
        throw std::invalid_argument("random_graph: needs at least one agent");
    if (!(p > 0.0) || p > 1.0)
        throw std::invalid_argument("random_graph: p must be in (0, 1]");

    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        Rng rng(seed, attempt);
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (rng.uniform() < p) edges.emplace_back(i, j);
        try {
            return Graph(m, std::move(edges));
        } catch (const std::invalid_argument&) {
            // disconnected draw, try the next substream
        }
    }
    throw NotConnectable("random_graph: no connected sample in 1000 attempts");
}

// ============================================================================
// Consensus weight matrix
// ============================================================================

// Symmetric doubly stochastic averaging matrix plus its cached second
// eigenvalue, the quantity every mixing bound depends on.
struct WeightMatrix {
    Matrix l;       // m x m
    double lambda2; // second-largest eigenvalue of l, in [0, 1)
};

/**
 * Weight matrix from the graph Laplacian: l = I - (D - A) / lambda_max(D - A)
 * with unit edge weights. The spectrum of D - A lies in [0, lambda_max] with
 * 0 simple exactly when the graph is connected, so l is doubly stochastic
 * with eigenvalues in [0, 1] and a simple eigenvalue at 1. A single agent
 * gets the 1x1 identity with lambda2 defined as 0.
 */
inline WeightMatrix laplacian_weight_matrix(const Graph& g) {
    const std::size_t m = g.agents();
    if (m == 1) return {Matrix{{1.0}}, 0.0};

    Matrix laplacian(m, m);
    for (const Edge& e : g.edges()) {
        laplacian(e.first, e.first) += 1.0;
        laplacian(e.second, e.second) += 1.0;
        laplacian(e.first, e.second) -= 1.0;
        laplacian(e.second, e.first) -= 1.0;
    }

    const EigenDecomposition eig = symmetric_eigen(laplacian);
    const double mu_max = eig.values.front();
    const double mu_2 = eig.values[m - 2]; // second-smallest Laplacian eigenvalue

    Matrix l = Matrix::identity(m);
    l -= laplacian * (1.0 / mu_max);

    // Floating-point noise can push the exact values (0 for complete graphs)
    // a few ulps negative; the cached value is clamped into its domain.
    const double lambda2 = std::max(0.0, 1.0 - mu_2 / mu_max);
    return {std::move(l), lambda2};
}

// One failed property of a candidate weight matrix.
struct ValidationIssue {
    std::string property;
    double residual;
};

/**
 * Diagnostic re-check of the four weight-matrix properties: symmetry, unit
 * row sums, spectrum within [0, 1], and a simple eigenvalue at 1. Returns
 * one issue per failed property (empty means the matrix is sound). The
 * spectral checks run on the symmetrised matrix so they stay meaningful
 * even when symmetry itself fails; the multiplicity residual is the gap
 * 1 - lambda2 (zero means the eigenvalue 1 is repeated and averaging cannot
 * contract).
 */
inline std::vector<ValidationIssue> validate_weight_matrix(const WeightMatrix& w) {
    std::vector<ValidationIssue> issues;
    const Matrix& l = w.l;
    const std::size_t m = l.rows();

    double asym = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j)
            asym = std::max(asym, std::abs(l(i, j) - l(j, i)));
    if (asym > 1e-12) issues.push_back({"symmetry", asym});

    double row_residual = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m; ++j) sum += l(i, j);
        row_residual = std::max(row_residual, std::abs(sum - 1.0));
    }
    if (row_residual > 1e-10) issues.push_back({"row_sums", row_residual});

    Matrix sym(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) sym(i, j) = 0.5 * (l(i, j) + l(j, i));
    const EigenDecomposition eig = symmetric_eigen(sym);
    const double overshoot =
        std::max(eig.values.front() - 1.0, -eig.values.back());
    if (overshoot > 1e-10) issues.push_back({"eigenvalue_range", overshoot});

    if (m > 1) {
        const double lambda2 = eig.values[1];
        if (lambda2 >= 1.0 - 1e-10)
            issues.push_back({"eigenvalue_one_multiplicity", 1.0 - lambda2});
    }
    return issues;
}

// ============================================================================
// Edge-list serialisation
//
// Plain text for reproducibility dumps: first line is the agent count, then
// one "i j" pair per line, 0-based.
// ============================================================================

inline void write_edge_list(const Graph& g, std::ostream& out) {
    out << g.agents() << "\n";
    for (const Edge& e : g.edges()) out << e.first << " " << e.second << "\n";
    if (!out) throw IoError("write_edge_list: stream failure");
}

inline Graph read_edge_list(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&](std::string& dst) {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            dst = line;
            return true;
        }
        return false;
    };

    std::string header;
    if (!next_line(header)) throw ParseError(1, "missing agent count");
    std::istringstream hs(header);
    std::size_t m = 0;
    std::string extra;
    if (!(hs >> m) || (hs >> extra))
        throw ParseError(line_no, "expected a bare agent count");

    std::vector<Edge> edges;
    std::string body;
    while (next_line(body)) {
        std::istringstream es(body);
        std::size_t i = 0;
        std::size_t j = 0;
        if (!(es >> i >> j) || (es >> extra))
            throw ParseError(line_no, "expected an \"i j\" edge pair");
        edges.emplace_back(i, j);
    }
    return Graph(m, std::move(edges));
}

inline void write_edge_list(const Graph& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_edge_list: cannot open " + path);
    write_edge_list(g, out);
}

inline Graph read_edge_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_edge_list: cannot open " + path);
    return read_edge_list(in);
}

} // namespace deepca
