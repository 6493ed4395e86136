#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "algorithms.hpp"
#include "data.hpp"

namespace deepca {

// ============================================================================
// Experiment harness
//
// Everything needed to go from a flat key = value config file to plot-ready
// artifacts: one CSV per algorithm, a graph edge dump, and a JSON manifest
// holding the config echo, the drawn topology's lambda2, the sufficiency
// diagnostics, and input hashes that prove all algorithms saw the same
// problem, topology and starting point.
// ============================================================================

struct DatasetSource {
    std::string path;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t d = 0;
};

enum class SourceKind { synthetic, dataset };

struct ExperimentConfig {
    SourceKind source = SourceKind::synthetic;
    DatasetSource dataset;   // meaningful when source == dataset
    SyntheticSpec synthetic; // meaningful when source == synthetic
    std::size_t k = 0;
    double graph_p = 0.5;
    std::uint64_t graph_seed = 1;
    std::vector<std::string> algorithms;
    std::size_t k_steps = 0;
    std::size_t max_iters = 0;
    double tol = 0.0;
    std::uint64_t init_seed = 0;
    std::string output_path;
    bool depca_use_fast_mix = true;
    bool depca_use_sign_adjust = true;
};

// Sufficiency diagnostics for a configured run. gamma is the guaranteed
// per-iteration contraction of tan theta, rho the consensus contraction the
// configured budget buys, rho_cap the largest rho the convergence analysis
// tolerates (evaluated at its most demanding time, t = max_iters).
// k_sufficient and t_sufficient are the budget and iteration counts the
// analysis asks for to reach tol; c_total is their product, the total
// communication the analysis charges.
struct TheoryBounds {
    double gamma;
    double rho;
    double rho_cap;
    std::size_t k_sufficient;
    std::size_t t_sufficient;
    std::size_t c_total;
    bool k_steps_sufficient;
    bool max_iters_sufficient;
};

/**
 * Evaluate the convergence-analysis quantities for a problem with gap
 * lambda_k > lambda_k1 > 0 on the given topology. tan_theta0 is the starting
 * tangent of the initial point (must be finite). Throws GapViolation when
 * the gap closes and ZeroEigenvalue when lambda_k1 vanishes; both make the
 * formulas meaningless.
 */
inline TheoryBounds compute_theory_bounds(const GroundTruth& truth,
                                          const WeightMatrix& w,
                                          const ExperimentConfig& config,
                                          double tan_theta0) {
    const double lk = truth.lambda_k;
    const double lk1 = truth.lambda_k1;
    const double big_l = truth.spectral_bound;
    const double k = double(config.k);
    const double m = double(w.l.rows());
    const double l0 = tan_theta0;

    if (lk <= lk1 + 1e-12)
        throw GapViolation("theory bounds: lambda_k must exceed lambda_k+1");
    if (lk1 <= 1e-12)
        throw ZeroEigenvalue("theory bounds: lambda_k+1 must be positive");
    if (!std::isfinite(l0) || l0 < 0.0)
        throw std::invalid_argument("theory bounds: tan_theta0 must be finite");

    const double gamma = 1.0 - (lk - lk1) / (2.0 * lk);
    const double rho =
        std::pow(1.0 - std::sqrt(1.0 - w.lambda2), double(config.k_steps));

    // Cap on rho at time t: the min of a flat gamma/2 clause and two
    // t-dependent clauses that tighten as t grows, so the configured horizon
    // is the binding evaluation point.
    const double t = double(config.max_iters);
    const double envelope = 1.0 + std::pow(gamma, 2.0 * t) * l0 * l0;
    const double edge =
        lk1 + 2.0 * big_l + (lk + 2.0 * big_l) * std::pow(gamma, t + 1.0) * l0;
    const double cap_flat = gamma / 2.0;
    const double cap_quad = (lk - lk1) * (lk * lk1 + 2.0 * big_l * lk1) * gamma *
                            gamma /
                            (96.0 * k * big_l * (std::sqrt(k) + 1.0) * envelope *
                             edge * edge);
    const double cap_lin =
        (lk * lk1 + 2.0 * big_l * lk) /
        (16.0 * big_l * k * (std::sqrt(k) + 1.0) * std::sqrt(m) *
         std::pow(gamma, t - 1.0) * l0 * std::sqrt(envelope) * edge);
    const double rho_cap = std::min(cap_flat, std::min(cap_quad, cap_lin));

    const double k_raw =
        1.0 / std::sqrt(1.0 - w.lambda2) *
        std::log(96.0 * k * big_l * (std::sqrt(k) + 1.0) * (lk + 2.0 * big_l) *
                 std::pow(1.0 + l0, 4.0) / (lk1 * (lk - lk1) * gamma * gamma));
    const std::size_t k_sufficient =
        std::size_t(std::max(0.0, std::ceil(k_raw)));

    const double eps = config.tol;
    const double t_raw =
        2.0 * lk / (lk - lk1) *
        std::max(std::log(4.0 * l0 / eps),
                 std::log(4.0 * (lk + 2.0 * big_l) * l0 /
                          (std::sqrt(m) * (lk - lk1) * eps)));
    const std::size_t t_sufficient =
        std::size_t(std::max(0.0, std::ceil(t_raw)));

    return {gamma,
            rho,
            rho_cap,
            k_sufficient,
            t_sufficient,
            k_sufficient * t_sufficient,
            config.k_steps >= k_sufficient,
            config.max_iters >= t_sufficient};
}

// ----------------------------------------------------------------------------
// Config file parsing: flat "key = value" lines, full-line '#' comments.
// ----------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    const std::size_t first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const std::size_t last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const unsigned long long raw = std::strtoull(value.c_str(), &end, 10);
    if (value.empty() || end != value.c_str() + value.size() || value[0] == '-')
        throw ConfigError(key + ": expected a non-negative integer, got \"" +
                          value + "\"");
    return std::size_t(raw);
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    return std::uint64_t(parse_count(key, value));
}

inline double parse_real(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() ||
        !std::isfinite(parsed))
        throw ConfigError(key + ": expected a finite real, got \"" + value + "\"");
    return parsed;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(key + ": expected true or false, got \"" + value + "\"");
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

} // namespace detail

/**
 * Parse the flat config format. Every key is either consumed or rejected:
 * unknown keys, duplicates, missing required keys, and out-of-range values
 * all raise ConfigError, so a config that parses is a config that runs.
 */
inline ExperimentConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = detail::trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        if (!entries.emplace(key, value).second)
            throw ConfigError("duplicate key: " + key);
    }

    auto take = [&entries](const std::string& key) {
        auto it = entries.find(key);
        if (it == entries.end())
            throw ConfigError("missing required key: " + key);
        std::string value = it->second;
        entries.erase(it);
        return value;
    };
    auto take_optional = [&entries](const std::string& key, std::string fallback) {
        auto it = entries.find(key);
        if (it == entries.end()) return fallback;
        std::string value = it->second;
        entries.erase(it);
        return value;
    };

    ExperimentConfig config;

    const std::string source = take("source");
    std::size_t problem_d = 0;
    if (source == "synthetic") {
        config.source = SourceKind::synthetic;
        config.synthetic.d = detail::parse_count("synthetic_d", take("synthetic_d"));
        config.synthetic.m = detail::parse_count("synthetic_m", take("synthetic_m"));
        config.synthetic.heterogeneity = detail::parse_real(
            "synthetic_heterogeneity", take("synthetic_heterogeneity"));
        config.synthetic.seed =
            detail::parse_seed("synthetic_seed", take("synthetic_seed"));
        for (const std::string& item :
             detail::split_list(take("synthetic_eigenvalues")))
            config.synthetic.eigenvalues.push_back(
                detail::parse_real("synthetic_eigenvalues", item));
        if (config.synthetic.eigenvalues.size() != config.synthetic.d)
            throw ConfigError("synthetic_eigenvalues: need exactly synthetic_d values");
        problem_d = config.synthetic.d;
    } else if (source == "dataset") {
        config.source = SourceKind::dataset;
        config.dataset.path = take("dataset_path");
        config.dataset.m = detail::parse_count("dataset_m", take("dataset_m"));
        config.dataset.n = detail::parse_count("dataset_n", take("dataset_n"));
        config.dataset.d = detail::parse_count("dataset_d", take("dataset_d"));
        problem_d = config.dataset.d;
    } else {
        throw ConfigError("source: expected synthetic or dataset, got \"" +
                          source + "\"");
    }

    config.k = detail::parse_count("k", take("k"));
    if (config.k < 1 || config.k >= problem_d)
        throw ConfigError("k: need 1 <= k < d");
    config.synthetic.k = config.k;

    config.graph_p = detail::parse_real("graph_p", take("graph_p"));
    if (!(config.graph_p > 0.0) || config.graph_p > 1.0)
        throw ConfigError("graph_p: need 0 < p <= 1");
    config.graph_seed = detail::parse_seed("graph_seed", take("graph_seed"));

    config.algorithms = detail::split_list(take("algorithms"));
    if (config.algorithms.empty())
        throw ConfigError("algorithms: need at least one of deepca, depca, centralized");
    std::set<std::string> seen;
    for (const std::string& name : config.algorithms) {
        if (name != "deepca" && name != "depca" && name != "centralized")
            throw ConfigError("algorithms: unknown algorithm \"" + name + "\"");
        if (!seen.insert(name).second)
            throw ConfigError("algorithms: duplicate entry \"" + name + "\"");
    }

    config.k_steps = detail::parse_count("k_steps", take("k_steps"));
    config.max_iters = detail::parse_count("max_iters", take("max_iters"));
    if (config.max_iters < 1) throw ConfigError("max_iters: need at least 1");
    config.tol = detail::parse_real("tol", take("tol"));
    if (!(config.tol > 0.0)) throw ConfigError("tol: need tol > 0");
    config.init_seed = detail::parse_seed("init_seed", take("init_seed"));
    config.output_path = take("output_path");
    if (config.output_path.empty()) throw ConfigError("output_path: empty");

    config.depca_use_fast_mix =
        detail::parse_bool("depca_use_fast_mix",
                           take_optional("depca_use_fast_mix", "true"));
    config.depca_use_sign_adjust =
        detail::parse_bool("depca_use_sign_adjust",
                           take_optional("depca_use_sign_adjust", "true"));

    if (!entries.empty())
        throw ConfigError("unknown key: " + entries.begin()->first);
    return config;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    return parse_config(in);
}

// ----------------------------------------------------------------------------
// Trace CSV
// ----------------------------------------------------------------------------

inline constexpr const char* kTraceCsvHeader =
    "t,mean_tan_theta,tan_theta_sbar,s_consensus_err,w_consensus_err,"
    "tracking_residual,sigma_min_sbar";

/**
 * Write a trace with full 17-significant-digit precision so the file is a
 * lossless record (infinities serialize as "inf"). One header line, one row
 * per record.
 */
inline void write_trace_csv(const std::vector<TraceRecord>& trace,
                            std::ostream& out) {
    if (trace.empty())
        throw std::invalid_argument("write_trace_csv: empty trace");
    out << kTraceCsvHeader << "\n";
    char buffer[32];
    for (const TraceRecord& rec : trace) {
        out << rec.t;
        for (double value : {rec.mean_tan_theta, rec.tan_theta_sbar,
                             rec.s_consensus_err, rec.w_consensus_err,
                             rec.tracking_residual, rec.sigma_min_sbar}) {
            std::snprintf(buffer, sizeof buffer, "%.17g", value);
            out << "," << buffer;
        }
        out << "\n";
    }
    if (!out) throw IoError("write_trace_csv: stream failure");
}

inline void write_trace_csv(const std::vector<TraceRecord>& trace,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_trace_csv: cannot open " + path);
    write_trace_csv(trace, out);
}

// ----------------------------------------------------------------------------
// Input hashing (FNV-1a over the exact bytes), for the fairness record
// ----------------------------------------------------------------------------

namespace detail {

struct Fnv1a {
    std::uint64_t state = 14695981039346656037ULL;

    void feed_bytes(const void* data, std::size_t size) {
        const unsigned char* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state ^= bytes[i];
            state *= 1099511628211ULL;
        }
    }
    void feed(double value) { feed_bytes(&value, sizeof value); }
    void feed(std::uint64_t value) { feed_bytes(&value, sizeof value); }

    std::string hex() const {
        char buffer[19];
        std::snprintf(buffer, sizeof buffer, "%016llx",
                      static_cast<unsigned long long>(state));
        return buffer;
    }
};

inline std::string hash_matrix(const Matrix& x) {
    Fnv1a hash;
    hash.feed(std::uint64_t(x.rows()));
    hash.feed(std::uint64_t(x.cols()));
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) hash.feed(x(i, j));
    return hash.hex();
}

inline std::string hash_graph(const Graph& g) {
    Fnv1a hash;
    hash.feed(std::uint64_t(g.agents()));
    for (const Edge& e : g.edges()) {
        hash.feed(std::uint64_t(e.first));
        hash.feed(std::uint64_t(e.second));
    }
    return hash.hex();
}

inline std::string hash_problem(const ProblemInstance& p) {
    Fnv1a hash;
    hash.feed(std::uint64_t(p.d));
    hash.feed(std::uint64_t(p.k));
    hash.feed(std::uint64_t(p.m));
    for (const Matrix& a : p.local_matrices)
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j) hash.feed(a(i, j));
    return hash.hex();
}

} // namespace detail

// ----------------------------------------------------------------------------
// Experiment orchestration
// ----------------------------------------------------------------------------

// All the shared inputs of one experiment, built once so every selected
// algorithm sees the identical problem, topology, truth, and starting point.
struct ExperimentSetup {
    ProblemInstance problem;
    Graph graph;
    WeightMatrix weights;
    GroundTruth truth;
    Matrix w0;
    double tan_theta0;
};

inline ExperimentSetup prepare_experiment(const ExperimentConfig& config) {
    ProblemInstance problem =
        config.source == SourceKind::synthetic
            ? generate_synthetic(config.synthetic)
            : build_agent_matrices(parse_libsvm(config.dataset.path),
                                   config.dataset.m, config.dataset.n,
                                   config.dataset.d);
    problem.k = config.k;

    Graph graph = random_graph(problem.m, config.graph_p, config.graph_seed);
    WeightMatrix weights = laplacian_weight_matrix(graph);
    GroundTruth truth = compute_ground_truth(problem);

    Rng rng(config.init_seed);
    Matrix w0 = qr_decompose(gaussian_matrix(problem.d, config.k, rng)).q;
    const double tan_theta0 =
        principal_angles(truth.u, w0).tan_theta;

    return {std::move(problem), std::move(graph), std::move(weights),
            std::move(truth),   std::move(w0),    tan_theta0};
}

struct ExperimentOutcome {
    std::map<std::string, RunResult> runs;
    nlohmann::json manifest;
};

namespace detail {

inline nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    if (config.source == SourceKind::synthetic) {
        j["source"] = "synthetic";
        j["synthetic_d"] = config.synthetic.d;
        j["synthetic_m"] = config.synthetic.m;
        j["synthetic_eigenvalues"] = config.synthetic.eigenvalues;
        j["synthetic_heterogeneity"] = config.synthetic.heterogeneity;
        j["synthetic_seed"] = config.synthetic.seed;
    } else {
        j["source"] = "dataset";
        j["dataset_path"] = config.dataset.path;
        j["dataset_m"] = config.dataset.m;
        j["dataset_n"] = config.dataset.n;
        j["dataset_d"] = config.dataset.d;
    }
    j["k"] = config.k;
    j["graph_p"] = config.graph_p;
    j["graph_seed"] = config.graph_seed;
    j["algorithms"] = config.algorithms;
    j["k_steps"] = config.k_steps;
    j["max_iters"] = config.max_iters;
    j["tol"] = config.tol;
    j["init_seed"] = config.init_seed;
    j["output_path"] = config.output_path;
    j["depca_use_fast_mix"] = config.depca_use_fast_mix;
    j["depca_use_sign_adjust"] = config.depca_use_sign_adjust;
    return j;
}

inline nlohmann::json bounds_to_json(const TheoryBounds& bounds) {
    nlohmann::json j;
    j["gamma"] = bounds.gamma;
    j["rho"] = bounds.rho;
    j["rho_cap"] = bounds.rho_cap;
    j["k_sufficient"] = bounds.k_sufficient;
    j["t_sufficient"] = bounds.t_sufficient;
    j["c_total"] = bounds.c_total;
    j["k_steps_sufficient"] = bounds.k_steps_sufficient;
    j["max_iters_sufficient"] = bounds.max_iters_sufficient;
    return j;
}

// JSON has no infinity literal; traces keep the sentinel, the manifest gets
// a string.
inline nlohmann::json json_real(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return value;
}

} // namespace detail

/**
 * Execute every selected algorithm on the shared setup and write the
 * artifact set into config.output_path: <algorithm>.csv per run, graph.edges,
 * and manifest.json. A theory-bounds failure (gapless spectrum, zero
 * eigenvalue) is recorded in the manifest and does not stop the runs; a
 * per-run abort is recorded in that run's manifest entry.
 */
inline ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    const auto t_start = std::chrono::steady_clock::now();
    ExperimentSetup setup = prepare_experiment(config);

    std::filesystem::create_directories(config.output_path);
    const std::filesystem::path out_dir(config.output_path);

    ExperimentOutcome outcome;
    nlohmann::json& manifest = outcome.manifest;
    manifest["config"] = detail::config_to_json(config);
    manifest["lambda2"] = setup.weights.lambda2;
    manifest["tan_theta0"] = detail::json_real(setup.tan_theta0);
    manifest["hashes"] = {
        {"w0", detail::hash_matrix(setup.w0)},
        {"graph", detail::hash_graph(setup.graph)},
        {"problem", detail::hash_problem(setup.problem)},
    };

    try {
        const TheoryBounds bounds =
            compute_theory_bounds(setup.truth, setup.weights, config,
                                  setup.tan_theta0);
        manifest["theory_bounds"] = detail::bounds_to_json(bounds);
    } catch (const std::exception& e) {
        manifest["theory_bounds"] = {{"error", e.what()}};
    }

    write_edge_list(setup.graph, (out_dir / "graph.edges").string());

    manifest["algorithms"] = nlohmann::json::object();
    for (const std::string& name : config.algorithms) {
        const auto run_start = std::chrono::steady_clock::now();
        RunResult result;
        if (name == "deepca") {
            result = run_deepca(setup.problem, setup.weights, setup.w0,
                                config.k_steps, config.max_iters, config.tol,
                                &setup.truth);
        } else if (name == "depca") {
            result = run_depca(setup.problem, setup.weights, setup.w0,
                               config.k_steps, config.max_iters, config.tol,
                               &setup.truth, config.depca_use_fast_mix,
                               config.depca_use_sign_adjust);
        } else {
            result = run_centralized_pm(setup.problem.mean, setup.w0,
                                        config.max_iters, config.tol,
                                        &setup.truth);
        }
        const double run_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          run_start)
                .count();

        const std::string csv_name = name + ".csv";
        write_trace_csv(result.trace, (out_dir / csv_name).string());

        // Communication charged as configured: one budget of k_steps
        // exchanges per iteration, none for the centralized reference.
        const std::size_t communication =
            name == "centralized" ? 0 : result.iterations_run * config.k_steps;

        manifest["algorithms"][name] = {
            {"csv", csv_name},
            {"iterations", result.iterations_run},
            {"converged", result.converged},
            {"final_mean_tan_theta",
             detail::json_real(result.trace.back().mean_tan_theta)},
            {"communication", communication},
            {"min_w0_alignment", detail::json_real(result.min_w0_alignment)},
            {"error", result.error},
            {"wall_seconds", run_seconds},
        };
        outcome.runs.emplace(name, std::move(result));
    }

    manifest["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();

    std::ofstream manifest_out(out_dir / "manifest.json");
    if (!manifest_out)
        throw IoError("run_experiment: cannot open manifest.json for writing");
    manifest_out << manifest.dump(2) << "\n";
    return outcome;
}

} // namespace deepca
