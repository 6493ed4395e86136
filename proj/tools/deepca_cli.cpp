// Command-line front end: run experiments from config files, sanity-check a
// config without running it, or peek at a dataset's spectrum to judge the
// eigengap before committing to a long run.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include <deepca/harness.hpp>

namespace {

void print_real(const char* label, double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.12g", value);
    std::printf("%s = %s\n", label, buffer);
}

void apply_seed_override(deepca::ExperimentConfig& config, std::uint64_t seed) {
    config.graph_seed = seed;
    config.init_seed = seed;
    config.synthetic.seed = seed;
}

void print_bounds(const deepca::ExperimentSetup& setup,
                  const deepca::ExperimentConfig& config) {
    std::printf("agents = %zu, edges = %zu\n", setup.graph.agents(),
                setup.graph.edges().size());
    print_real("lambda2", setup.weights.lambda2);
    print_real("tan_theta0", setup.tan_theta0);
    try {
        const deepca::TheoryBounds bounds = deepca::compute_theory_bounds(
            setup.truth, setup.weights, config, setup.tan_theta0);
        print_real("gamma", bounds.gamma);
        print_real("rho", bounds.rho);
        print_real("rho_cap", bounds.rho_cap);
        std::printf("k_sufficient = %zu (configured k_steps = %zu, %s)\n",
                    bounds.k_sufficient, config.k_steps,
                    bounds.k_steps_sufficient ? "sufficient" : "insufficient");
        std::printf("t_sufficient = %zu (configured max_iters = %zu, %s)\n",
                    bounds.t_sufficient, config.max_iters,
                    bounds.max_iters_sufficient ? "sufficient" : "insufficient");
        std::printf("c_total = %zu\n", bounds.c_total);
    } catch (const std::exception& e) {
        std::printf("theory bounds unavailable: %s\n", e.what());
    }
}

int do_run(const std::string& config_path, bool seed_set, std::uint64_t seed) {
    deepca::ExperimentConfig config = deepca::parse_config(config_path);
    if (seed_set) apply_seed_override(config, seed);
    const deepca::ExperimentOutcome outcome = deepca::run_experiment(config);
    for (const auto& [name, result] : outcome.runs) {
        char tan[40];
        std::snprintf(tan, sizeof tan, "%.6g",
                      result.trace.back().mean_tan_theta);
        std::printf("%s: %zu iterations, %s, final mean tan theta %s%s%s\n",
                    name.c_str(), result.iterations_run,
                    result.converged ? "converged" : "not converged", tan,
                    result.error.empty() ? "" : ", aborted: ",
                    result.error.c_str());
    }
    std::printf("wrote %s/manifest.json\n", config.output_path.c_str());
    return 0;
}

int do_validate(const std::string& config_path, bool seed_set,
                std::uint64_t seed) {
    deepca::ExperimentConfig config = deepca::parse_config(config_path);
    if (seed_set) apply_seed_override(config, seed);
    const deepca::ExperimentSetup setup = deepca::prepare_experiment(config);
    const auto issues = deepca::validate_weight_matrix(setup.weights);
    for (const auto& issue : issues)
        std::printf("weight matrix violation: %s (residual %.3g)\n",
                    issue.property.c_str(), issue.residual);
    print_bounds(setup, config);
    if (!issues.empty()) {
        std::fprintf(stderr, "error: weight matrix failed validation\n");
        return 1;
    }
    std::printf("config ok\n");
    return 0;
}

int do_eigen(const std::string& path, std::size_t m, std::size_t n,
             std::size_t d, std::size_t k) {
    const deepca::ProblemInstance problem =
        deepca::build_agent_matrices(deepca::parse_libsvm(path), m, n, d);
    const deepca::EigenDecomposition eig =
        deepca::symmetric_eigen(problem.mean);
    const std::size_t shown = std::min(k, d);
    for (std::size_t i = 0; i < shown; ++i) {
        char label[32];
        std::snprintf(label, sizeof label, "lambda_%zu", i + 1);
        print_real(label, eig.values[i]);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decentralized top-k eigenvector experiments"};
    app.require_subcommand(1);

    std::string run_config;
    std::string validate_config;
    std::string eigen_path;
    std::size_t eigen_m = 0;
    std::size_t eigen_n = 0;
    std::size_t eigen_d = 0;
    std::size_t eigen_k = 10;
    std::uint64_t seed_override = 0;

    CLI::App* run = app.add_subcommand(
        "run", "Execute an experiment config and write its artifacts");
    run->add_option("config", run_config, "Path to a key = value config file")
        ->required();
    CLI::Option* run_seed = run->add_option(
        "--seed", seed_override, "Override every seed in the config");

    CLI::App* validate = app.add_subcommand(
        "validate",
        "Check a config and print the sufficiency diagnostics without running");
    validate
        ->add_option("config", validate_config,
                     "Path to a key = value config file")
        ->required();
    CLI::Option* validate_seed = validate->add_option(
        "--seed", seed_override, "Override every seed in the config");

    CLI::App* eigen = app.add_subcommand(
        "eigen", "Print the top eigenvalues of a dataset's mean matrix");
    eigen->add_option("--path", eigen_path, "Dataset in sparse index:value rows")
        ->required();
    eigen->add_option("--m", eigen_m, "Number of agents")->required();
    eigen->add_option("--n", eigen_n, "Samples per agent")->required();
    eigen->add_option("--d", eigen_d, "Feature dimension")->required();
    eigen->add_option("--k", eigen_k, "How many eigenvalues to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "%s\n\n%s", e.what(), app.help().c_str());
        return 2;
    }

    try {
        if (run->parsed())
            return do_run(run_config, run_seed->count() > 0, seed_override);
        if (validate->parsed())
            return do_validate(validate_config, validate_seed->count() > 0,
                               seed_override);
        return do_eigen(eigen_path, eigen_m, eigen_n, eigen_d, eigen_k);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
