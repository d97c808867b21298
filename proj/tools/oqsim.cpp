// oqsim — batch experiment runner. Reads a JSON config, dispatches to the
// analysis modules, writes deterministic CSV/JSON artifacts.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "oqs/cli.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        seeds.push_back(std::stoull(text.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oqsim — open quantum system experiment runner"};
    std::string config_path;
    std::string out_prefix;
    std::string seed_override;
    int threads = 1;
    bool validate_only = false;
    app.add_option("--config", config_path, "experiment config JSON")->required();
    app.add_option("--out", out_prefix, "output path prefix (overrides config)");
    app.add_option("--seeds", seed_override, "comma-separated seed list (overrides config)");
    app.add_option("--threads", threads, "worker threads for sweeps");
    app.add_flag("--validate-only", validate_only, "validate the config and exit");
    CLI11_PARSE(app, argc, argv);

    oqs::Json raw;
    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "config: cannot open " << config_path << "\n";
            return 2;
        }
        in >> raw;
    } catch (const std::exception& e) {
        std::cerr << "config: parse error: " << e.what() << "\n";
        return 2;
    }

    oqs::cli::ExperimentConfig cfg;
    try {
        cfg = oqs::cli::parse_config(raw);
    } catch (const std::exception& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 2;
    }
    if (!out_prefix.empty()) cfg.output = out_prefix;
    if (!seed_override.empty()) {
        try {
            cfg.seeds = parse_seed_list(seed_override);
            cfg.seeds_explicitly_empty = cfg.seeds.empty();
        } catch (const std::exception&) {
            std::cerr << "config: bad --seeds list\n";
            return 2;
        }
    }
    if (const char* cap = std::getenv("OQS_MAX_DIM")) {
        try {
            cfg.tol.max_dim = std::stoul(cap);
        } catch (const std::exception&) {
            std::cerr << "config: bad OQS_MAX_DIM value\n";
            return 2;
        }
    }

    const std::vector<std::string> problems = oqs::cli::validate(cfg);
    if (!problems.empty()) {
        for (const std::string& p : problems) std::cerr << "config: " << p << "\n";
        return 2;
    }
    if (validate_only) {
        std::cout << "config OK\n";
        return 0;
    }

    try {
        oqs::cli::run_experiment(cfg, threads);
    } catch (const oqs::ConfigError& e) {
        std::cerr << "config: " << e.what() << "\n";
        return 2;
    } catch (const oqs::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
