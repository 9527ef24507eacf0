#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qsut/error.h"
#include "qsut/harness.h"
#include "qsut/oracle.h"

namespace {

int cmd_sweep(const std::string &config_path, const std::string &out_path, std::optional<std::uint64_t> seed,
              unsigned threads) {
    qsut::ExperimentConfig config = qsut::parse_config(config_path);
    if (seed) {
        config.master_seed = *seed;
    }
    const auto rows = qsut::run_sweep(config, threads);
    if (out_path.empty() || out_path == "-") {
        std::cout << qsut::format_results(rows);
    } else {
        qsut::emit_results(rows, out_path);
    }
    return 0;
}

int cmd_verify(std::uint64_t seed) {
    int failed = 0;
    for (const qsut::CheckResult &c : qsut::run_verification_suite(seed)) {
        std::cout << (c.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
        failed += c.passed ? 0 : 1;
    }
    std::cout << (failed == 0 ? "all checks passed" : std::to_string(failed) + " check(s) failed") << '\n';
    return failed == 0 ? 0 : 1;
}

int cmd_calibrate(const std::string &config_path) {
    const qsut::ExperimentConfig config = qsut::parse_config(config_path);
    std::cout << qsut::format_calibration(qsut::calibration_table(config));
    return 0;
}

int cmd_single(const std::string &config_path, const std::string &method_text, int budget,
               std::optional<std::uint64_t> seed, bool trace) {
    qsut::ExperimentConfig config = qsut::parse_config(config_path);
    if (seed) {
        config.master_seed = *seed;
    }
    const qsut::Method method = qsut::parse_method(method_text);
    const int need = qsut::minimum_budget(method, config.block_copies, config.n_joint);
    if (budget < need) {
        throw qsut::Error(qsut::ErrorCode::ConfigError,
                          "budget: " + qsut::method_name(method) + " needs at least " + std::to_string(need));
    }
    qsut::RandomStream rng(config.master_seed);
    qsut::SingleRun run = qsut::run_single(config, method, budget, rng);
    run.seed = config.master_seed;
    if (trace) {
        std::cout << qsut::format_trace(run);
    } else {
        std::cout << "method=" << qsut::method_name(method) << " budget=" << budget
                  << " decision=" << (run.result.rejected ? "reject" : "no-reject")
                  << " copies=" << run.result.copies_used << " rounds=" << run.result.rounds_used << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sequential universal tests for composite quantum hypotheses"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    auto *sweep = app.add_subcommand("sweep", "Monte Carlo power and copy-complexity sweep");
    sweep->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("-o,--out", out_path, "Output CSV path ('-' for stdout)")->required();
    sweep->add_option("--seed", seed, "Override master_seed");
    sweep->add_option("--threads", threads, "Worker threads (0 = hardware)");

    std::uint64_t verify_seed = 20240601;
    auto *verify = app.add_subcommand("verify", "Run the exact oracle checks");
    verify->add_option("--seed", verify_seed, "Seed for randomized checks");

    std::string calibrate_path;
    auto *calibrate = app.add_subcommand("calibrate", "Print fixed-copy calibrations");
    calibrate->add_option("config", calibrate_path, "Experiment config file")->required()->check(CLI::ExistingFile);

    std::string single_path;
    std::string method;
    int budget = 0;
    std::optional<std::uint64_t> single_seed;
    bool trace = false;
    auto *single = app.add_subcommand("single", "Run one test and optionally dump its transcript");
    single->add_option("config", single_path, "Experiment config file")->required()->check(CLI::ExistingFile);
    single->add_option("--method", method, "aLHT, aLHT+, aLVT, LHT, bLHT, LVT or bLVT")->required();
    single->add_option("--budget", budget, "Copy budget")->required();
    single->add_option("--seed", single_seed, "Override master_seed");
    single->add_flag("--trace", trace, "Dump the per-round transcript");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e);
    }

    try {
        if (*sweep) {
            return cmd_sweep(config_path, out_path, seed, threads);
        }
        if (*verify) {
            return cmd_verify(verify_seed);
        }
        if (*calibrate) {
            return cmd_calibrate(calibrate_path);
        }
        if (*single) {
            return cmd_single(single_path, method, budget, single_seed, trace);
        }
    } catch (const std::exception &e) {
        std::cerr << "qsut: error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
