#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qsut/baselines.h"
#include "qsut/engine.h"
#include "qsut/family.h"

namespace qsut {

enum class Method { ALHT, ALHTPlus, ALVT, LHT, BLHT, LVT, BLVT };

std::string method_name(Method m);
/// Accepts aLHT, aLHT+, aLVT, LHT, bLHT, LVT, bLVT. Throws ParseError.
Method parse_method(std::string_view text);
bool is_sequential(Method m);
/// Smallest budget the method can run with.
int minimum_budget(Method m, int block_copies, int joint_copies);

struct ExperimentConfig {
    FamilyConfig family;
    HypothesisSet null_set;
    HypothesisSet alt_set;
    double truth_omega = 90.0;
    std::vector<Method> methods;
    std::vector<int> budgets;
    int runs = 200;
    double eps0 = 0.05;
    /// Set for the two-sided sequential test.
    std::optional<double> eps1;
    std::uint64_t master_seed = 1;
    double omega_resolution = kDefaultResolutionDeg;
    int lambda_grid = kDefaultLambdaGrid;
    int theta_grid = kDefaultThetaGrid;
    int n_ic = 6;
    int n_joint = 4;
    /// Copies per block for bLHT / bLVT: b = floor(n / block_copies).
    int block_copies = 10;
    EstimationPovm estimation_povm = EstimationPovm::Computational;
    /// Pseudo-count per estimation outcome for numerator estimates.
    double numerator_prior = 0.5;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Strict `key = value` parser; '#' starts a comment. Throws ParseError with
/// the line number, or ConfigError for semantic problems.
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path &path);

struct TrialResult {
    bool rejected = false;
    int copies_used = 0;
    int rounds_used = 0;
};

/// Full record of one run, for tracing.
struct SingleRun {
    Method method = Method::ALHTPlus;
    int budget = 0;
    std::uint64_t seed = 0;
    bool two_sided = false;
    TrialResult result;
    std::optional<TestOutcome> sequential;
    std::optional<FixedRunResult> fixed;
};

SequentialTestConfig sequential_config(const ExperimentConfig &config, Method method);

/// One run drawn from `rng`.
SingleRun run_single(const ExperimentConfig &config, Method method, int budget, RandomStream &rng);

/// Seed for run `run` of (method, budget): derived from the master seed,
/// the method's fixed id and the budget value, so adding methods or budgets
/// leaves the other rows unchanged.
std::uint64_t trial_seed(std::uint64_t master_seed, Method method, int budget, int run);

struct ResultRow {
    std::string method;
    int budget = 0;
    double power = 0.0;
    double avg_copies = 0.0;
    double std_copies = 0.0;
    double avg_rounds = 0.0;
    int runs = 0;
    std::uint64_t master_seed = 0;
};

ResultRow summarize(Method method, int budget, std::uint64_t master_seed, const std::vector<TrialResult> &trials);

/// Every (method, budget) cell in config order. Trials run on `threads`
/// workers (0 picks the hardware count); the fold is in run order.
std::vector<ResultRow> run_sweep(const ExperimentConfig &config, unsigned threads = 0);

inline constexpr std::string_view kResultHeader = "method,budget,power,avg_copies,std_copies,avg_rounds,runs,master_seed";

/// CSV text with six significant digits for reals.
std::string format_results(const std::vector<ResultRow> &rows);
/// Throws IoError.
void emit_results(const std::vector<ResultRow> &rows, const std::filesystem::path &path);
/// Inverse of format_results. Throws ParseError.
std::vector<ResultRow> parse_results(std::string_view text);

struct CalibrationRow {
    std::string method;
    int budget = 0;
    int estimation_copies = 0;
    int blocks = 0;
    double block_eps = 0.0;
    bool feasible = false;
    /// lambda for Helstrom tests, theta in degrees for variational ones.
    double parameter = 0.0;
    /// GLR threshold; 0 for Helstrom tests.
    double threshold = 0.0;
    double size = 0.0;
    double power = 0.0;
};

/// Calibrations of the fixed-copy methods, taking truth_omega as the
/// estimated alternative.
std::vector<CalibrationRow> calibration_table(const ExperimentConfig &config);
std::string format_calibration(const std::vector<CalibrationRow> &rows);

/// Per-round dump of a single run.
std::string format_trace(const SingleRun &run);

}  // namespace qsut
