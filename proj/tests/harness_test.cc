#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qsut/error.h"
#include "qsut/harness.h"

namespace qsut {
namespace {

constexpr const char *kMinimal = R"(null_set = {45}
alt_set = (45,180]
truth_omega = 90
methods = aLHT+
budgets = 10, 20, 30
)";

ErrorCode code_of(std::string_view text) {
    try {
        parse_config_text(text);
    } catch (const Error &e) {
        return e.code();
    }
    ADD_FAILURE() << "config parsed: " << text;
    return ErrorCode::InvalidArgument;
}

TEST(Methods, NamesRoundTrip) {
    for (Method m : {Method::ALHT, Method::ALHTPlus, Method::ALVT, Method::LHT, Method::BLHT, Method::LVT,
                     Method::BLVT}) {
        EXPECT_EQ(parse_method(method_name(m)), m);
    }
    EXPECT_THROW(parse_method("aLHT++"), Error);
    EXPECT_TRUE(is_sequential(Method::ALVT));
    EXPECT_FALSE(is_sequential(Method::BLVT));
}

TEST(ConfigParse, Minimal) {
    const ExperimentConfig c = parse_config_text(kMinimal);
    EXPECT_EQ(c.budgets, (std::vector<int>{10, 20, 30}));
    ASSERT_EQ(c.methods.size(), 1u);
    EXPECT_EQ(c.methods[0], Method::ALHTPlus);
    EXPECT_TRUE(c.null_set.is_single_point());
    EXPECT_EQ(c.truth_omega, 90.0);
    EXPECT_EQ(c.runs, 200);
    EXPECT_FALSE(c.eps1.has_value());
}

TEST(ConfigParse, AllKeysAndComments) {
    const ExperimentConfig c = parse_config_text(R"(# full config
r_z = 0.9   # trailing comment
r_x = 0.8
null_set = {45,135}
alt_set = (45,135) U (135,180)
truth_omega = 90
methods = aLVT, LVT, bLVT
budgets = 20,40
runs = 10
eps0 = 0.1
eps1 = 0.2
master_seed = 77
omega_resolution = 1
lambda_grid = 49
theta_grid = 90
n_ic = 3
n_joint = 2
block_copies = 5
numerator_prior = 0
estimation_povm = sic
)");
    EXPECT_EQ(c.family.r_x, 0.8);
    EXPECT_EQ(c.null_set.points().size(), 2u);
    EXPECT_EQ(*c.eps1, 0.2);
    EXPECT_EQ(c.master_seed, 77u);
    EXPECT_EQ(c.estimation_povm, EstimationPovm::Sic);
    EXPECT_EQ(c.block_copies, 5);
    EXPECT_EQ(c.numerator_prior, 0.0);
}

TEST(ConfigParse, Errors) {
    const std::string base = kMinimal;
    EXPECT_EQ(code_of(base + "unknown_key = 3\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of(base + "runs = 3\nruns = 4\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of(base + "runs 3\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of(base + "runs = three\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("null_set = {45}\nalt_set = [40,180]\ntruth_omega = 90\nmethods = aLHT\nbudgets = 10\n"),
              ErrorCode::ConfigError);
    EXPECT_EQ(code_of("null_set = {45}\nalt_set = (45,180]\ntruth_omega = 90\nmethods = aLHT\nbudgets = 20,10\n"),
              ErrorCode::ConfigError);
    EXPECT_EQ(code_of("null_set = {45,135}\nalt_set = (45,135)\ntruth_omega = 90\nmethods = LHT\nbudgets = 10\n"),
              ErrorCode::ConfigError);
    EXPECT_EQ(code_of("null_set = {45}\nalt_set = (45,180]\ntruth_omega = 90\nmethods = bLHT\nbudgets = 5\n"),
              ErrorCode::ConfigError);
    EXPECT_EQ(code_of("alt_set = (45,180]\ntruth_omega = 90\nmethods = aLHT\nbudgets = 10\n"),
              ErrorCode::ConfigError);
}

TEST(ConfigParse, LineNumberInMessage) {
    try {
        parse_config_text(std::string(kMinimal) + "\nbogus = 1\n");
        FAIL();
    } catch (const Error &e) {
        EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
    }
}

TEST(ConfigParse, MissingFile) {
    try {
        parse_config("/nonexistent/qsut.cfg");
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
}

TEST(Results, HeaderOnlyAndRoundTrip) {
    EXPECT_EQ(format_results({}), std::string(kResultHeader) + "\n");
    const std::vector<ResultRow> rows{{"aLHT+", 10, 0.125, 9.5, 1.25, 3.75, 200, 2025},
                                      {"bLVT", 200, 1.0 / 3.0, 200, 0, 54, 200, 2025}};
    const std::string text = format_results(rows);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    const std::vector<ResultRow> back = parse_results(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].method, "aLHT+");
    EXPECT_EQ(back[1].budget, 200);
    EXPECT_NEAR(back[1].power, 1.0 / 3.0, 1e-6);
    EXPECT_EQ(back[0].std_copies, 1.25);
    EXPECT_EQ(back[1].master_seed, 2025u);
    EXPECT_NE(text.find("0.333333,"), std::string::npos);
    EXPECT_THROW(parse_results("wrong,header\n"), Error);
}

TEST(Results, EmitToFile) {
    const auto path = std::filesystem::temp_directory_path() / "qsut_harness_test.csv";
    const std::vector<ResultRow> rows{{"LHT", 10, 0.5, 10, 0, 7, 2, 1}};
    emit_results(rows, path);
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), format_results(rows));
    std::filesystem::remove(path);
    EXPECT_THROW(emit_results(rows, "/nonexistent/dir/out.csv"), Error);
}

TEST(Summarize, Statistics) {
    const std::vector<TrialResult> trials{{true, 10, 4}, {false, 20, 8}, {true, 30, 6}};
    const ResultRow r = summarize(Method::ALVT, 30, 9, trials);
    EXPECT_EQ(r.method, "aLVT");
    EXPECT_NEAR(r.power, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(r.avg_copies, 20.0, 1e-15);
    EXPECT_NEAR(r.std_copies, std::sqrt(200.0 / 3.0), 1e-12);
    EXPECT_NEAR(r.avg_rounds, 6.0, 1e-15);
    EXPECT_EQ(r.runs, 3);
}

TEST(Sweep, FixedCopyMethodsUseWholeBudget) {
    ExperimentConfig c = parse_config_text(kMinimal);
    c.methods = {Method::LHT, Method::BLHT};
    c.runs = 20;
    for (const ResultRow &r : run_sweep(c, 1)) {
        EXPECT_EQ(r.avg_copies, r.budget);
        EXPECT_EQ(r.std_copies, 0.0);
    }
}

TEST(Sweep, OrthogonalSingleRunRejectsAtFirstRound) {
    // Null |0>, truth |1>: the first estimation outcome is "1", impossible
    // under the null, so the floor drives the SLR over the threshold.
    ExperimentConfig c = parse_config_text("null_set = {0}\nalt_set = (0,180]\ntruth_omega = 180\n"
                                           "methods = aLHT+\nbudgets = 10\nruns = 1\n");
    const std::vector<ResultRow> rows = run_sweep(c, 1);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].power, 1.0);
    EXPECT_EQ(rows[0].avg_copies, 1.0);
    EXPECT_EQ(rows[0].avg_rounds, 1.0);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
    ExperimentConfig c = parse_config_text(kMinimal);
    c.methods = {Method::ALHT, Method::ALHTPlus, Method::BLHT};
    c.runs = 15;
    const std::string a = format_results(run_sweep(c, 1));
    const std::string b = format_results(run_sweep(c, 3));
    EXPECT_EQ(a, b);
}

TEST(Sweep, AddingMethodLeavesOthersUnchanged) {
    ExperimentConfig one = parse_config_text(kMinimal);
    one.runs = 15;
    ExperimentConfig two = one;
    two.methods = {Method::ALHT, Method::ALHTPlus};
    const auto a = run_sweep(one, 1);
    const auto b = run_sweep(two, 1);
    ASSERT_EQ(b.size(), 2 * a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const ResultRow &x = a[i];
        const ResultRow &y = b[a.size() + i];
        EXPECT_EQ(x.method, y.method);
        EXPECT_EQ(x.power, y.power);
        EXPECT_EQ(x.avg_copies, y.avg_copies);
    }
}

TEST(Sweep, SeedChangesResults) {
    ExperimentConfig c = parse_config_text(kMinimal);
    c.runs = 30;
    const std::string a = format_results(run_sweep(c, 1));
    c.master_seed = 2;
    EXPECT_NE(a, format_results(run_sweep(c, 1)));
}

TEST(Single, TraceListsEveryRound) {
    ExperimentConfig c = parse_config_text(kMinimal);
    RandomStream rng(trial_seed(c.master_seed, Method::ALHTPlus, 20, 0));
    const SingleRun run = run_single(c, Method::ALHTPlus, 20, rng);
    ASSERT_TRUE(run.sequential.has_value());
    const std::string trace = format_trace(run);
    EXPECT_EQ(static_cast<int>(run.sequential->transcript.size()), run.result.rounds_used);
    EXPECT_NE(trace.find("aLHT+"), std::string::npos);
}

TEST(Calibrate, TableCoversFixedMethods) {
    ExperimentConfig c = parse_config_text(kMinimal);
    c.methods = {Method::ALHTPlus, Method::LHT, Method::BLHT};
    const auto rows = calibration_table(c);
    ASSERT_EQ(rows.size(), 6u);
    for (const CalibrationRow &r : rows) {
        EXPECT_TRUE(r.feasible);
        EXPECT_LE(r.size, r.block_eps + 1e-12);
    }
    EXPECT_FALSE(format_calibration(rows).empty());
}

}  // namespace
}  // namespace qsut
