#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qsut/baselines.h"
#include "qsut/error.h"

namespace qsut {
namespace {

const FamilyConfig kPure{};

DensityMatrix angle_state(double w, const FamilyConfig &f = kPure) {
    return state_from_angle(f, w);
}

TEST(FixedConfig, Builders) {
    const FixedTestConfig single = single_block_config(10, 4, 0.05);
    EXPECT_EQ(single.estimation_copies, 6);
    EXPECT_EQ(single.blocks, 1);
    const FixedTestConfig multi = multi_block_config(35, 10, 4, 0.05);
    EXPECT_EQ(multi.blocks, 3);
    EXPECT_EQ(multi.estimation_copies, 23);
    EXPECT_THROW(single_block_config(3, 4, 0.05), Error);
    EXPECT_THROW(multi_block_config(9, 10, 4, 0.05), Error);
    EXPECT_THROW((FixedTestConfig{10, 5, 4, 1, 0.05}.validate()), Error);
}

TEST(Calibration, OrthogonalStatesHavePowerOne) {
    const LambdaCalibration c = calibrate_lht_lambda(angle_state(0), angle_state(180), 1, 0.05);
    EXPECT_NEAR(c.size, 0.0, 1e-12);
    EXPECT_NEAR(c.power, 1.0, 1e-12);
}

TEST(Calibration, EqualStatesPowerIsSize) {
    const DensityMatrix rho = angle_state(30, FamilyConfig{0.9, 0.9});
    const LambdaCalibration c = calibrate_lht_lambda(rho, rho, 2, 0.05);
    EXPECT_LE(c.size, 0.05);
    EXPECT_NEAR(c.power, c.size, 1e-12);
}

TEST(Calibration, ZeroVersusPlusFourCopies) {
    const LambdaCalibration c = calibrate_lht_lambda(angle_state(0), angle_state(90), 4, 0.05);
    EXPECT_DOUBLE_EQ(c.lambda, 0.88);
    EXPECT_NEAR(c.size, 0.0490070755400918, 1e-12);
    EXPECT_NEAR(c.power, 0.999132618643831, 1e-12);
}

TEST(Calibration, InfeasibleThrows) {
    // On the grid {1/3, 2/3} the sizes are 1/4 and 1.
    const DensityMatrix mixed = state_from_angle(FamilyConfig{0.0, 0.0}, 0);
    const DensityMatrix rho = angle_state(0, FamilyConfig{0.5, 0.5});
    EXPECT_NO_THROW(calibrate_lht_lambda(mixed, rho, 1, 0.05));
    try {
        calibrate_lht_lambda(rho, mixed, 1, 1e-9, 2);
        FAIL() << "expected InfeasibleCalibration";
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::InfeasibleCalibration);
    }
}

TEST(Calibration, ExactSizeOnRandomInstances) {
    RandomStream rng(6);
    const FamilyConfig fam{0.9, 0.9};
    for (int trial = 0; trial < 50; ++trial) {
        const DensityMatrix r0 = angle_state(180 * rng.uniform(), fam);
        const DensityMatrix r1 = angle_state(180 * rng.uniform(), fam);
        const int n = 1 + trial % 4;
        try {
            const LambdaCalibration c = calibrate_lht_lambda(r0, r1, n, 0.05);
            const Povm p = helstrom_povm({r0, r1, n, c.lambda});
            const double size = trace_of_product(tensor_power(r0.matrix(), n), p.element(1)).real();
            EXPECT_LE(size, 0.05 + 1e-12);
            EXPECT_NEAR(size, c.size, 1e-9);
        } catch (const Error &e) {
            EXPECT_EQ(e.code(), ErrorCode::InfeasibleCalibration);
        }
    }
}

TEST(Binomial, TailValues) {
    EXPECT_DOUBLE_EQ(binomial_upper_tail(3, 0, 0.3), 1.0);
    EXPECT_DOUBLE_EQ(binomial_upper_tail(3, 4, 0.3), 0.0);
    EXPECT_NEAR(binomial_upper_tail(3, 2, 0.3), 3 * 0.09 * 0.7 + 0.027, 1e-15);
    EXPECT_NEAR(binomial_upper_tail(10, 6, 0.5), 386.0 / 1024.0, 1e-14);
}

TEST(BlockLevel, SingleBlockIsLevel) {
    EXPECT_EQ(block_level(1, 0.05), 0.05);
    EXPECT_EQ(block_level(1, 0.2), 0.2);
}

TEST(BlockLevel, ReferenceValues) {
    EXPECT_NEAR(block_level(2, 0.05), 0.22360679775, 1e-10);
    EXPECT_NEAR(block_level(3, 0.05), 0.135350362172, 1e-10);
    EXPECT_NEAR(block_level(5, 0.05), 0.189255377438, 1e-10);
    EXPECT_NEAR(block_level(10, 0.05), 0.303537212564, 1e-10);
}

TEST(BlockLevel, TightAndValid) {
    for (int b = 2; b <= 25; ++b) {
        const double e = block_level(b, 0.05);
        const int k = b / 2 + 1;
        EXPECT_LE(binomial_upper_tail(b, k, e), 0.05);
        EXPECT_GT(binomial_upper_tail(b, k, std::nextafter(e, 1.0)), 0.05 - 1e-15);
    }
}

TEST(Majority, Examples) {
    const std::vector<int> a{1, 1, 0}, b{1, 0}, c{0}, d{1};
    EXPECT_EQ(majority_vote(a), 1);
    EXPECT_EQ(majority_vote(b), 0);
    EXPECT_EQ(majority_vote(c), 0);
    EXPECT_EQ(majority_vote(d), 1);
}

TEST(Majority, PermutationInvariant) {
    RandomStream rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> votes(1 + trial % 9);
        for (int &v : votes) {
            v = static_cast<int>(rng.next_u64() % 2);
        }
        const int base = majority_vote(votes);
        std::sort(votes.begin(), votes.end());
        do {
            EXPECT_EQ(majority_vote(votes), base);
        } while (votes.size() < 7 && std::next_permutation(votes.begin(), votes.end()));
    }
}

TEST(Estimation, EmptyPhaseGivesSmallestAngle) {
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,180]"));
    EXPECT_EQ(estimate_alternative(kPure, alt, 0, 0).omega_deg, 45.5);
    EXPECT_EQ(estimate_alternative(kPure, alt, 0, 5).omega_deg, 180.0);
    EXPECT_EQ(estimate_alternative(kPure, alt, 4, 4).omega_deg, 45.5);
    EXPECT_EQ(estimate_alternative(kPure, alt, 5, 10).omega_deg, 90.0);
    EXPECT_THROW(estimate_alternative(kPure, alt, 6, 5), Error);
}

TEST(Lht, RunsWithEmptyEstimationPhase) {
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,180]"));
    RandomStream rng(1);
    const FixedRunResult r = run_lht(single_block_config(4), angle_state(90), kPure, 45, alt, rng);
    EXPECT_EQ(r.alt_estimate, 45.5);
    EXPECT_EQ(r.copies_used, 4);
    EXPECT_EQ(r.votes.size(), 1u);
}

TEST(Lht, MultiBlockRejected) {
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,180]"));
    RandomStream rng(1);
    EXPECT_THROW(run_lht(multi_block_config(30), angle_state(90), kPure, 45, alt, rng), Error);
}

TEST(Lht, SingleBlockEqualsBlhtOnSameStream) {
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,180]"));
    for (int seed = 0; seed < 50; ++seed) {
        RandomStream a(seed), b(seed);
        const FixedTestConfig cfg = single_block_config(12 + seed);
        const FixedRunResult x = run_lht(cfg, angle_state(90), kPure, 45, alt, a);
        const FixedRunResult y = run_blht(cfg, angle_state(90), kPure, 45, alt, b);
        EXPECT_EQ(x.decision, y.decision);
        EXPECT_EQ(x.parameter, y.parameter);
        EXPECT_EQ(a.next_u64(), b.next_u64());
    }
}

TEST(Lht, TypeOneFrequency) {
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,180]"));
    const FixedTestConfig cfg = single_block_config(40);
    int rejects = 0;
    for (int run = 0; run < 2000; ++run) {
        RandomStream rng(derive_seed(5, {static_cast<std::uint64_t>(run)}));
        rejects += run_lht(cfg, angle_state(45), kPure, 45, alt, rng).decision;
    }
    EXPECT_LE(rejects / 2000.0, 0.05 + 3 * std::sqrt(0.05 * 0.95 / 2000));
}

TEST(Blht, ExactOverallLevel) {
    // Conditional on the estimate, each block rejects with probability
    // <= block_level, so the majority rejects with probability <= eps0.
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,180]"));
    for (int budget : {20, 30, 50}) {
        const FixedTestConfig cfg = multi_block_config(budget);
        for (double est : {60.0, 90.0, 150.0}) {
            const DensityMatrix r0 = angle_state(45), r1 = angle_state(est);
            const double e = block_level(cfg.blocks, cfg.eps0);
            const LambdaCalibration c = calibrate_lht_lambda(r0, r1, cfg.joint_copies, e);
            EXPECT_LE(c.size, e + 1e-12);
            EXPECT_LE(binomial_upper_tail(cfg.blocks, cfg.blocks / 2 + 1, c.size), cfg.eps0 + 1e-12);
        }
    }
}

TEST(Lvt, DegenerateNullContainsAlternative) {
    const std::vector<double> nulls{45.0, 90.0};
    const auto d = calibrate_lvt_threshold(kPure, nulls, 90.0, 4, 0.999, 0.4);
    ASSERT_TRUE(d.has_value());
    for (double g : d->glr) {
        EXPECT_LE(g, 1.0 + 1e-12);
    }
    // The alternative is itself a null state, so power cannot exceed size.
    EXPECT_LE(d->power, d->size + 1e-12);
}

TEST(Lvt, CalibrationExactOverNullGrid) {
    const FamilyConfig fam{0.9, 0.9};
    const std::vector<double> nulls{45.0, 135.0};
    for (double alt : {60.0, 90.0, 160.0}) {
        const LvtDesign d = design_lvt(fam, nulls, alt, 4, 0.05, 72);
        for (double w : nulls) {
            const auto p = variational_distribution(d.theta, 4, family_matrix(fam, w));
            double reject = 0.0;
            for (std::size_t x = 0; x < p.size(); ++x) {
                reject += d.glr[x] >= d.threshold ? p[x] : 0.0;
            }
            EXPECT_LE(reject, 0.05 + 1e-12);
        }
        // The threshold is the smallest realized GLR that keeps the level.
        for (double g : d.glr) {
            if (g < d.threshold) {
                double worst = 0.0;
                for (double w : nulls) {
                    const auto p = variational_distribution(d.theta, 4, family_matrix(fam, w));
                    double reject = 0.0;
                    for (std::size_t x = 0; x < p.size(); ++x) {
                        reject += d.glr[x] >= g ? p[x] : 0.0;
                    }
                    worst = std::max(worst, reject);
                }
                EXPECT_GT(worst, 0.05);
            }
        }
    }
}

TEST(Lvt, SingleBlockEqualsBlvtOnSameStream) {
    const ParamGrid alt = build_grid(HypothesisSet::parse("(45,135) U (135,180)"));
    const std::vector<double> nulls{45.0, 135.0};
    for (int seed = 0; seed < 20; ++seed) {
        RandomStream a(seed), b(seed);
        const FixedTestConfig cfg = single_block_config(10 + seed);
        const FixedRunResult x = run_lvt(cfg, angle_state(90), kPure, nulls, alt, a, 36);
        const FixedRunResult y = run_blvt(cfg, angle_state(90), kPure, nulls, alt, b, 36);
        EXPECT_EQ(x.decision, y.decision);
        EXPECT_EQ(x.parameter, y.parameter);
        EXPECT_EQ(a.next_u64(), b.next_u64());
    }
}

}  // namespace
}  // namespace qsut
