#include <gtest/gtest.h>

#include <cmath>

#include "qsut/engine.h"
#include "qsut/error.h"
#include "qsut/oracle.h"

namespace qsut {
namespace {

TestSetup mixed_setup() {
    return TestSetup{FamilyConfig{0.9, 0.9}, HypothesisSet::parse("[30,60]"), HypothesisSet::parse("(60,180]")};
}

PolicyConfig policy(PolicyKind kind, int n_ic, int n_joint) {
    PolicyConfig p;
    p.kind = kind;
    p.n_ic = n_ic;
    p.n_joint = n_joint;
    return p;
}

TEST(Enumerate, BranchCounts) {
    const TestSetup setup = mixed_setup();
    const DensityMatrix truth = state_from_angle(setup.family, 45);
    EXPECT_EQ(enumerate_transcripts(policy(PolicyKind::ALHTPlus, 1, 2), setup, truth, 1).size(), 2u);
    EXPECT_EQ(enumerate_transcripts(policy(PolicyKind::ALVT, 1, 4), setup, truth, 2).size(), 32u);
    EXPECT_EQ(enumerate_transcripts(policy(PolicyKind::ALVT, 1, 4), setup, truth, 0).size(), 1u);
}

TEST(Enumerate, ProbabilitiesSumToOne) {
    const TestSetup setup = mixed_setup();
    RandomStream rng(3);
    for (int kind = 0; kind < 3; ++kind) {
        const DensityMatrix truth = random_density(2, rng);
        double total = 0.0;
        for (const auto &t : enumerate_transcripts(policy(static_cast<PolicyKind>(kind), 1, 3), setup, truth, 3)) {
            total += t.probability;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Enumerate, HorizonCap) {
    const TestSetup setup = mixed_setup();
    try {
        enumerate_transcripts(policy(PolicyKind::ALHT, 1, 2), setup, state_from_angle(setup.family, 45), 4);
        FAIL() << "expected HorizonTooLarge";
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::HorizonTooLarge);
    }
}

TEST(Eprocess, HorizonOneIsExactlyOne) {
    const EprocessExpectation e = eprocess_expectation(policy(PolicyKind::ALHTPlus, 1, 2), mixed_setup(), 45.0, 1);
    ASSERT_EQ(e.true_denominator.size(), 1u);
    EXPECT_NEAR(e.true_denominator[0], 1.0, 1e-14);
    EXPECT_EQ(e.branches, 2u);
}

TEST(Eprocess, IdentityAndDominationAllPolicies) {
    for (int kind = 0; kind < 3; ++kind) {
        for (double truth : {30.0, 45.0, 60.0}) {
            const EprocessExpectation e =
                eprocess_expectation(policy(static_cast<PolicyKind>(kind), 1, 2), mixed_setup(), truth, 3);
            for (std::size_t t = 0; t < 3; ++t) {
                EXPECT_NEAR(e.true_denominator[t], 1.0, 1e-9);
                EXPECT_LE(e.mle_denominator[t], e.true_denominator[t] + 1e-9);
            }
        }
    }
}

TEST(Eprocess, TruthMustBeNull) {
    EXPECT_THROW(eprocess_expectation(policy(PolicyKind::ALHTPlus, 1, 2), mixed_setup(), 90.0, 2), Error);
}

TEST(Recompute, EmptyIsZero) {
    EXPECT_EQ(recompute_slr({}, mixed_setup()), 0.0);
    EXPECT_EQ(recompute_reverse_slr({}, mixed_setup()), 0.0);
}

TEST(Recompute, SingleRoundPointSets) {
    const TestSetup setup{FamilyConfig{}, HypothesisSet::point(120), HypothesisSet::point(30)};
    const std::vector<Observation> t{make_observation(1, computational_basis_povm(1).element(0))};
    const double num = (1 + std::cos(30 * M_PI / 180)) / 2;
    const double den = (1 + std::cos(120 * M_PI / 180)) / 2;
    EXPECT_NEAR(recompute_slr(t, setup), std::log(num / den), 1e-12);
    EXPECT_NEAR(recompute_reverse_slr(t, setup), std::log(den / num), 1e-12);
}

TEST(Recompute, MatchesEngineOnRandomTranscripts) {
    const TestSetup setup{FamilyConfig{0.9, 0.9}, HypothesisSet::parse("[10,60]"), HypothesisSet::parse("(60,170)")};
    RandomStream rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        SequentialTestConfig cfg{setup, policy(static_cast<PolicyKind>(trial % 3), 1, 2), 1e-12, 1e-12};
        const double truth = 360 * rng.uniform();
        RandomStream run(rng.next_u64());
        const TestOutcome out = run_sequential_test(cfg, state_from_angle(setup.family, truth), 7, run);
        ASSERT_EQ(out.rounds_used, 5);
        std::vector<Observation> obs;
        for (const RoundRecord &r : out.transcript) {
            obs.push_back(make_observation(r.copies, build_povm(r.povm, setup.family).element(r.outcome)));
        }
        EXPECT_NEAR(out.final_log_slr, recompute_slr(obs, setup), 1e-9);
        EXPECT_NEAR(out.final_log_reverse_slr, recompute_reverse_slr(obs, setup), 1e-9);
    }
}

TEST(HelstromBound, Examples) {
    const FamilyConfig pure;
    EXPECT_NEAR(helstrom_bound(state_from_angle(pure, 0), state_from_angle(pure, 180), 0.5, 1), 0.0, 1e-14);
    const DensityMatrix rho = state_from_angle(FamilyConfig{0.7, 0.7}, 20);
    EXPECT_NEAR(helstrom_bound(rho, rho, 0.5, 2), 0.5, 1e-14);
    EXPECT_NEAR(helstrom_bound(state_from_angle(pure, 0), state_from_angle(pure, 90), 0.5, 1), 0.14645, 1e-5);
}

TEST(RandomInstances, ValidObjects) {
    RandomStream rng(1);
    for (int i = 0; i < 20; ++i) {
        EXPECT_NO_THROW(DensityMatrix::validate(random_density(4, rng).matrix()));
        const Povm p = random_povm(4, 3, rng);
        EXPECT_NO_THROW(Povm::validate(p.labels(), p.elements()));
    }
}

TEST(VerificationSuite, AllChecksPass) {
    for (const CheckResult &c : run_verification_suite()) {
        EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
    }
}

}  // namespace
}  // namespace qsut
