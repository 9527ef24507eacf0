#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qsut/engine.h"
#include "qsut/family.h"
#include "qsut/quantum.h"
#include "qsut/random.h"

namespace qsut {

inline constexpr int kMaxEnumerationHorizon = 3;

/// One branch of the outcome tree of a deterministic policy.
struct EnumeratedTranscript {
    std::vector<PovmDescriptor> povms;
    std::vector<std::size_t> outcomes;
    std::vector<Observation> observations;
    /// Born probability of each round's outcome under the truth.
    std::vector<double> round_probabilities;
    double probability = 1.0;
};

/// Every outcome sequence of length `horizon` for the policy, including
/// zero-probability branches. aLHT's random lambda is pinned to 0.5 unless
/// the policy already fixes it. Throws HorizonTooLarge past 3.
std::vector<EnumeratedTranscript> enumerate_transcripts(const PolicyConfig &policy, const TestSetup &setup,
                                                        const DensityMatrix &truth, int horizon);

struct EprocessExpectation {
    /// E[bar-Lambda^t] with the true state in the denominator, t = 1..horizon.
    std::vector<double> true_denominator;
    /// E[Lambda^t] with the refined null MLE in the denominator.
    std::vector<double> mle_denominator;
    std::size_t branches = 0;
    double total_probability = 0.0;
};

/// Exact expectations by enumeration. `truth_omega` must lie in the null set.
EprocessExpectation eprocess_expectation(const PolicyConfig &policy, const TestSetup &setup, double truth_omega,
                                         int horizon);

/// From-scratch log SLR after the last observation: each numerator term
/// refits the alternative grid MLE on its prefix, and the denominator
/// replays the chain of refined null estimates from the start.
double recompute_slr(std::span<const Observation> transcript, const TestSetup &setup);

/// Same construction with the roles of the sets swapped: the reversed
/// process of the two-sided test.
double recompute_reverse_slr(std::span<const Observation> transcript, const TestSetup &setup);

/// 1/2 (1 - ||(1 - lambda) rho0^{(x) n} - lambda rho1^{(x) n}||_1).
double helstrom_bound(const DensityMatrix &rho0, const DensityMatrix &rho1, double lambda, int n);

/// (1 - lambda) Tr(rho0 M1) + lambda Tr(rho1 M0) for a binary POVM on n copies.
double weighted_error(const DensityMatrix &rho0, const DensityMatrix &rho1, double lambda, int n, const Povm &povm);

/// Haar-ish random density matrix of the given dimension and full rank.
DensityMatrix random_density(std::size_t dim, RandomStream &rng);

/// Random POVM with `outcomes` full-rank elements: A_i normalized by S^{-1/2}.
Povm random_povm(std::size_t dim, std::size_t outcomes, RandomStream &rng);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// The oracle suite behind `qsut verify`.
std::vector<CheckResult> run_verification_suite(std::uint64_t seed = 20240601);

}  // namespace qsut
