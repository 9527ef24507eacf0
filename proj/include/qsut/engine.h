#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qsut/family.h"
#include "qsut/measurements.h"
#include "qsut/quantum.h"
#include "qsut/random.h"

namespace qsut {

enum class EstimationPovm { Computational, Sic };

/// Single-copy POVM for the estimation rounds.
Povm estimation_povm(EstimationPovm kind);

/// The hypothesis-testing problem: state family plus the two angle regions.
struct TestSetup {
    FamilyConfig family;
    HypothesisSet null_set;
    HypothesisSet alt_set;
    double resolution_deg = kDefaultResolutionDeg;
    /// Pseudo-count given to every outcome of `prior_povm` before any data
    /// when fitting the estimates that enter numerators. Keeps pure-state
    /// estimates off outcomes of probability zero. 0 gives the plain MLE.
    double numerator_prior = 0.5;
    EstimationPovm prior_povm = EstimationPovm::Computational;

    /// Checks the family, that both sets are nonempty and disjoint, and that
    /// both grids are nonempty. Throws InvalidArgument or EmptyGrid.
    void validate() const;
};

enum class PolicyKind { ALHT, ALHTPlus, ALVT };

std::string policy_name(PolicyKind kind);

/// Block policy: each block is n_ic single-copy rounds with the estimation
/// POVM, then one joint round on n_joint copies.
struct PolicyConfig {
    PolicyKind kind = PolicyKind::ALHTPlus;
    int n_ic = 6;
    int n_joint = 4;
    EstimationPovm estimation_povm = EstimationPovm::Computational;
    /// Numerator estimates used before any data. By default the prior mode,
    /// or with no prior the midpoint of the longest piece of each set,
    /// snapped to the grid.
    std::optional<double> initial_alt_omega;
    std::optional<double> initial_null_omega;
    int lambda_grid = kDefaultLambdaGrid;
    int theta_grid = kDefaultThetaGrid;
    /// Replaces aLHT's uniform lambda draw; makes the policy deterministic.
    std::optional<double> fixed_lambda;

    void validate() const;
    bool is_joint_round(std::size_t rounds_done) const {
        return rounds_done % static_cast<std::size_t>(n_ic + 1) == static_cast<std::size_t>(n_ic);
    }
    int copies_for_round(std::size_t rounds_done) const {
        return is_joint_round(rounds_done) ? n_joint : 1;
    }
};

enum class PovmKind { Computational, Sic, Helstrom, Variational };

/// Enough to rebuild a round's POVM from the family.
struct PovmDescriptor {
    PovmKind kind = PovmKind::Computational;
    int copies = 1;
    double lambda = 0.0;
    double theta = 0.0;
    double null_omega = 0.0;
    double alt_omega = 0.0;

    std::string to_string() const;
};

Povm build_povm(const PovmDescriptor &descriptor, const FamilyConfig &family);

struct RoundRecord {
    PovmDescriptor povm;
    int copies = 1;
    std::size_t outcome = 0;
    std::string label;
    /// log Tr((alt estimate from rounds < t)^{(x)n} M_x), frozen at round t.
    double log_numerator_term = 0.0;
    /// Same with the null numerator estimate; used by the reversed process.
    double log_reverse_numerator_term = 0.0;
    double log_slr = 0.0;
    double log_reverse_slr = 0.0;
};

/// Running bookkeeping for the split likelihood ratio, and for its reversed
/// twin when two_sided is set.
struct SlrState {
    bool two_sided = false;
    std::vector<RoundRecord> rounds;
    std::vector<Observation> observations;
    /// Data log-likelihoods over the null set; the denominator's grid.
    ParamGrid null_grid;
    /// Prior plus data over the alternative set; numerator estimates.
    ParamGrid alt_numerator_grid;
    /// Two-sided only: data over the alternative set, and prior plus data
    /// over the null set.
    ParamGrid alt_grid;
    ParamGrid null_numerator_grid;
    /// Refined null MLE over every round so far; the denominator.
    MleResult null_estimate;
    /// Grid arg-max of alt_numerator_grid; feeds the next numerator and the
    /// joint measurement design.
    MleResult alt_estimate;
    /// Two-sided: refined alternative MLE (reversed denominator) and the
    /// null numerator estimate.
    MleResult alt_refined;
    MleResult null_numerator_estimate;
    double frozen_log_numerator = 0.0;
    double frozen_log_reverse_numerator = 0.0;
    double log_slr = 0.0;
    double log_reverse_slr = 0.0;
};

SlrState start_slr(const TestSetup &setup, bool two_sided, std::optional<double> initial_null_omega = std::nullopt,
                   std::optional<double> initial_alt_omega = std::nullopt);

/// Freezes the numerator term(s) for a new round from the estimates held
/// in `state`, i.e. from rounds 1..t-1 only.
RoundRecord freeze_round(const SlrState &state, const FamilyConfig &family, const PovmDescriptor &descriptor,
                         const Observation &obs, std::size_t outcome, std::string label);

/// Appends a round: refits the null MLE on all rounds, recomputes the
/// denominator, then folds the round into the alternative grid. Throws
/// InconsistentTranscript when the round and observation disagree.
SlrState slr_update(SlrState state, RoundRecord round, Observation obs, const FamilyConfig &family);

enum class StepDecision { Continue, Reject };
enum class TwoSidedDecision { Continue, RejectH0, AcceptH0 };

/// Reject iff log_slr >= log(1 / eps0).
StepDecision one_sided_decision(double log_slr, double eps0);

/// Throws InvariantViolation if both processes cross together, which the
/// construction rules out whenever min(eps0, eps1) < 1.
TwoSidedDecision two_sided_decision(double log_slr0, double log_slr1, double eps0, double eps1);

struct Emission {
    PovmDescriptor descriptor;
    Povm povm;
};

/// The POVM for the next round. Joint rounds build the Helstrom (aLHT,
/// aLHT+) or variational (aLVT) measurement from the current estimates.
Emission next_measurement(const PolicyConfig &policy, const SlrState &state, const FamilyConfig &family,
                          RandomStream &rng);

struct SequentialTestConfig {
    TestSetup setup;
    PolicyConfig policy;
    double eps0 = 0.05;
    /// Set for the two-sided test.
    std::optional<double> eps1;

    void validate() const;
};

enum class Decision { Reject, Accept, BudgetExhausted };

std::string decision_name(Decision d);

struct TestOutcome {
    Decision decision = Decision::BudgetExhausted;
    int copies_used = 0;
    int rounds_used = 0;
    double final_log_slr = 0.0;
    double final_log_reverse_slr = 0.0;
    std::vector<RoundRecord> transcript;
};

/// Measures, updates and decides round by round until a threshold is
/// crossed or the next round would exceed `budget` copies.
TestOutcome run_sequential_test(const SequentialTestConfig &config, const DensityMatrix &truth, int budget,
                                RandomStream &rng);

}  // namespace qsut
