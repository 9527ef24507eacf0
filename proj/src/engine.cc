#include "qsut/engine.h"

#include <cmath>
#include <map>
#include <sstream>

#include "qsut/error.h"

namespace qsut {

namespace {

void check_eps(double eps, const char *name) {
    if (!(eps > 0.0 && eps < 1.0)) {
        std::ostringstream msg;
        msg << name << " = " << eps << " must lie in (0, 1)";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

MleResult snapped_estimate(const ParamGrid &grid, double omega_deg) {
    const std::size_t j = grid.nearest(omega_deg);
    return MleResult{grid.angles[j], grid.loglik[j], j};
}

ParamGrid prior_grid(const TestSetup &setup, const HypothesisSet &set) {
    ParamGrid grid = build_grid(set, setup.resolution_deg);
    if (setup.numerator_prior > 0.0) {
        const Povm povm = estimation_povm(setup.prior_povm);
        for (const Matrix &e : povm.elements()) {
            const Observation obs = make_observation(1, e);
            for (std::size_t j = 0; j < grid.size(); ++j) {
                grid.loglik[j] += setup.numerator_prior * observation_log_probability(setup.family, grid.angles[j], obs);
            }
        }
    }
    return grid;
}

MleResult initial_estimate(const TestSetup &setup, const ParamGrid &grid, const HypothesisSet &set,
                           std::optional<double> override_omega) {
    if (override_omega) {
        return snapped_estimate(grid, *override_omega);
    }
    if (setup.numerator_prior > 0.0) {
        return mle(grid);
    }
    return snapped_estimate(grid, set.default_angle());
}

}  // namespace

Povm estimation_povm(EstimationPovm kind) {
    return kind == EstimationPovm::Sic ? sic_povm_qubit() : computational_basis_povm(1);
}

void TestSetup::validate() const {
    family.validate();
    if (!(numerator_prior >= 0.0) || !std::isfinite(numerator_prior)) {
        throw Error(ErrorCode::InvalidArgument, "numerator_prior must be a finite nonnegative weight");
    }
    if (null_set.empty() || alt_set.empty()) {
        throw Error(ErrorCode::InvalidArgument, "both hypothesis sets must be nonempty");
    }
    if (!null_set.disjoint_from(alt_set)) {
        throw Error(ErrorCode::InvalidArgument,
                    "null set " + null_set.to_string() + " and alternative " + alt_set.to_string() + " overlap");
    }
    build_grid(null_set, resolution_deg);
    build_grid(alt_set, resolution_deg);
}

std::string policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::ALHT: return "aLHT";
        case PolicyKind::ALHTPlus: return "aLHT+";
        case PolicyKind::ALVT: return "aLVT";
    }
    return "?";
}

void PolicyConfig::validate() const {
    if (n_ic < 0 || n_joint < 1) {
        throw Error(ErrorCode::InvalidArgument, "policy needs n_ic >= 0 and n_joint >= 1");
    }
    checked_power_dim(2, n_joint);
    if (fixed_lambda && !(*fixed_lambda > 0.0 && *fixed_lambda < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "fixed lambda must lie in (0, 1)");
    }
    if (lambda_grid < 2 || theta_grid < 2) {
        throw Error(ErrorCode::InvalidArgument, "lambda and theta grids need at least two points");
    }
}

std::string PovmDescriptor::to_string() const {
    std::ostringstream out;
    switch (kind) {
        case PovmKind::Computational: out << "computational"; break;
        case PovmKind::Sic: out << "sic"; break;
        case PovmKind::Helstrom:
            out << "helstrom(n=" << copies << ",lambda=" << lambda << ",null=" << null_omega << ",alt=" << alt_omega
                << ")";
            break;
        case PovmKind::Variational: out << "variational(n=" << copies << ",theta=" << theta << ")"; break;
    }
    return out.str();
}

Povm build_povm(const PovmDescriptor &descriptor, const FamilyConfig &family) {
    switch (descriptor.kind) {
        case PovmKind::Computational: return computational_basis_povm(descriptor.copies);
        case PovmKind::Sic:
            if (descriptor.copies != 1) {
                throw Error(ErrorCode::InvalidArgument, "the SIC-POVM acts on a single copy");
            }
            return sic_povm_qubit();
        case PovmKind::Helstrom:
            return helstrom_povm(HelstromSpec{state_from_angle(family, descriptor.null_omega),
                                              state_from_angle(family, descriptor.alt_omega), descriptor.copies,
                                              descriptor.lambda});
        case PovmKind::Variational: return variational_povm(VariationalSpec{descriptor.theta, descriptor.copies});
    }
    throw Error(ErrorCode::InvalidArgument, "unknown POVM kind");
}

SlrState start_slr(const TestSetup &setup, bool two_sided, std::optional<double> initial_null_omega,
                   std::optional<double> initial_alt_omega) {
    SlrState state;
    state.two_sided = two_sided;
    state.null_grid = build_grid(setup.null_set, setup.resolution_deg);
    state.null_estimate = snapped_estimate(state.null_grid, setup.null_set.default_angle());
    state.alt_numerator_grid = prior_grid(setup, setup.alt_set);
    state.alt_estimate = initial_estimate(setup, state.alt_numerator_grid, setup.alt_set, initial_alt_omega);
    if (two_sided) {
        state.alt_grid = build_grid(setup.alt_set, setup.resolution_deg);
        state.alt_refined = snapped_estimate(state.alt_grid, setup.alt_set.default_angle());
        state.null_numerator_grid = prior_grid(setup, setup.null_set);
        state.null_numerator_estimate =
            initial_estimate(setup, state.null_numerator_grid, setup.null_set, initial_null_omega);
    }
    return state;
}

RoundRecord freeze_round(const SlrState &state, const FamilyConfig &family, const PovmDescriptor &descriptor,
                         const Observation &obs, std::size_t outcome, std::string label) {
    RoundRecord round;
    round.povm = descriptor;
    round.copies = obs.copies;
    round.outcome = outcome;
    round.label = std::move(label);
    round.log_numerator_term = observation_log_probability(family, state.alt_estimate.omega_deg, obs);
    if (state.two_sided) {
        round.log_reverse_numerator_term = observation_log_probability(family, state.null_numerator_estimate.omega_deg, obs);
    }
    return round;
}

SlrState slr_update(SlrState state, RoundRecord round, Observation obs, const FamilyConfig &family) {
    if (round.copies != obs.copies || obs.copies < 1) {
        throw Error(ErrorCode::InconsistentTranscript, "round copy count differs from its observation");
    }
    const std::size_t expected = checked_power_dim(2, obs.copies);
    if (static_cast<std::size_t>(obs.effect.rows()) != expected || obs.effect.cols() != obs.effect.rows()) {
        std::ostringstream msg;
        msg << "effect of dimension " << obs.effect.rows() << " recorded for " << obs.copies << " copies";
        throw Error(ErrorCode::InconsistentTranscript, msg.str());
    }
    if (round.log_numerator_term > 1e-12) {
        throw Error(ErrorCode::InconsistentTranscript, "numerator term is the log of a probability and must be <= 0");
    }

    state.observations.push_back(std::move(obs));
    const Observation &latest = state.observations.back();

    state.null_grid = accumulate(std::move(state.null_grid), family, latest);
    state.null_estimate = mle_refined(state.null_grid, family, state.observations, state.null_estimate.omega_deg);
    state.frozen_log_numerator += round.log_numerator_term;
    state.log_slr = state.frozen_log_numerator - state.null_estimate.loglik;

    // Only now may the alternative side see round t.
    state.alt_numerator_grid = accumulate(std::move(state.alt_numerator_grid), family, latest);
    state.alt_estimate = mle(state.alt_numerator_grid);

    if (state.two_sided) {
        state.null_numerator_grid = accumulate(std::move(state.null_numerator_grid), family, latest);
        state.null_numerator_estimate = mle(state.null_numerator_grid);
        state.alt_grid = accumulate(std::move(state.alt_grid), family, latest);
        state.alt_refined = mle_refined(state.alt_grid, family, state.observations, state.alt_refined.omega_deg);
        state.frozen_log_reverse_numerator += round.log_reverse_numerator_term;
        state.log_reverse_slr = state.frozen_log_reverse_numerator - state.alt_refined.loglik;
    }

    round.log_slr = state.log_slr;
    round.log_reverse_slr = state.log_reverse_slr;
    state.rounds.push_back(std::move(round));
    return state;
}

StepDecision one_sided_decision(double log_slr, double eps0) {
    check_eps(eps0, "eps0");
    return log_slr >= std::log(1.0 / eps0) ? StepDecision::Reject : StepDecision::Continue;
}

TwoSidedDecision two_sided_decision(double log_slr0, double log_slr1, double eps0, double eps1) {
    if (!(eps0 > 0.0 && eps1 > 0.0) || !(std::min(eps0, eps1) < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "two-sided test needs eps0, eps1 > 0 and min(eps0, eps1) < 1");
    }
    const bool reject = log_slr0 >= std::log(1.0 / eps0);
    const bool accept = log_slr1 >= std::log(1.0 / eps1);
    if (reject && accept) {
        std::ostringstream msg;
        msg << "both processes crossed: log SLR0 = " << log_slr0 << ", log SLR1 = " << log_slr1;
        throw Error(ErrorCode::InvariantViolation, msg.str());
    }
    if (reject) {
        return TwoSidedDecision::RejectH0;
    }
    if (accept) {
        return TwoSidedDecision::AcceptH0;
    }
    return TwoSidedDecision::Continue;
}

Emission next_measurement(const PolicyConfig &policy, const SlrState &state, const FamilyConfig &family,
                          RandomStream &rng) {
    const std::size_t done = state.rounds.size();
    PovmDescriptor d;
    d.copies = policy.copies_for_round(done);
    if (!policy.is_joint_round(done)) {
        d.kind = policy.estimation_povm == EstimationPovm::Sic ? PovmKind::Sic : PovmKind::Computational;
        return Emission{d, build_povm(d, family)};
    }

    d.null_omega = state.null_estimate.omega_deg;
    d.alt_omega = state.alt_estimate.omega_deg;
    const DensityMatrix rho0 = state_from_angle(family, d.null_omega);
    const DensityMatrix rho1 = state_from_angle(family, d.alt_omega);
    switch (policy.kind) {
        case PolicyKind::ALHT:
            d.kind = PovmKind::Helstrom;
            d.lambda = policy.fixed_lambda ? *policy.fixed_lambda : rng.uniform_open();
            return Emission{d, helstrom_povm(HelstromSpec{rho0, rho1, d.copies, d.lambda})};
        case PolicyKind::ALHTPlus:
            d.kind = PovmKind::Helstrom;
            d.lambda = policy.fixed_lambda ? *policy.fixed_lambda
                                           : optimize_lambda(rho0, rho1, d.copies, policy.lambda_grid);
            return Emission{d, helstrom_povm(HelstromSpec{rho0, rho1, d.copies, d.lambda})};
        case PolicyKind::ALVT:
            d.kind = PovmKind::Variational;
            d.theta = optimize_theta(rho0, rho1, d.copies, policy.theta_grid);
            return Emission{d, variational_povm(VariationalSpec{d.theta, d.copies})};
    }
    throw Error(ErrorCode::InvalidArgument, "unknown policy kind");
}

void SequentialTestConfig::validate() const {
    setup.validate();
    policy.validate();
    check_eps(eps0, "eps0");
    if (eps1) {
        check_eps(*eps1, "eps1");
    }
}

std::string decision_name(Decision d) {
    switch (d) {
        case Decision::Reject: return "reject";
        case Decision::Accept: return "accept";
        case Decision::BudgetExhausted: return "budget_exhausted";
    }
    return "?";
}

TestOutcome run_sequential_test(const SequentialTestConfig &config, const DensityMatrix &truth, int budget,
                                RandomStream &rng) {
    if (budget < 1) {
        throw Error(ErrorCode::InvalidArgument, "budget must be at least one copy");
    }
    const FamilyConfig &family = config.setup.family;
    SlrState state = start_slr(config.setup, config.eps1.has_value(), config.policy.initial_null_omega,
                               config.policy.initial_alt_omega);
    std::map<int, Matrix> truth_powers;

    TestOutcome outcome;
    while (true) {
        const int copies = config.policy.copies_for_round(state.rounds.size());
        if (outcome.copies_used + copies > budget) {
            outcome.decision = Decision::BudgetExhausted;
            break;
        }
        Emission emission = next_measurement(config.policy, state, family, rng);
        auto it = truth_powers.find(copies);
        if (it == truth_powers.end()) {
            it = truth_powers.emplace(copies, tensor_power(truth, copies).matrix()).first;
        }
        const std::size_t x = sample_outcome(born_probabilities(it->second, emission.povm), rng);
        Observation obs = make_observation(copies, emission.povm.element(x));
        RoundRecord round = freeze_round(state, family, emission.descriptor, obs, x, emission.povm.label(x));
        state = slr_update(std::move(state), std::move(round), std::move(obs), family);
        outcome.copies_used += copies;

        if (config.eps1) {
            const TwoSidedDecision d = two_sided_decision(state.log_slr, state.log_reverse_slr, config.eps0, *config.eps1);
            if (d == TwoSidedDecision::RejectH0) {
                outcome.decision = Decision::Reject;
                break;
            }
            if (d == TwoSidedDecision::AcceptH0) {
                outcome.decision = Decision::Accept;
                break;
            }
        } else if (one_sided_decision(state.log_slr, config.eps0) == StepDecision::Reject) {
            outcome.decision = Decision::Reject;
            break;
        }
    }
    outcome.rounds_used = static_cast<int>(state.rounds.size());
    outcome.final_log_slr = state.log_slr;
    outcome.final_log_reverse_slr = state.log_reverse_slr;
    outcome.transcript = std::move(state.rounds);
    return outcome;
}

}  // namespace qsut
