#include "qsut/oracle.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

#include "qsut/error.h"
#include "qsut/measurements.h"

namespace qsut {

namespace {

// Dense evaluation, kept apart from the cached expansion the engine uses.
double direct_probability(const FamilyConfig &cfg, double omega_deg, const Observation &obs) {
    Matrix joint = family_matrix(cfg, omega_deg);
    const Matrix rho = joint;
    for (int i = 1; i < obs.copies; ++i) {
        joint = kron(joint, rho);
    }
    double p = 0.0;
    for (Eigen::Index i = 0; i < joint.rows(); ++i) {
        for (Eigen::Index j = 0; j < joint.cols(); ++j) {
            p += (joint(i, j) * obs.effect(j, i)).real();
        }
    }
    return std::max(p, 0.0);
}

double direct_log_probability(const FamilyConfig &cfg, double omega_deg, const Observation &obs) {
    return std::log(std::max(direct_probability(cfg, omega_deg, obs), kProbabilityFloor));
}

double direct_loglik(const FamilyConfig &cfg, double omega_deg, std::span<const Observation> prefix) {
    double total = 0.0;
    for (const Observation &obs : prefix) {
        total += direct_log_probability(cfg, omega_deg, obs);
    }
    return total;
}

struct GridFit {
    std::size_t index = 0;
    double omega = 0.0;
    double loglik = 0.0;
};

// First index whose value is within the relative tie tolerance of the top.
std::size_t first_near_max(const std::vector<double> &values) {
    double top = values.front();
    for (double v : values) {
        top = std::max(top, v);
    }
    const double slack = kLoglikTieTolerance * std::max(1.0, std::abs(top));
    std::size_t j = 0;
    while (values[j] < top - slack) {
        ++j;
    }
    return j;
}

GridFit grid_fit(const ParamGrid &grid, const FamilyConfig &cfg, std::span<const Observation> prefix) {
    std::vector<double> ll(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        ll[j] = direct_loglik(cfg, grid.angles[j], prefix);
    }
    const std::size_t j = first_near_max(ll);
    return GridFit{j, grid.angles[j], ll[j]};
}

// Grid fit, then a ternary search over the two neighbouring cells when the
// grid maximizer sits inside an interval, then the incumbent if it is better.
std::pair<double, double> refined_fit(const ParamGrid &grid, const FamilyConfig &cfg,
                                      std::span<const Observation> prefix, double incumbent) {
    const GridFit coarse = grid_fit(grid, cfg, prefix);
    double omega = coarse.omega;
    double best = coarse.loglik;
    const std::size_t j = coarse.index;
    const bool interior = grid.segment[j] >= 0 && j > 0 && j + 1 < grid.size() &&
                          grid.segment[j - 1] == grid.segment[j] && grid.segment[j + 1] == grid.segment[j];
    if (interior && !prefix.empty()) {
        double a = grid.angles[j - 1];
        double b = grid.angles[j + 1];
        for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
            const double m1 = a + (b - a) / 3.0;
            const double m2 = b - (b - a) / 3.0;
            if (direct_loglik(cfg, m1, prefix) < direct_loglik(cfg, m2, prefix)) {
                a = m1;
            } else {
                b = m2;
            }
        }
        const double x = 0.5 * (a + b);
        const double fx = direct_loglik(cfg, x, prefix);
        if (fx > best) {
            omega = x;
            best = fx;
        }
    }
    const double fi = direct_loglik(cfg, incumbent, prefix);
    if (fi > best) {
        omega = incumbent;
        best = fi;
    }
    return {omega, best};
}

double snapped_default(const ParamGrid &grid, const HypothesisSet &set) {
    return grid.angles[grid.nearest(set.default_angle())];
}

// Numerator estimate from a prefix: arg-max of pseudo-count prior plus data.
double numerator_fit(const ParamGrid &grid, const TestSetup &setup, const HypothesisSet &set,
                     std::span<const Observation> prefix, std::optional<double> initial = std::nullopt) {
    if (prefix.empty() && initial) {
        return grid.angles[grid.nearest(*initial)];
    }
    if (setup.numerator_prior <= 0.0) {
        return prefix.empty() ? snapped_default(grid, set) : grid_fit(grid, setup.family, prefix).omega;
    }
    std::vector<Observation> pseudo;
    const Povm prior = estimation_povm(setup.prior_povm);
    for (const Matrix &e : prior.elements()) {
        pseudo.push_back(Observation{1, e, {}});
    }
    std::vector<double> ll(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        ll[j] = setup.numerator_prior * direct_loglik(setup.family, grid.angles[j], pseudo) +
                direct_loglik(setup.family, grid.angles[j], prefix);
    }
    return grid.angles[first_near_max(ll)];
}

// Refined-estimate chain: entry s is the estimate after s observations.
std::vector<std::pair<double, double>> refined_chain(const ParamGrid &grid, const FamilyConfig &cfg,
                                                     std::span<const Observation> transcript, double start) {
    std::vector<std::pair<double, double>> chain;
    chain.emplace_back(start, 0.0);
    for (std::size_t s = 1; s <= transcript.size(); ++s) {
        chain.push_back(refined_fit(grid, cfg, transcript.first(s), chain.back().first));
    }
    return chain;
}

Matrix random_ginibre(std::size_t dim, RandomStream &rng) {
    Matrix g(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            // Box-Muller pairs.
            const double u1 = rng.uniform_open();
            const double u2 = rng.uniform();
            const double r = std::sqrt(-2.0 * std::log(u1));
            g(i, j) = Complex(r * std::cos(2.0 * std::numbers::pi * u2), r * std::sin(2.0 * std::numbers::pi * u2));
        }
    }
    return g;
}

std::string format_value(double v) {
    std::ostringstream out;
    out.precision(12);
    out << v;
    return out.str();
}

}  // namespace

std::vector<EnumeratedTranscript> enumerate_transcripts(const PolicyConfig &policy, const TestSetup &setup,
                                                        const DensityMatrix &truth, int horizon) {
    if (horizon > kMaxEnumerationHorizon) {
        std::ostringstream msg;
        msg << "horizon " << horizon << " exceeds the enumeration cap " << kMaxEnumerationHorizon;
        throw Error(ErrorCode::HorizonTooLarge, msg.str());
    }
    if (horizon < 0) {
        throw Error(ErrorCode::InvalidArgument, "horizon must be nonnegative");
    }
    PolicyConfig pinned = policy;
    if (pinned.kind == PolicyKind::ALHT && !pinned.fixed_lambda) {
        pinned.fixed_lambda = 0.5;
    }
    pinned.validate();
    setup.validate();

    std::vector<EnumeratedTranscript> out;
    // The POVM choice depends only on history, so the stream is never drawn.
    RandomStream unused(0);
    std::function<void(const SlrState &, EnumeratedTranscript &)> expand = [&](const SlrState &state,
                                                                                EnumeratedTranscript &branch) {
        if (static_cast<int>(branch.outcomes.size()) == horizon) {
            out.push_back(branch);
            return;
        }
        const Emission emission = next_measurement(pinned, state, setup.family, unused);
        const int copies = emission.descriptor.copies;
        const std::vector<double> probs =
            born_probabilities(tensor_power(truth.matrix(), copies), emission.povm);
        for (std::size_t x = 0; x < emission.povm.size(); ++x) {
            Observation obs = make_observation(copies, emission.povm.element(x));
            RoundRecord round = freeze_round(state, setup.family, emission.descriptor, obs, x, emission.povm.label(x));
            const SlrState next = slr_update(state, std::move(round), obs, setup.family);
            branch.povms.push_back(emission.descriptor);
            branch.outcomes.push_back(x);
            branch.observations.push_back(std::move(obs));
            branch.round_probabilities.push_back(probs[x]);
            const double saved = branch.probability;
            branch.probability *= probs[x];
            expand(next, branch);
            branch.probability = saved;
            branch.povms.pop_back();
            branch.outcomes.pop_back();
            branch.observations.pop_back();
            branch.round_probabilities.pop_back();
        }
    };
    EnumeratedTranscript root;
    expand(start_slr(setup, false, pinned.initial_null_omega, pinned.initial_alt_omega), root);
    return out;
}

EprocessExpectation eprocess_expectation(const PolicyConfig &policy, const TestSetup &setup, double truth_omega,
                                         int horizon) {
    if (!setup.null_set.contains(truth_omega)) {
        throw Error(ErrorCode::InvalidArgument, "the truth must lie in the null set");
    }
    const DensityMatrix truth = state_from_angle(setup.family, truth_omega);
    const std::vector<EnumeratedTranscript> branches = enumerate_transcripts(policy, setup, truth, horizon);
    const ParamGrid alt_grid = build_grid(setup.alt_set, setup.resolution_deg);

    EprocessExpectation result;
    result.true_denominator.assign(static_cast<std::size_t>(horizon), 0.0);
    result.mle_denominator.assign(static_cast<std::size_t>(horizon), 0.0);
    result.branches = branches.size();
    for (const EnumeratedTranscript &branch : branches) {
        result.total_probability += branch.probability;
        if (branch.probability <= 0.0) {
            continue;
        }
        const std::span<const Observation> obs(branch.observations);
        double log_bar = 0.0;
        for (int t = 1; t <= horizon; ++t) {
            const std::span<const Observation> past = obs.first(static_cast<std::size_t>(t - 1));
            const double alt = numerator_fit(alt_grid, setup, setup.alt_set, past, policy.initial_alt_omega);
            const Observation &now = obs[static_cast<std::size_t>(t - 1)];
            log_bar += direct_log_probability(setup.family, alt, now) -
                       std::log(branch.round_probabilities[static_cast<std::size_t>(t - 1)]);
            result.true_denominator[static_cast<std::size_t>(t - 1)] += branch.probability * std::exp(log_bar);
            TestSetup s = setup;
            const double log_slr = recompute_slr(obs.first(static_cast<std::size_t>(t)), s);
            result.mle_denominator[static_cast<std::size_t>(t - 1)] += branch.probability * std::exp(log_slr);
        }
    }
    return result;
}

double recompute_slr(std::span<const Observation> transcript, const TestSetup &setup) {
    if (transcript.empty()) {
        return 0.0;
    }
    const FamilyConfig &cfg = setup.family;
    const ParamGrid null_grid = build_grid(setup.null_set, setup.resolution_deg);
    const ParamGrid alt_grid = build_grid(setup.alt_set, setup.resolution_deg);
    double numerator = 0.0;
    for (std::size_t t = 0; t < transcript.size(); ++t) {
        const double alt = numerator_fit(alt_grid, setup, setup.alt_set, transcript.first(t));
        numerator += direct_log_probability(cfg, alt, transcript[t]);
    }
    const auto chain = refined_chain(null_grid, cfg, transcript, snapped_default(null_grid, setup.null_set));
    return numerator - chain.back().second;
}

double recompute_reverse_slr(std::span<const Observation> transcript, const TestSetup &setup) {
    if (transcript.empty()) {
        return 0.0;
    }
    const FamilyConfig &cfg = setup.family;
    const ParamGrid null_grid = build_grid(setup.null_set, setup.resolution_deg);
    const ParamGrid alt_grid = build_grid(setup.alt_set, setup.resolution_deg);
    const auto alt_chain = refined_chain(alt_grid, cfg, transcript, snapped_default(alt_grid, setup.alt_set));
    double numerator = 0.0;
    for (std::size_t t = 0; t < transcript.size(); ++t) {
        const double null = numerator_fit(null_grid, setup, setup.null_set, transcript.first(t));
        numerator += direct_log_probability(cfg, null, transcript[t]);
    }
    return numerator - alt_chain.back().second;
}

double helstrom_bound(const DensityMatrix &rho0, const DensityMatrix &rho1, double lambda, int n) {
    const Matrix diff = (1.0 - lambda) * tensor_power(rho0.matrix(), n) - lambda * tensor_power(rho1.matrix(), n);
    return 0.5 * (1.0 - trace_norm(diff));
}

double weighted_error(const DensityMatrix &rho0, const DensityMatrix &rho1, double lambda, int n, const Povm &povm) {
    if (povm.size() != 2) {
        throw Error(ErrorCode::InvalidArgument, "weighted error needs a binary POVM");
    }
    const std::vector<double> p0 = born_probabilities(tensor_power(rho0.matrix(), n), povm);
    const std::vector<double> p1 = born_probabilities(tensor_power(rho1.matrix(), n), povm);
    return (1.0 - lambda) * p0[1] + lambda * p1[0];
}

DensityMatrix random_density(std::size_t dim, RandomStream &rng) {
    const Matrix g = random_ginibre(dim, rng);
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();
    return DensityMatrix::validate(hermitian_part(rho));
}

Povm random_povm(std::size_t dim, std::size_t outcomes, RandomStream &rng) {
    std::vector<Matrix> parts;
    Matrix total = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < outcomes; ++k) {
        const Matrix g = random_ginibre(dim, rng);
        parts.push_back(g * g.adjoint());
        total += parts.back();
    }
    const EigenDecomposition eig = hermitian_eig(total);
    const Matrix inv_sqrt =
        eig.vectors * eig.values.cwiseSqrt().cwiseInverse().cast<Complex>().asDiagonal() * eig.vectors.adjoint();
    std::vector<std::string> labels;
    std::vector<Matrix> elements;
    for (std::size_t k = 0; k < outcomes; ++k) {
        labels.push_back("r" + std::to_string(k));
        elements.push_back(hermitian_part(inv_sqrt * parts[k] * inv_sqrt));
    }
    return Povm::validate(std::move(labels), std::move(elements));
}

std::vector<CheckResult> run_verification_suite(std::uint64_t seed) {
    std::vector<CheckResult> checks;
    auto add = [&](std::string name, bool ok, std::string detail) {
        checks.push_back(CheckResult{std::move(name), ok, std::move(detail)});
    };
    RandomStream rng(seed);

    {
        const DensityMatrix zero = state_from_angle(FamilyConfig{}, 0.0);
        const DensityMatrix plus = state_from_angle(FamilyConfig{}, 90.0);
        const double bound = helstrom_bound(zero, plus, 0.5, 1);
        add("helstrom_spot_value", std::abs(bound - 0.5 * (1.0 - std::sqrt(0.5))) <= 1e-12,
            "bound=" + format_value(bound));
    }
    {
        double worst = 0.0;
        for (int pair = 0; pair < 100; ++pair) {
            const DensityMatrix a = random_density(2, rng);
            const DensityMatrix b = random_density(2, rng);
            for (int k = 1; k <= 9; ++k) {
                const double lambda = k / 10.0;
                const Povm povm = helstrom_povm(HelstromSpec{a, b, 1, lambda});
                worst = std::max(worst, std::abs(weighted_error(a, b, lambda, 1, povm) - helstrom_bound(a, b, lambda, 1)));
            }
        }
        add("helstrom_optimality", worst <= 1e-9, "max deviation=" + format_value(worst));
    }

    TestSetup setup;
    setup.family = FamilyConfig{0.9, 0.9};
    setup.null_set = HypothesisSet::parse("[30,60]");
    setup.alt_set = HypothesisSet::parse("(60,180]");
    for (PolicyKind kind : {PolicyKind::ALHTPlus, PolicyKind::ALVT, PolicyKind::ALHT}) {
        PolicyConfig policy;
        policy.kind = kind;
        policy.n_ic = 1;
        policy.n_joint = 2;
        const EprocessExpectation e = eprocess_expectation(policy, setup, 45.0, 3);
        double worst_identity = 0.0;
        double worst_excess = -1.0;
        for (std::size_t t = 0; t < e.true_denominator.size(); ++t) {
            worst_identity = std::max(worst_identity, std::abs(e.true_denominator[t] - 1.0));
            worst_excess = std::max(worst_excess, e.mle_denominator[t] - 1.0);
        }
        const std::string name = policy_name(kind);
        add("eprocess_identity_" + name, worst_identity <= 1e-9,
            "branches=" + std::to_string(e.branches) + " max |E-1|=" + format_value(worst_identity));
        add("eprocess_domination_" + name, worst_excess <= 1e-9, "max E-1=" + format_value(worst_excess));
        add("enumeration_mass_" + name, std::abs(e.total_probability - 1.0) <= 1e-9,
            "total=" + format_value(e.total_probability));
    }

    {
        TestSetup composite;
        composite.family = FamilyConfig{0.95, 0.8};
        composite.null_set = HypothesisSet::parse("[10,60]");
        composite.alt_set = HypothesisSet::parse("(60,170)");
        double worst = 0.0;
        double worst_reverse = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            SlrState state = start_slr(composite, true);
            const double truth_omega = 180.0 * rng.uniform();
            const Matrix truth = family_matrix(composite.family, truth_omega);
            for (int t = 0; t < 5; ++t) {
                const int copies = rng.uniform() < 0.5 ? 1 : 2;
                const Povm povm = random_povm(checked_power_dim(2, copies), 2 + rng.next_u64() % 3, rng);
                const std::size_t x = sample_outcome(born_probabilities(tensor_power(truth, copies), povm), rng);
                Observation obs = make_observation(copies, povm.element(x));
                PovmDescriptor d;
                d.copies = copies;
                RoundRecord round = freeze_round(state, composite.family, d, obs, x, povm.label(x));
                state = slr_update(std::move(state), std::move(round), obs, composite.family);
                worst = std::max(worst, std::abs(state.log_slr - recompute_slr(state.observations, composite)));
                worst_reverse = std::max(
                    worst_reverse, std::abs(state.log_reverse_slr - recompute_reverse_slr(state.observations, composite)));
            }
        }
        add("slr_recompute", worst <= 1e-9, "max deviation=" + format_value(worst));
        add("reverse_slr_recompute", worst_reverse <= 1e-9, "max deviation=" + format_value(worst_reverse));
    }
    return checks;
}

}  // namespace qsut
