#include "qsut/baselines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qsut/error.h"

namespace qsut {

namespace {

void check_level(double eps0) {
    if (!(eps0 > 0.0 && eps0 < 1.0)) {
        std::ostringstream msg;
        msg << "eps0 = " << eps0 << " must lie in (0, 1)";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

/// Draws the m estimation outcomes from the truth and returns the count of "0".
int sample_estimation_phase(const DensityMatrix &truth, int m, RandomStream &rng) {
    if (truth.dim() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "fixed-copy baselines expect a single-qubit truth");
    }
    const double p0 = std::clamp(truth.matrix()(0, 0).real(), 0.0, 1.0);
    const std::vector<double> probs{p0, 1.0 - p0};
    int zeros = 0;
    for (int i = 0; i < m; ++i) {
        zeros += sample_outcome(probs, rng) == 0 ? 1 : 0;
    }
    return zeros;
}

}  // namespace

void FixedTestConfig::validate() const {
    check_level(eps0);
    if (blocks < 1 || joint_copies < 1 || estimation_copies < 0 ||
        estimation_copies + blocks * joint_copies != total_budget) {
        std::ostringstream msg;
        msg << "fixed test needs m + b * joint = n with b >= 1, m >= 0; got n=" << total_budget
            << ", m=" << estimation_copies << ", b=" << blocks << ", joint=" << joint_copies;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

FixedTestConfig single_block_config(int budget, int joint_copies, double eps0) {
    FixedTestConfig cfg{budget, budget - joint_copies, joint_copies, 1, eps0};
    cfg.validate();
    return cfg;
}

FixedTestConfig multi_block_config(int budget, int block_copies, int joint_copies, double eps0) {
    if (block_copies < joint_copies) {
        throw Error(ErrorCode::InvalidArgument, "block_copies must be at least the joint copy count");
    }
    const int b = budget / block_copies;
    FixedTestConfig cfg{budget, budget - joint_copies * b, joint_copies, b, eps0};
    cfg.validate();
    return cfg;
}

LambdaCalibration calibrate_lht_lambda(const DensityMatrix &null_state, const DensityMatrix &alt_state, int n_joint,
                                       double eps0, int grid_size) {
    check_level(eps0);
    if (null_state.dim() != alt_state.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "null and alternative states differ in dimension");
    }
    const HelstromPencil pencil(tensor_power(null_state.matrix(), n_joint), tensor_power(alt_state.matrix(), n_joint));
    std::optional<LambdaCalibration> best;
    for (double lambda : lambda_grid(grid_size)) {
        const auto [accept_null, accept_alt] = pencil.accept_probabilities(lambda);
        const LambdaCalibration c{lambda, 1.0 - accept_null, 1.0 - accept_alt};
        if (c.size > eps0) {
            continue;
        }
        if (!best || c.power > best->power + kObjectiveTieTolerance) {
            best = c;
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no lambda on the " << grid_size << "-point grid has size <= " << eps0;
        throw Error(ErrorCode::InfeasibleCalibration, msg.str());
    }
    return *best;
}

double binomial_upper_tail(int b, int k, double p) {
    if (k <= 0) {
        return 1.0;
    }
    if (k > b) {
        return 0.0;
    }
    if (p <= 0.0) {
        return 0.0;
    }
    if (p >= 1.0) {
        return 1.0;
    }
    double total = 0.0;
    for (int j = k; j <= b; ++j) {
        const double log_term = std::lgamma(b + 1.0) - std::lgamma(j + 1.0) - std::lgamma(b - j + 1.0) +
                                j * std::log(p) + (b - j) * std::log1p(-p);
        total += std::exp(log_term);
    }
    return std::min(total, 1.0);
}

double block_level(int blocks, double eps0) {
    check_level(eps0);
    if (blocks < 1) {
        throw Error(ErrorCode::InvalidArgument, "block count must be positive");
    }
    if (blocks == 1) {
        return eps0;
    }
    const int k = blocks / 2 + 1;
    double lo = 0.0;  // tail(lo) <= eps0
    double hi = 1.0;  // tail(hi) > eps0
    while (true) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            break;
        }
        if (binomial_upper_tail(blocks, k, mid) <= eps0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

int majority_vote(std::span<const int> votes) {
    std::size_t ones = 0;
    for (int v : votes) {
        ones += v != 0 ? 1 : 0;
    }
    return 2 * ones > votes.size() ? 1 : 0;
}

std::optional<LvtDesign> calibrate_lvt_threshold(const FamilyConfig &family, std::span<const double> null_angles,
                                                 double alt_omega, int n_joint, double eps0, double theta) {
    if (null_angles.empty()) {
        throw Error(ErrorCode::EmptyGrid, "LVT calibration needs at least one null angle");
    }
    const std::vector<double> q = variational_distribution(theta, n_joint, family_matrix(family, alt_omega));
    std::vector<std::vector<double>> nulls;
    nulls.reserve(null_angles.size());
    for (double w : null_angles) {
        nulls.push_back(variational_distribution(theta, n_joint, family_matrix(family, w)));
    }
    const std::size_t outcomes = q.size();
    LvtDesign design;
    design.theta = theta;
    design.glr.assign(outcomes, 0.0);
    for (std::size_t x = 0; x < outcomes; ++x) {
        double sup = 0.0;
        for (const auto &p : nulls) {
            sup = std::max(sup, p[x]);
        }
        if (q[x] <= 0.0) {
            design.glr[x] = 0.0;
        } else if (sup <= 0.0) {
            design.glr[x] = std::numeric_limits<double>::infinity();
        } else {
            design.glr[x] = q[x] / sup;
        }
    }

    std::vector<double> candidates = design.glr;
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (double tau : candidates) {
        double size = 0.0;
        for (const auto &p : nulls) {
            double reject = 0.0;
            for (std::size_t x = 0; x < outcomes; ++x) {
                if (design.glr[x] >= tau) {
                    reject += p[x];
                }
            }
            size = std::max(size, reject);
        }
        if (size <= eps0) {
            double power = 0.0;
            for (std::size_t x = 0; x < outcomes; ++x) {
                if (design.glr[x] >= tau) {
                    power += q[x];
                }
            }
            design.threshold = tau;
            design.size = size;
            design.power = power;
            return design;
        }
    }
    return std::nullopt;
}

LvtDesign design_lvt(const FamilyConfig &family, std::span<const double> null_angles, double alt_omega, int n_joint,
                     double eps0, int grid_size) {
    check_level(eps0);
    std::optional<LvtDesign> best;
    for (double theta : theta_grid(grid_size)) {
        std::optional<LvtDesign> d = calibrate_lvt_threshold(family, null_angles, alt_omega, n_joint, eps0, theta);
        if (d && (!best || d->power > best->power + kObjectiveTieTolerance)) {
            best = std::move(d);
        }
    }
    if (!best) {
        std::ostringstream msg;
        msg << "no theta on the " << grid_size << "-point grid admits a GLR threshold with size <= " << eps0;
        throw Error(ErrorCode::InfeasibleCalibration, msg.str());
    }
    return *best;
}

MleResult estimate_alternative(const FamilyConfig &family, const ParamGrid &alt_grid, int zeros, int total) {
    if (zeros < 0 || zeros > total) {
        throw Error(ErrorCode::InvalidArgument, "zero count outside [0, total]");
    }
    ParamGrid grid = alt_grid;
    const Observation zero = make_observation(1, computational_basis_povm(1).element(0));
    const Observation one = make_observation(1, computational_basis_povm(1).element(1));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double ll = 0.0;
        if (zeros > 0) {
            ll += zeros * observation_log_probability(family, grid.angles[j], zero);
        }
        if (total - zeros > 0) {
            ll += (total - zeros) * observation_log_probability(family, grid.angles[j], one);
        }
        grid.loglik[j] = ll;
    }
    return mle(grid);
}

FixedRunResult run_blht(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                        double omega0, const ParamGrid &alt_grid, RandomStream &rng, int lambda_grid_size) {
    cfg.validate();
    FixedRunResult result;
    result.copies_used = cfg.total_budget;
    result.rounds_used = cfg.estimation_copies + cfg.blocks;
    const int zeros = sample_estimation_phase(truth, cfg.estimation_copies, rng);
    result.alt_estimate = estimate_alternative(family, alt_grid, zeros, cfg.estimation_copies).omega_deg;
    result.block_eps = block_level(cfg.blocks, cfg.eps0);

    const DensityMatrix rho0 = state_from_angle(family, omega0);
    const DensityMatrix rho1 = state_from_angle(family, result.alt_estimate);
    LambdaCalibration cal;
    try {
        cal = calibrate_lht_lambda(rho0, rho1, cfg.joint_copies, result.block_eps, lambda_grid_size);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::InfeasibleCalibration) {
            throw;
        }
        result.calibrated = false;
        result.decision = 0;
        return result;
    }
    result.parameter = cal.lambda;
    const Povm povm = helstrom_povm(HelstromSpec{rho0, rho1, cfg.joint_copies, cal.lambda});
    const std::vector<double> probs = born_probabilities(tensor_power(truth.matrix(), cfg.joint_copies), povm);
    result.votes.reserve(static_cast<std::size_t>(cfg.blocks));
    for (int i = 0; i < cfg.blocks; ++i) {
        result.votes.push_back(static_cast<int>(sample_outcome(probs, rng)));
    }
    result.decision = majority_vote(result.votes);
    return result;
}

FixedRunResult run_lht(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                       double omega0, const ParamGrid &alt_grid, RandomStream &rng, int lambda_grid_size) {
    if (cfg.blocks != 1) {
        throw Error(ErrorCode::InvalidArgument, "LHT performs a single joint measurement");
    }
    return run_blht(cfg, truth, family, omega0, alt_grid, rng, lambda_grid_size);
}

FixedRunResult run_blvt(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                        std::span<const double> null_angles, const ParamGrid &alt_grid, RandomStream &rng,
                        int theta_grid_size) {
    cfg.validate();
    FixedRunResult result;
    result.copies_used = cfg.total_budget;
    result.rounds_used = cfg.estimation_copies + cfg.blocks;
    const int zeros = sample_estimation_phase(truth, cfg.estimation_copies, rng);
    result.alt_estimate = estimate_alternative(family, alt_grid, zeros, cfg.estimation_copies).omega_deg;
    result.block_eps = block_level(cfg.blocks, cfg.eps0);

    LvtDesign design;
    try {
        design = design_lvt(family, null_angles, result.alt_estimate, cfg.joint_copies, result.block_eps,
                            theta_grid_size);
    } catch (const Error &e) {
        if (e.code() != ErrorCode::InfeasibleCalibration) {
            throw;
        }
        result.calibrated = false;
        result.decision = 0;
        return result;
    }
    result.parameter = design.theta;
    const std::vector<double> probs = variational_distribution(design.theta, cfg.joint_copies, truth.matrix());
    result.votes.reserve(static_cast<std::size_t>(cfg.blocks));
    for (int i = 0; i < cfg.blocks; ++i) {
        const std::size_t x = sample_outcome(probs, rng);
        result.votes.push_back(design.glr[x] >= design.threshold ? 1 : 0);
    }
    result.decision = majority_vote(result.votes);
    return result;
}

FixedRunResult run_lvt(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                       std::span<const double> null_angles, const ParamGrid &alt_grid, RandomStream &rng,
                       int theta_grid_size) {
    if (cfg.blocks != 1) {
        throw Error(ErrorCode::InvalidArgument, "LVT performs a single joint measurement");
    }
    return run_blvt(cfg, truth, family, null_angles, alt_grid, rng, theta_grid_size);
}

}  // namespace qsut
