#pragma once

#include <optional>
#include <span>
#include <vector>

#include "qsut/family.h"
#include "qsut/measurements.h"
#include "qsut/quantum.h"
#include "qsut/random.h"

namespace qsut {

/// Copy accounting for a two-phase fixed-copy test: `estimation_copies`
/// single-copy computational-basis measurements, then `blocks` joint
/// measurements on `joint_copies` copies each.
struct FixedTestConfig {
    int total_budget = 0;
    int estimation_copies = 0;
    int joint_copies = 4;
    int blocks = 1;
    double eps0 = 0.05;

    /// Checks m + b * joint = n, b >= 1, m >= 0 and eps0 in (0, 1).
    void validate() const;
};

/// One joint measurement on `joint` copies, the rest used for estimation.
FixedTestConfig single_block_config(int budget, int joint_copies = 4, double eps0 = 0.05);

/// b = floor(n / block_copies) joint measurements, m = n - joint * b.
FixedTestConfig multi_block_config(int budget, int block_copies = 10, int joint_copies = 4, double eps0 = 0.05);

struct LambdaCalibration {
    double lambda = 0.5;
    /// Exact Tr(rho0^{(x) n} M1).
    double size = 0.0;
    /// Exact Tr(rho1^{(x) n} M1).
    double power = 0.0;
};

/// Among grid values with exact size <= eps0, the lambda of largest exact
/// power (ties toward smaller lambda). Throws InfeasibleCalibration.
LambdaCalibration calibrate_lht_lambda(const DensityMatrix &null_state, const DensityMatrix &alt_state, int n_joint,
                                       double eps0, int grid_size = kDefaultLambdaGrid);

/// P[Bin(b, p) >= k].
double binomial_upper_tail(int b, int k, double p);

/// Largest per-block level whose strict-majority tail over b blocks is at
/// most eps0. Equals eps0 when b = 1.
double block_level(int blocks, double eps0);

/// 1 iff strictly more than half the votes are 1.
int majority_vote(std::span<const int> votes);

/// Variational likelihood-ratio test against a (possibly composite) null.
struct LvtDesign {
    double theta = 0.0;
    /// Reject iff glr[x] >= threshold.
    double threshold = 0.0;
    std::vector<double> glr;
    /// Largest exact rejection probability over the null grid.
    double size = 0.0;
    /// Exact rejection probability under the assumed alternative.
    double power = 0.0;
};

/// For each theta on the grid, calibrates the GLR threshold to the smallest
/// realized value with worst-case size <= eps0 over `null_angles`, then keeps
/// the theta of largest power under rho(alt_omega) (ties toward smaller
/// theta). Throws InfeasibleCalibration when no theta admits a threshold.
LvtDesign design_lvt(const FamilyConfig &family, std::span<const double> null_angles, double alt_omega, int n_joint,
                     double eps0, int grid_size = kDefaultThetaGrid);

/// Fixed threshold calibration for a given theta; nullopt when infeasible.
std::optional<LvtDesign> calibrate_lvt_threshold(const FamilyConfig &family, std::span<const double> null_angles,
                                                 double alt_omega, int n_joint, double eps0, double theta);

struct FixedRunResult {
    /// 1 rejects the null.
    int decision = 0;
    int copies_used = 0;
    int rounds_used = 0;
    double alt_estimate = 0.0;
    /// False when calibration was infeasible and the test always accepts.
    bool calibrated = true;
    /// Helstrom lambda or variational theta.
    double parameter = 0.0;
    /// Per-block level actually used.
    double block_eps = 0.0;
    std::vector<int> votes;
};

/// Grid MLE over `alt_set` from m computational-basis single-copy outcomes,
/// given as the number of "0" outcomes. An empty phase gives the smallest
/// grid angle.
MleResult estimate_alternative(const FamilyConfig &family, const ParamGrid &alt_grid, int zeros, int total);

/// LHT (blocks = 1) and bLHT: Helstrom test of rho(omega0) against the
/// estimated alternative, calibrated per block at block_level(b, eps0).
FixedRunResult run_blht(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                        double omega0, const ParamGrid &alt_grid, RandomStream &rng,
                        int lambda_grid_size = kDefaultLambdaGrid);

FixedRunResult run_lht(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                       double omega0, const ParamGrid &alt_grid, RandomStream &rng,
                       int lambda_grid_size = kDefaultLambdaGrid);

/// LVT (blocks = 1) and bLVT against the null grid angles.
FixedRunResult run_blvt(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                        std::span<const double> null_angles, const ParamGrid &alt_grid, RandomStream &rng,
                        int theta_grid_size = kDefaultThetaGrid);

FixedRunResult run_lvt(const FixedTestConfig &cfg, const DensityMatrix &truth, const FamilyConfig &family,
                       std::span<const double> null_angles, const ParamGrid &alt_grid, RandomStream &rng,
                       int theta_grid_size = kDefaultThetaGrid);

}  // namespace qsut
