#pragma once

#include <utility>
#include <vector>

#include "qsut/linalg.h"
#include "qsut/quantum.h"

namespace qsut {

inline constexpr int kDefaultLambdaGrid = 99;
inline constexpr int kDefaultThetaGrid = 360;

/// Objective values within this of the best count as ties.
inline constexpr double kObjectiveTieTolerance = 1e-12;

struct HelstromSpec {
    DensityMatrix rho0_hat;
    DensityMatrix rho1_hat;
    int n_joint = 1;
    double lambda = 0.5;
};

struct VariationalSpec {
    double theta = 0.0;  // radians, shared by every R_Y
    int n_joint = 1;
};

/// Binary POVM {M0, I - M0}, M0 the projector onto the positive eigenspace
/// of (1 - lambda) rho0^{(x)n} - lambda rho1^{(x)n}. Outcome "1" rejects H0.
Povm helstrom_povm(const HelstromSpec &spec);

/// U(theta) = CNOT(n-1 -> n) ... CNOT(1 -> 2) * R_Y(theta)^{(x)n}, qubit 1 the
/// most significant bit.
Matrix variational_unitary(const VariationalSpec &spec);

/// {U^dagger |x><x| U} over all n-bit strings x.
Povm variational_povm(const VariationalSpec &spec);

/// Outcome distribution of variational_povm on rho^{(x)n} for a single-qubit
/// rho. Uses the product structure of rho^{(x)n} and the fact that the CNOT
/// chain only permutes basis states, so it costs O(n 2^n).
std::vector<double> variational_distribution(double theta, int n_joint, const Matrix &rho);

/// Probabilities at or below this are rounding noise around an exact zero
/// and are treated as zero by the design objective.
inline constexpr double kRoundingZero = 1e-14;

/// Sum_x p1(x) [log max(p1(x), floor) - log max(p0(x), floor)], with
/// probabilities up to kRoundingZero counted as zero.
double log_increment(const std::vector<double> &p1, const std::vector<double> &p0);

/// Exact expected log-increment of the SLR under rho1_hat for one round of
/// `povm` on n_joint copies.
double expected_log_increment(const DensityMatrix &rho1_hat, const DensityMatrix &rho0_hat, const Povm &povm,
                              int n_joint);

/// k / (size + 1) for k = 1..size; 99 points give 0.01..0.99.
std::vector<double> lambda_grid(int size = kDefaultLambdaGrid);

/// 2 pi k / size for k = 0..size-1.
std::vector<double> theta_grid(int size = kDefaultThetaGrid);

/// Helstrom construction restricted to the joint support of the two states.
/// Outside supp(P) + supp(Q) the weighted difference vanishes, so its
/// positive eigenspace lives inside that support; the eigenproblem per
/// lambda shrinks accordingly (to 2x2 for pure states).
class HelstromPencil {
   public:
    HelstromPencil(const Matrix &null_joint, const Matrix &alt_joint);

    /// (Tr(P M0(lambda)), Tr(Q M0(lambda))).
    std::pair<double, double> accept_probabilities(double lambda) const;

   private:
    Matrix p_;
    Matrix q_;
};

/// Arg-max over lambda_grid(grid_size) of the expected log-increment of the
/// Helstrom POVM; ties toward lambda closest to 0.5, then the smaller one.
double optimize_lambda(const DensityMatrix &rho0_hat, const DensityMatrix &rho1_hat, int n_joint,
                       int grid_size = kDefaultLambdaGrid);

/// Arg-max over theta_grid(grid_size) of the expected log-increment of the
/// variational POVM; ties toward the smaller theta.
double optimize_theta(const DensityMatrix &rho0_hat, const DensityMatrix &rho1_hat, int n_joint,
                      int grid_size = kDefaultThetaGrid);

}  // namespace qsut
