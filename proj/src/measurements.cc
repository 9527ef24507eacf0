#include "qsut/measurements.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qsut/error.h"

namespace qsut {

namespace {

void check_joint_states(const DensityMatrix &a, const DensityMatrix &b, int n_joint) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "the two hypothesis states differ in dimension");
    }
    checked_power_dim(a.dim(), n_joint);
}

Matrix ry(double theta) {
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Matrix r(2, 2);
    r << c, -s, s, c;
    return r;
}

/// Basis index after the CNOT chain: bit k becomes the XOR of bits 1..k.
std::size_t cnot_chain_image(std::size_t y, int n) {
    std::size_t x = y;
    for (int q = 0; q + 1 < n; ++q) {
        const int control = n - 1 - q;
        const int target = control - 1;
        if ((x >> control) & 1U) {
            x ^= std::size_t{1} << target;
        }
    }
    return x;
}

}  // namespace

Povm helstrom_povm(const HelstromSpec &spec) {
    if (!(spec.lambda > 0.0 && spec.lambda < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "Helstrom sensitivity must lie in (0, 1)");
    }
    if (spec.n_joint < 1) {
        throw Error(ErrorCode::InvalidArgument, "Helstrom measurement needs n_joint >= 1");
    }
    check_joint_states(spec.rho0_hat, spec.rho1_hat, spec.n_joint);
    const Matrix p = tensor_power(spec.rho0_hat.matrix(), spec.n_joint);
    const Matrix q = tensor_power(spec.rho1_hat.matrix(), spec.n_joint);
    Matrix m0 = positive_eigenprojector((1.0 - spec.lambda) * p - spec.lambda * q);
    Matrix m1 = Matrix::Identity(p.rows(), p.cols()) - m0;
    return Povm::assume_valid({"0", "1"}, {std::move(m0), std::move(m1)});
}

Matrix variational_unitary(const VariationalSpec &spec) {
    const std::size_t dim = checked_power_dim(2, spec.n_joint);
    const Matrix rotations = tensor_power(ry(spec.theta), spec.n_joint);
    Matrix u = Matrix::Zero(rotations.rows(), rotations.cols());
    for (std::size_t y = 0; y < dim; ++y) {
        u.row(static_cast<Eigen::Index>(cnot_chain_image(y, spec.n_joint))) = rotations.row(static_cast<Eigen::Index>(y));
    }
    return u;
}

Povm variational_povm(const VariationalSpec &spec) {
    const Matrix u = variational_unitary(spec);
    const auto dim = u.rows();
    std::vector<std::string> labels;
    std::vector<Matrix> elements;
    labels.reserve(static_cast<std::size_t>(dim));
    elements.reserve(static_cast<std::size_t>(dim));
    for (Eigen::Index x = 0; x < dim; ++x) {
        const Vector v = u.row(x).adjoint();
        elements.push_back(v * v.adjoint());
        labels.push_back(bit_label(static_cast<std::size_t>(x), spec.n_joint));
    }
    return Povm::assume_valid(std::move(labels), std::move(elements));
}

std::vector<double> variational_distribution(double theta, int n_joint, const Matrix &rho) {
    if (rho.rows() != 2 || rho.cols() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "variational_distribution expects a single-qubit state");
    }
    const std::size_t dim = checked_power_dim(2, n_joint);
    const Matrix r = ry(theta);
    const Matrix rotated = r * rho * r.adjoint();
    const double d[2] = {std::max(rotated(0, 0).real(), 0.0), std::max(rotated(1, 1).real(), 0.0)};
    std::vector<double> probs(dim, 0.0);
    for (std::size_t y = 0; y < dim; ++y) {
        double p = 1.0;
        for (int q = 0; q < n_joint; ++q) {
            p *= d[(y >> q) & 1U];
        }
        probs[cnot_chain_image(y, n_joint)] = p;
    }
    return probs;
}

double log_increment(const std::vector<double> &p1, const std::vector<double> &p0) {
    auto clean = [](double p) { return p <= kRoundingZero ? kProbabilityFloor : p; };
    double total = 0.0;
    for (std::size_t x = 0; x < p1.size(); ++x) {
        if (p1[x] > kRoundingZero) {
            total += p1[x] * (std::log(clean(p1[x])) - std::log(clean(p0[x])));
        }
    }
    return total;
}

double expected_log_increment(const DensityMatrix &rho1_hat, const DensityMatrix &rho0_hat, const Povm &povm,
                              int n_joint) {
    check_joint_states(rho0_hat, rho1_hat, n_joint);
    const Matrix q = tensor_power(rho1_hat.matrix(), n_joint);
    const Matrix p = tensor_power(rho0_hat.matrix(), n_joint);
    return log_increment(born_probabilities(q, povm), born_probabilities(p, povm));
}

std::vector<double> lambda_grid(int size) {
    if (size < 2) {
        throw Error(ErrorCode::InvalidArgument, "lambda grid needs at least two points");
    }
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (int k = 1; k <= size; ++k) {
        grid[static_cast<std::size_t>(k - 1)] = static_cast<double>(k) / static_cast<double>(size + 1);
    }
    return grid;
}

std::vector<double> theta_grid(int size) {
    if (size < 2) {
        throw Error(ErrorCode::InvalidArgument, "theta grid needs at least two points");
    }
    std::vector<double> grid(static_cast<std::size_t>(size));
    for (int k = 0; k < size; ++k) {
        grid[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(size);
    }
    return grid;
}

HelstromPencil::HelstromPencil(const Matrix &null_joint, const Matrix &alt_joint) {
    const EigenDecomposition support = hermitian_eig(null_joint + alt_joint);
    const double cutoff = 1e-13 * std::max(1.0, support.values.maxCoeff());
    Eigen::Index rank = 0;
    while (rank < support.values.size() && support.values[rank] > cutoff) {
        ++rank;
    }
    const Matrix basis = support.vectors.leftCols(rank);
    p_ = hermitian_part(basis.adjoint() * null_joint * basis);
    q_ = hermitian_part(basis.adjoint() * alt_joint * basis);
}

std::pair<double, double> HelstromPencil::accept_probabilities(double lambda) const {
    if (p_.rows() == 0) {
        return {0.0, 0.0};
    }
    const EigenDecomposition eig = hermitian_eig((1.0 - lambda) * p_ - lambda * q_);
    double tr_p = 0.0;
    double tr_q = 0.0;
    for (Eigen::Index i = 0; i < eig.values.size() && eig.values[i] > kPositiveEigenTolerance; ++i) {
        const auto w = eig.vectors.col(i);
        tr_p += (w.adjoint() * p_ * w)(0, 0).real();
        tr_q += (w.adjoint() * q_ * w)(0, 0).real();
    }
    return {std::clamp(tr_p, 0.0, 1.0), std::clamp(tr_q, 0.0, 1.0)};
}

double optimize_lambda(const DensityMatrix &rho0_hat, const DensityMatrix &rho1_hat, int n_joint, int grid_size) {
    check_joint_states(rho0_hat, rho1_hat, n_joint);
    const std::vector<double> grid = lambda_grid(grid_size);
    const HelstromPencil pencil(tensor_power(rho0_hat.matrix(), n_joint), tensor_power(rho1_hat.matrix(), n_joint));
    std::vector<double> objective(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto [accept_null, accept_alt] = pencil.accept_probabilities(grid[k]);
        objective[k] = log_increment({accept_alt, 1.0 - accept_alt}, {accept_null, 1.0 - accept_null});
    }
    const double best = *std::max_element(objective.begin(), objective.end());
    std::size_t chosen = grid.size();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (objective[k] < best - kObjectiveTieTolerance) {
            continue;
        }
        if (chosen == grid.size() || std::abs(grid[k] - 0.5) < std::abs(grid[chosen] - 0.5)) {
            chosen = k;
        }
    }
    return grid[chosen];
}

double optimize_theta(const DensityMatrix &rho0_hat, const DensityMatrix &rho1_hat, int n_joint, int grid_size) {
    check_joint_states(rho0_hat, rho1_hat, n_joint);
    const std::vector<double> grid = theta_grid(grid_size);
    if (rho0_hat.dim() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "the variational ansatz acts on qubit copies");
    }
    std::vector<double> objective(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        objective[k] = log_increment(variational_distribution(grid[k], n_joint, rho1_hat.matrix()),
                                     variational_distribution(grid[k], n_joint, rho0_hat.matrix()));
    }
    const double best = *std::max_element(objective.begin(), objective.end());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (objective[k] >= best - kObjectiveTieTolerance) {
            return grid[k];
        }
    }
    return grid.front();
}

}  // namespace qsut
