#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace qsut {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kPositiveEigenTolerance = 1e-10;

/// Eigenpairs of a Hermitian matrix, eigenvalues sorted descending and the
/// matching orthonormal eigenvectors stored as columns.
struct EigenDecomposition {
    RealVector values;
    Matrix vectors;
};

/// Largest entry magnitude, i.e. the entrywise infinity norm.
double max_abs(const Matrix &m);

/// (m + m^dagger) / 2.
Matrix hermitian_part(const Matrix &m);

bool is_hermitian(const Matrix &m, double tol = kHermitianTolerance);

/// Symmetrizes first, so inputs carrying floating-point drift are accepted.
/// Throws DimensionMismatch for non-square input, ConvergenceFailure if the
/// solver does not converge.
EigenDecomposition hermitian_eig(const Matrix &m);

/// Sum of v v^dagger over eigenpairs with eigenvalue strictly above tol.
Matrix positive_eigenprojector(const Matrix &m, double tol = kPositiveEigenTolerance);

/// Sum of absolute eigenvalues.
double trace_norm(const Matrix &m);

Matrix kron(const Matrix &a, const Matrix &b);

/// Tr(a b) without forming the product.
Complex trace_of_product(const Matrix &a, const Matrix &b);

}  // namespace qsut
