#include "qsut/linalg.h"

#include <sstream>

#include "qsut/error.h"

namespace qsut {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotHermitian: return "NotHermitian";
        case ErrorCode::TraceNotOne: return "TraceNotOne";
        case ErrorCode::NotPSD: return "NotPSD";
        case ErrorCode::NotIdentityResolution: return "NotIdentityResolution";
        case ErrorCode::TooFewOutcomes: return "TooFewOutcomes";
        case ErrorCode::DimensionOverflow: return "DimensionOverflow";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
        case ErrorCode::InvalidBlochVector: return "InvalidBlochVector";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::InconsistentTranscript: return "InconsistentTranscript";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::InfeasibleCalibration: return "InfeasibleCalibration";
        case ErrorCode::HorizonTooLarge: return "HorizonTooLarge";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string &message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {
}

double max_abs(const Matrix &m) {
    if (m.size() == 0) {
        return 0.0;
    }
    return m.cwiseAbs().maxCoeff();
}

Matrix hermitian_part(const Matrix &m) {
    return (m + m.adjoint()) * 0.5;
}

bool is_hermitian(const Matrix &m, double tol) {
    return m.rows() == m.cols() && max_abs(m - m.adjoint()) <= tol;
}

EigenDecomposition hermitian_eig(const Matrix &m) {
    if (m.rows() != m.cols()) {
        std::ostringstream msg;
        msg << "eigendecomposition needs a square matrix, got " << m.rows() << "x" << m.cols();
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    EigenDecomposition out;
    if (m.rows() == 0) {
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(m));
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigensolver did not converge");
    }
    // Eigen returns ascending order.
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

Matrix positive_eigenprojector(const Matrix &m, double tol) {
    const EigenDecomposition eig = hermitian_eig(m);
    Matrix projector = Matrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values[i] > tol) {
            projector.noalias() += eig.vectors.col(i) * eig.vectors.col(i).adjoint();
        }
    }
    return projector;
}

double trace_norm(const Matrix &m) {
    const EigenDecomposition eig = hermitian_eig(m);
    return eig.values.cwiseAbs().sum();
}

Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Complex trace_of_product(const Matrix &a, const Matrix &b) {
    // Tr(AB) = sum_ij A_ij B_ji
    return a.cwiseProduct(b.transpose()).sum();
}

}  // namespace qsut
