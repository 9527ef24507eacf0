#include "qsut/quantum.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qsut/error.h"

namespace qsut {

DensityMatrix DensityMatrix::validate(Matrix m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        std::ostringstream msg;
        msg << "density matrix must be square and nonempty, got " << m.rows() << "x" << m.cols();
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    const double asym = max_abs(m - m.adjoint());
    if (asym > kHermitianTolerance) {
        std::ostringstream msg;
        msg << "max |m_ij - conj(m_ji)| = " << asym;
        throw Error(ErrorCode::NotHermitian, msg.str());
    }
    const double trace_error = std::abs(m.trace() - Complex(1.0, 0.0));
    if (trace_error > kHermitianTolerance) {
        std::ostringstream msg;
        msg << "|Tr - 1| = " << trace_error;
        throw Error(ErrorCode::TraceNotOne, msg.str());
    }
    const double smallest = hermitian_eig(m).values.minCoeff();
    if (smallest < -kHermitianTolerance) {
        std::ostringstream msg;
        msg << "smallest eigenvalue " << smallest;
        throw Error(ErrorCode::NotPSD, msg.str());
    }
    return DensityMatrix(std::move(m));
}

Povm Povm::validate(std::vector<std::string> labels, std::vector<Matrix> elements) {
    if (elements.size() < 2) {
        throw Error(ErrorCode::TooFewOutcomes, "a POVM needs at least two outcomes");
    }
    if (labels.size() != elements.size()) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from element count");
    }
    const auto d = elements.front().rows();
    Matrix total = Matrix::Zero(d, d);
    for (std::size_t x = 0; x < elements.size(); ++x) {
        const Matrix &e = elements[x];
        if (e.rows() != d || e.cols() != d) {
            throw Error(ErrorCode::DimensionMismatch, "POVM element " + labels[x] + " has the wrong shape");
        }
        const double asym = max_abs(e - e.adjoint());
        if (asym > kHermitianTolerance) {
            std::ostringstream msg;
            msg << "POVM element " << labels[x] << ": max asymmetry " << asym;
            throw Error(ErrorCode::NotHermitian, msg.str());
        }
        const double smallest = hermitian_eig(e).values.minCoeff();
        if (smallest < -kHermitianTolerance) {
            std::ostringstream msg;
            msg << "POVM element " << labels[x] << ": smallest eigenvalue " << smallest;
            throw Error(ErrorCode::NotPSD, msg.str());
        }
        total += e;
    }
    const double deviation = max_abs(total - Matrix::Identity(d, d));
    if (deviation > kHermitianTolerance) {
        std::ostringstream msg;
        msg << "elements sum to identity only within " << deviation;
        throw Error(ErrorCode::NotIdentityResolution, msg.str());
    }
    return Povm(std::move(labels), std::move(elements));
}

std::size_t checked_power_dim(std::size_t d, int n, std::size_t cap) {
    if (n < 1) {
        throw Error(ErrorCode::InvalidArgument, "tensor power needs n >= 1");
    }
    std::size_t dim = 1;
    for (int i = 0; i < n; ++i) {
        if (dim > cap / d) {
            std::ostringstream msg;
            msg << d << "^" << n << " exceeds the dimension cap " << cap;
            throw Error(ErrorCode::DimensionOverflow, msg.str());
        }
        dim *= d;
    }
    return dim;
}

Matrix tensor_power(const Matrix &rho, int n) {
    Matrix out = rho;
    for (int i = 1; i < n; ++i) {
        out = kron(out, rho);
    }
    return out;
}

DensityMatrix tensor_power(const DensityMatrix &rho, int n, std::size_t cap) {
    checked_power_dim(rho.dim(), n, cap);
    return DensityMatrix::assume_valid(tensor_power(rho.matrix(), n));
}

std::vector<double> born_probabilities(const Matrix &state, const Povm &povm) {
    if (static_cast<std::size_t>(state.rows()) != povm.dim()) {
        std::ostringstream msg;
        msg << "state dimension " << state.rows() << " vs POVM dimension " << povm.dim();
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    std::vector<double> probs(povm.size());
    for (std::size_t x = 0; x < povm.size(); ++x) {
        double p = trace_of_product(state, povm.element(x)).real();
        if (p < -kNegativeProbabilitySlack || p > 1.0 + kNegativeProbabilitySlack) {
            std::ostringstream msg;
            msg << "Born probability " << p << " for outcome " << povm.label(x) << " is outside [0, 1]";
            throw Error(ErrorCode::NotPSD, msg.str());
        }
        probs[x] = std::clamp(p, 0.0, 1.0);
    }
    return probs;
}

OutcomeDistribution born_distribution(const DensityMatrix &rho, const Povm &povm) {
    return OutcomeDistribution{povm.labels(), born_probabilities(rho.matrix(), povm)};
}

std::size_t sample_outcome(const std::vector<double> &probs, RandomStream &rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t x = 0; x < probs.size(); ++x) {
        if (probs[x] > 0.0) {
            last_positive = x;
        }
        cumulative += probs[x];
        if (u < cumulative) {
            return x;
        }
    }
    // Only reachable when the probabilities sum to slightly below 1.
    return last_positive;
}

std::string bit_label(std::size_t x, int n_qubits) {
    std::string label(static_cast<std::size_t>(n_qubits), '0');
    for (int q = 0; q < n_qubits; ++q) {
        if ((x >> (n_qubits - 1 - q)) & 1U) {
            label[static_cast<std::size_t>(q)] = '1';
        }
    }
    return label;
}

Povm computational_basis_povm(int n_qubits) {
    const std::size_t dim = checked_power_dim(2, n_qubits);
    std::vector<std::string> labels;
    std::vector<Matrix> elements;
    labels.reserve(dim);
    elements.reserve(dim);
    for (std::size_t x = 0; x < dim; ++x) {
        Matrix e = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        e(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)) = 1.0;
        labels.push_back(bit_label(x, n_qubits));
        elements.push_back(std::move(e));
    }
    return Povm::assume_valid(std::move(labels), std::move(elements));
}

Povm sic_povm_qubit() {
    const double s = std::sqrt(2.0) / 3.0;
    const double t = std::sqrt(2.0 / 3.0);
    const double bloch[4][3] = {
        {0.0, 0.0, 1.0},
        {2.0 * s, 0.0, -1.0 / 3.0},
        {-s, t, -1.0 / 3.0},
        {-s, -t, -1.0 / 3.0},
    };
    std::vector<std::string> labels;
    std::vector<Matrix> elements;
    for (int k = 0; k < 4; ++k) {
        const double x = bloch[k][0], y = bloch[k][1], z = bloch[k][2];
        Matrix e(2, 2);
        e << Complex(1.0 + z, 0.0), Complex(x, -y), Complex(x, y), Complex(1.0 - z, 0.0);
        elements.push_back(e * 0.25);
        labels.push_back("s" + std::to_string(k));
    }
    return Povm::assume_valid(std::move(labels), std::move(elements));
}

}  // namespace qsut
