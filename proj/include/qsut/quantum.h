#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qsut/linalg.h"
#include "qsut/random.h"

namespace qsut {

/// Largest Hilbert-space dimension any tensor power or joint POVM may reach.
inline constexpr std::size_t kDimensionCap = std::size_t{1} << 12;

/// Probabilities below this are replaced by it before taking logarithms.
inline constexpr double kProbabilityFloor = 1e-300;

/// Born probabilities down to this value are clamped to zero; anything more
/// negative is reported as an error.
inline constexpr double kNegativeProbabilitySlack = 1e-12;

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
class DensityMatrix {
   public:
    /// Checks all three invariants within 1e-10.
    static DensityMatrix validate(Matrix m);

    /// Skips validation. For states built by construction (tensor powers of
    /// validated states, closed-form families).
    static DensityMatrix assume_valid(Matrix m) {
        return DensityMatrix(std::move(m));
    }

    const Matrix &matrix() const {
        return m_;
    }
    std::size_t dim() const {
        return static_cast<std::size_t>(m_.rows());
    }

   private:
    explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
    }
    Matrix m_;
};

inline DensityMatrix validate_density(Matrix m) {
    return DensityMatrix::validate(std::move(m));
}

/// A finite labeled measurement {M_x}: PSD elements resolving the identity.
class Povm {
   public:
    /// Checks every element is Hermitian and PSD, that they sum to the
    /// identity entrywise within 1e-10, and that there are >= 2 outcomes.
    static Povm validate(std::vector<std::string> labels, std::vector<Matrix> elements);

    static Povm assume_valid(std::vector<std::string> labels, std::vector<Matrix> elements) {
        return Povm(std::move(labels), std::move(elements));
    }

    std::size_t dim() const {
        return elements_.empty() ? 0 : static_cast<std::size_t>(elements_.front().rows());
    }
    std::size_t size() const {
        return elements_.size();
    }
    const std::vector<std::string> &labels() const {
        return labels_;
    }
    const std::vector<Matrix> &elements() const {
        return elements_;
    }
    const Matrix &element(std::size_t x) const {
        return elements_.at(x);
    }
    const std::string &label(std::size_t x) const {
        return labels_.at(x);
    }

   private:
    Povm(std::vector<std::string> labels, std::vector<Matrix> elements)
        : labels_(std::move(labels)), elements_(std::move(elements)) {
    }
    std::vector<std::string> labels_;
    std::vector<Matrix> elements_;
};

struct OutcomeDistribution {
    std::vector<std::string> labels;
    std::vector<double> probs;
};

/// Dimension d^n, or DimensionOverflow past `cap`.
std::size_t checked_power_dim(std::size_t d, int n, std::size_t cap = kDimensionCap);

/// rho^{(x) n} on raw matrices; callers guarantee the dimension is in range.
Matrix tensor_power(const Matrix &rho, int n);

DensityMatrix tensor_power(const DensityMatrix &rho, int n, std::size_t cap = kDimensionCap);

/// Tr(state M_x) for every outcome, clamped to [0, 1]. Throws
/// DimensionMismatch, or NotPSD when a probability is below -1e-12.
std::vector<double> born_probabilities(const Matrix &state, const Povm &povm);

OutcomeDistribution born_distribution(const DensityMatrix &rho, const Povm &povm);

/// Index of the drawn outcome. One uniform draw per call.
std::size_t sample_outcome(const std::vector<double> &probs, RandomStream &rng);

inline std::size_t sample_outcome(const OutcomeDistribution &dist, RandomStream &rng) {
    return sample_outcome(dist.probs, rng);
}

/// n-bit string for basis index x, qubit 1 as the most significant bit.
std::string bit_label(std::size_t x, int n_qubits);

/// {|x><x|} over n qubits, labels "00..0" to "11..1".
Povm computational_basis_povm(int n_qubits);

/// The tetrahedral qubit SIC-POVM, elements (I + n_k . sigma) / 4.
Povm sic_povm_qubit();

}  // namespace qsut
