#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qsut/linalg.h"
#include "qsut/quantum.h"

namespace qsut {

inline constexpr double kDefaultResolutionDeg = 0.5;

/// Single-qubit family rho(w) = 1/2 [[1 + r_z cos w, r_x sin w], [r_x sin w, 1 - r_z cos w]].
struct FamilyConfig {
    double r_z = 1.0;
    double r_x = 1.0;

    /// r_z^2 cos^2 w + r_x^2 sin^2 w <= 1 for every w; the supremum over w is
    /// max(r_z^2, r_x^2). Throws InvalidBlochVector.
    void validate() const;
};

/// The family member as a raw 2x2 matrix; no validity check.
Matrix family_matrix(const FamilyConfig &cfg, double omega_deg);

/// Throws InvalidBlochVector when the Bloch vector at omega leaves the ball.
DensityMatrix state_from_angle(const FamilyConfig &cfg, double omega_deg);

struct AngleInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = true;

    bool contains(double omega_deg) const;
    std::string to_string() const;
};

/// A region of the angle parameter (degrees): a union of disjoint intervals
/// and isolated points.
class HypothesisSet {
   public:
    HypothesisSet() = default;

    /// Throws InvalidArgument for an empty set, reversed or out-of-range
    /// intervals, or overlapping pieces.
    HypothesisSet(std::vector<AngleInterval> intervals, std::vector<double> points);

    /// Accepts "(45,180]", "{45,135}", "45" and unions of those joined by
    /// "U", "|" or the union sign. Throws ParseError.
    static HypothesisSet parse(std::string_view text);

    static HypothesisSet point(double omega_deg) {
        return HypothesisSet({}, {omega_deg});
    }

    const std::vector<AngleInterval> &intervals() const {
        return intervals_;
    }
    const std::vector<double> &points() const {
        return points_;
    }
    bool empty() const {
        return intervals_.empty() && points_.empty();
    }
    bool is_single_point() const {
        return intervals_.empty() && points_.size() == 1;
    }

    bool contains(double omega_deg) const;
    bool disjoint_from(const HypothesisSet &other) const;

    /// Midpoint of the longest interval, or the smallest point when there are
    /// no intervals.
    double default_angle() const;

    std::string to_string() const;

   private:
    std::vector<AngleInterval> intervals_;
    std::vector<double> points_;
};

/// Running log-likelihoods over a discretized hypothesis set.
struct ParamGrid {
    std::vector<double> angles;
    std::vector<double> loglik;
    /// Index of the interval each angle came from, -1 for isolated points.
    std::vector<int> segment;

    std::size_t size() const {
        return angles.size();
    }
    /// Grid angle closest to omega (ties toward the smaller angle).
    std::size_t nearest(double omega_deg) const;
};

/// Every interval sampled at `resolution_deg` spacing, open endpoints
/// shifted in by one step, closed endpoints included exactly, plus all
/// isolated points. Throws EmptyGrid.
ParamGrid build_grid(const HypothesisSet &set, double resolution_deg = kDefaultResolutionDeg);

/// One measured round: the realized POVM element and how many copies it acted on.
///
/// `weights` optionally caches the effect's expansion in the family's Pauli
/// components: weights[a * (copies + 1) + b] sums Tr(P E) over Pauli strings P
/// with a factors Z, b factors X and the rest I. Then
///   Tr(rho(w)^{(x) n} E) = 2^-n sum_{a,b} weights[a,b] (r_z cos w)^a (r_x sin w)^b.
/// Empty weights fall back to the dense trace.
struct Observation {
    int copies = 1;
    Matrix effect;
    std::vector<double> weights;
};

/// Builds an observation with its Pauli weights filled in.
Observation make_observation(int copies, Matrix effect);

std::vector<double> pauli_weights(int copies, const Matrix &effect);

/// Tr(rho(w)^{(x) n} E), clamped at zero.
double observation_probability(const FamilyConfig &cfg, double omega_deg, const Observation &obs);

/// log max(p, floor) for the probability above.
double observation_log_probability(const FamilyConfig &cfg, double omega_deg, const Observation &obs);

/// Continuous log-likelihood of a transcript at omega.
double transcript_loglik(const FamilyConfig &cfg, double omega_deg, std::span<const Observation> transcript);

/// Adds log max(Tr(rho(w_j)^{(x) n} E), floor) to every grid entry. Takes
/// the grid by value; pass an rvalue to update in place.
ParamGrid accumulate(ParamGrid grid, const FamilyConfig &cfg, const Observation &obs);

ParamGrid accumulate(ParamGrid grid, const FamilyConfig &cfg, const Povm &povm, int copies, std::size_t outcome);

struct MleResult {
    double omega_deg = 0.0;
    double loglik = 0.0;
    std::size_t grid_index = 0;
};

/// Log-likelihoods within this relative distance of the maximum are tied.
/// Symmetric sets produce exact ties that rounding would otherwise break
/// arbitrarily.
inline constexpr double kLoglikTieTolerance = 1e-12;

/// Grid arg-max, ties toward the smallest angle.
MleResult mle(const ParamGrid &grid);

/// Grid arg-max followed, when the maximizer is interior to an interval, by
/// a golden-section search of the continuous log-likelihood over the two
/// adjacent grid cells. `incumbent`, if given, is a previously reported
/// estimate that is kept unless beaten, which makes successive refined
/// estimates dominate one another. The returned loglik is the continuous one.
MleResult mle_refined(const ParamGrid &grid, const FamilyConfig &cfg, std::span<const Observation> transcript,
                      std::optional<double> incumbent_deg = std::nullopt);

}  // namespace qsut
