#include "qsut/family.h"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qsut/error.h"

namespace qsut {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kGoldenRatio = 0.6180339887498949;

std::string format_angle(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

bool intervals_overlap(const AngleInterval &a, const AngleInterval &b) {
    const double lo = std::max(a.lo, b.lo);
    const double hi = std::min(a.hi, b.hi);
    if (lo < hi) {
        return true;
    }
    if (lo > hi) {
        return false;
    }
    // Touching at a single angle: overlap only if both sides include it.
    return a.contains(lo) && b.contains(lo);
}

}  // namespace

void FamilyConfig::validate() const {
    const double sup = std::max(r_z * r_z, r_x * r_x);
    if (!std::isfinite(sup) || sup > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "r_z=" << r_z << ", r_x=" << r_x << " gives squared Bloch length up to " << sup;
        throw Error(ErrorCode::InvalidBlochVector, msg.str());
    }
}

Matrix family_matrix(const FamilyConfig &cfg, double omega_deg) {
    const double w = omega_deg * kDegToRad;
    const double c = cfg.r_z * std::cos(w);
    const double s = cfg.r_x * std::sin(w);
    Matrix rho(2, 2);
    rho << Complex(0.5 * (1.0 + c), 0.0), Complex(0.5 * s, 0.0), Complex(0.5 * s, 0.0), Complex(0.5 * (1.0 - c), 0.0);
    return rho;
}

DensityMatrix state_from_angle(const FamilyConfig &cfg, double omega_deg) {
    const double w = omega_deg * kDegToRad;
    const double len2 = std::pow(cfg.r_z * std::cos(w), 2) + std::pow(cfg.r_x * std::sin(w), 2);
    if (!std::isfinite(len2) || len2 > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "squared Bloch length " << len2 << " at omega=" << omega_deg << " deg";
        throw Error(ErrorCode::InvalidBlochVector, msg.str());
    }
    return DensityMatrix::assume_valid(family_matrix(cfg, omega_deg));
}

bool AngleInterval::contains(double omega_deg) const {
    const bool above = lo_closed ? omega_deg >= lo : omega_deg > lo;
    const bool below = hi_closed ? omega_deg <= hi : omega_deg < hi;
    return above && below;
}

std::string AngleInterval::to_string() const {
    return std::string(lo_closed ? "[" : "(") + format_angle(lo) + "," + format_angle(hi) + (hi_closed ? "]" : ")");
}

HypothesisSet::HypothesisSet(std::vector<AngleInterval> intervals, std::vector<double> points)
    : intervals_(std::move(intervals)), points_(std::move(points)) {
    if (empty()) {
        throw Error(ErrorCode::InvalidArgument, "hypothesis set is empty");
    }
    for (const AngleInterval &iv : intervals_) {
        if (!(iv.lo < iv.hi) || iv.lo < 0.0 || iv.hi > 360.0) {
            throw Error(ErrorCode::InvalidArgument, "interval " + iv.to_string() + " must satisfy 0 <= lo < hi <= 360");
        }
    }
    for (double p : points_) {
        if (!(p >= 0.0 && p < 360.0)) {
            throw Error(ErrorCode::InvalidArgument, "point " + format_angle(p) + " outside [0,360)");
        }
    }
    std::sort(intervals_.begin(), intervals_.end(), [](const AngleInterval &a, const AngleInterval &b) {
        return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi);
    });
    std::sort(points_.begin(), points_.end());
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
        for (std::size_t j = i + 1; j < intervals_.size(); ++j) {
            if (intervals_overlap(intervals_[i], intervals_[j])) {
                throw Error(ErrorCode::InvalidArgument,
                            "intervals " + intervals_[i].to_string() + " and " + intervals_[j].to_string() + " overlap");
            }
        }
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (i > 0 && points_[i] == points_[i - 1]) {
            throw Error(ErrorCode::InvalidArgument, "duplicate point " + format_angle(points_[i]));
        }
        for (const AngleInterval &iv : intervals_) {
            if (iv.contains(points_[i])) {
                throw Error(ErrorCode::InvalidArgument,
                            "point " + format_angle(points_[i]) + " lies inside " + iv.to_string());
            }
        }
    }
}

HypothesisSet HypothesisSet::parse(std::string_view text) {
    std::vector<AngleInterval> intervals;
    std::vector<double> points;
    std::size_t pos = 0;

    auto fail = [&](const std::string &why) -> Error {
        std::ostringstream msg;
        msg << "bad hypothesis set \"" << text << "\" at offset " << pos << ": " << why;
        return Error(ErrorCode::ParseError, msg.str());
    };
    auto skip_space = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
    };
    auto read_number = [&]() -> double {
        skip_space();
        const char *begin = text.data() + pos;
        const char *end = text.data() + text.size();
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc() || ptr == begin) {
            throw fail("expected a number");
        }
        pos += static_cast<std::size_t>(ptr - begin);
        skip_space();
        return value;
    };
    auto expect = [&](char c) {
        skip_space();
        if (pos >= text.size() || text[pos] != c) {
            throw fail(std::string("expected '") + c + "'");
        }
        ++pos;
    };

    static constexpr std::string_view kUnionSign = "\xE2\x88\xAA";
    bool want_piece = true;
    skip_space();
    while (pos < text.size()) {
        const char c = text[pos];
        if (!want_piece) {
            if (c == 'U' || c == 'u' || c == '|') {
                ++pos;
            } else if (text.substr(pos, kUnionSign.size()) == kUnionSign) {
                pos += kUnionSign.size();
            } else {
                throw fail("expected a union separator");
            }
            want_piece = true;
            skip_space();
            continue;
        }
        if (c == '(' || c == '[') {
            ++pos;
            AngleInterval iv;
            iv.lo_closed = c == '[';
            iv.lo = read_number();
            expect(',');
            iv.hi = read_number();
            skip_space();
            if (pos >= text.size() || (text[pos] != ')' && text[pos] != ']')) {
                throw fail("expected ')' or ']'");
            }
            iv.hi_closed = text[pos] == ']';
            ++pos;
            intervals.push_back(iv);
        } else if (c == '{') {
            ++pos;
            skip_space();
            if (pos < text.size() && text[pos] == '}') {
                throw fail("empty point set");
            }
            while (true) {
                points.push_back(read_number());
                if (pos < text.size() && text[pos] == ',') {
                    ++pos;
                    continue;
                }
                expect('}');
                break;
            }
        } else {
            points.push_back(read_number());
        }
        want_piece = false;
        skip_space();
    }
    if (want_piece) {
        throw fail("expected an interval or point set");
    }
    try {
        return HypothesisSet(std::move(intervals), std::move(points));
    } catch (const Error &e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

bool HypothesisSet::contains(double omega_deg) const {
    for (const AngleInterval &iv : intervals_) {
        if (iv.contains(omega_deg)) {
            return true;
        }
    }
    return std::find(points_.begin(), points_.end(), omega_deg) != points_.end();
}

bool HypothesisSet::disjoint_from(const HypothesisSet &other) const {
    for (const AngleInterval &a : intervals_) {
        for (const AngleInterval &b : other.intervals_) {
            if (intervals_overlap(a, b)) {
                return false;
            }
        }
    }
    for (double p : points_) {
        if (other.contains(p)) {
            return false;
        }
    }
    for (double p : other.points_) {
        if (contains(p)) {
            return false;
        }
    }
    return true;
}

double HypothesisSet::default_angle() const {
    if (intervals_.empty()) {
        return points_.front();
    }
    const AngleInterval *longest = &intervals_.front();
    for (const AngleInterval &iv : intervals_) {
        if (iv.hi - iv.lo > longest->hi - longest->lo) {
            longest = &iv;
        }
    }
    return 0.5 * (longest->lo + longest->hi);
}

std::string HypothesisSet::to_string() const {
    std::string out;
    for (const AngleInterval &iv : intervals_) {
        if (!out.empty()) {
            out += " U ";
        }
        out += iv.to_string();
    }
    if (!points_.empty()) {
        if (!out.empty()) {
            out += " U ";
        }
        out += "{";
        for (std::size_t i = 0; i < points_.size(); ++i) {
            out += (i ? "," : "") + format_angle(points_[i]);
        }
        out += "}";
    }
    return out;
}

std::size_t ParamGrid::nearest(double omega_deg) const {
    if (angles.empty()) {
        throw Error(ErrorCode::EmptyGrid, "nearest() on an empty grid");
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < angles.size(); ++j) {
        if (std::abs(angles[j] - omega_deg) < std::abs(angles[best] - omega_deg)) {
            best = j;
        }
    }
    return best;
}

ParamGrid build_grid(const HypothesisSet &set, double resolution_deg) {
    if (!(resolution_deg > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "grid resolution must be positive");
    }
    std::vector<std::pair<double, int>> entries;
    const double slack = 1e-9 * resolution_deg;
    for (std::size_t s = 0; s < set.intervals().size(); ++s) {
        const AngleInterval &iv = set.intervals()[s];
        const double start = iv.lo_closed ? iv.lo : iv.lo + resolution_deg;
        double last = -1.0;
        for (long k = 0;; ++k) {
            double a = start + static_cast<double>(k) * resolution_deg;
            if (iv.hi_closed) {
                if (a > iv.hi + slack) {
                    break;
                }
                if (a > iv.hi - slack) {
                    a = iv.hi;
                }
            } else if (a >= iv.hi - slack) {
                break;
            }
            entries.emplace_back(a, static_cast<int>(s));
            last = a;
        }
        if (iv.hi_closed && last != iv.hi && iv.hi >= start - slack) {
            entries.emplace_back(iv.hi, static_cast<int>(s));
        }
    }
    for (double p : set.points()) {
        entries.emplace_back(p, -1);
    }
    if (entries.empty()) {
        throw Error(ErrorCode::EmptyGrid, "resolution " + format_angle(resolution_deg) + " leaves " +
                                              set.to_string() + " without grid points");
    }
    std::sort(entries.begin(), entries.end());
    ParamGrid grid;
    grid.angles.reserve(entries.size());
    grid.segment.reserve(entries.size());
    for (const auto &[angle, segment] : entries) {
        grid.angles.push_back(angle);
        grid.segment.push_back(segment);
    }
    grid.loglik.assign(grid.angles.size(), 0.0);
    return grid;
}

std::vector<double> pauli_weights(int copies, const Matrix &effect) {
    const std::size_t dim = checked_power_dim(2, copies);
    if (static_cast<std::size_t>(effect.rows()) != dim || effect.cols() != effect.rows()) {
        std::ostringstream msg;
        msg << "effect of dimension " << effect.rows() << " measured on " << copies << " qubit copies";
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    const int stride = copies + 1;
    std::vector<double> weights(static_cast<std::size_t>(stride * stride), 0.0);
    // Each qubit carries I, Z or X; enumerate strings in base 3.
    std::size_t strings = 1;
    for (int q = 0; q < copies; ++q) {
        strings *= 3;
    }
    for (std::size_t code = 0; code < strings; ++code) {
        std::size_t zmask = 0;
        std::size_t xmask = 0;
        int a = 0;
        int b = 0;
        std::size_t rest = code;
        for (int q = 0; q < copies; ++q) {
            const std::size_t bit = std::size_t{1} << (copies - 1 - q);
            const std::size_t digit = rest % 3;
            rest /= 3;
            if (digit == 1) {
                zmask |= bit;
                ++a;
            } else if (digit == 2) {
                xmask |= bit;
                ++b;
            }
        }
        // P|j> = (-1)^{|j & zmask|} |j ^ xmask>, so Tr(P E) = sum_j sign(j) E(j, j ^ xmask).
        double tr = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = effect(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j ^ xmask)).real();
            tr += (std::popcount(j & zmask) & 1) ? -v : v;
        }
        weights[static_cast<std::size_t>(a * stride + b)] += tr;
    }
    return weights;
}

Observation make_observation(int copies, Matrix effect) {
    std::vector<double> weights = pauli_weights(copies, effect);
    return Observation{copies, std::move(effect), std::move(weights)};
}

double observation_probability(const FamilyConfig &cfg, double omega_deg, const Observation &obs) {
    if (obs.weights.empty()) {
        const Matrix rho = family_matrix(cfg, omega_deg);
        const Matrix joint = obs.copies == 1 ? rho : tensor_power(rho, obs.copies);
        return std::max(trace_of_product(joint, obs.effect).real(), 0.0);
    }
    const double w = omega_deg * kDegToRad;
    const double z = cfg.r_z * std::cos(w);
    const double x = cfg.r_x * std::sin(w);
    const int n = obs.copies;
    const int stride = n + 1;
    double total = 0.0;
    double za = 1.0;
    for (int a = 0; a <= n; ++a) {
        double xb = 1.0;
        for (int b = 0; a + b <= n; ++b) {
            total += obs.weights[static_cast<std::size_t>(a * stride + b)] * za * xb;
            xb *= x;
        }
        za *= z;
    }
    return std::max(std::ldexp(total, -n), 0.0);
}

double observation_log_probability(const FamilyConfig &cfg, double omega_deg, const Observation &obs) {
    return std::log(std::max(observation_probability(cfg, omega_deg, obs), kProbabilityFloor));
}

double transcript_loglik(const FamilyConfig &cfg, double omega_deg, std::span<const Observation> transcript) {
    double total = 0.0;
    for (const Observation &obs : transcript) {
        total += observation_log_probability(cfg, omega_deg, obs);
    }
    return total;
}

ParamGrid accumulate(ParamGrid grid, const FamilyConfig &cfg, const Observation &obs) {
    const std::size_t expected = checked_power_dim(2, obs.copies);
    if (static_cast<std::size_t>(obs.effect.rows()) != expected || obs.effect.cols() != obs.effect.rows()) {
        std::ostringstream msg;
        msg << "effect of dimension " << obs.effect.rows() << " measured on " << obs.copies << " qubit copies";
        throw Error(ErrorCode::DimensionMismatch, msg.str());
    }
    for (std::size_t j = 0; j < grid.size(); ++j) {
        grid.loglik[j] += observation_log_probability(cfg, grid.angles[j], obs);
    }
    return grid;
}

ParamGrid accumulate(ParamGrid grid, const FamilyConfig &cfg, const Povm &povm, int copies, std::size_t outcome) {
    if (outcome >= povm.size()) {
        throw Error(ErrorCode::InvalidArgument, "outcome index out of range");
    }
    return accumulate(std::move(grid), cfg, make_observation(copies, povm.element(outcome)));
}

MleResult mle(const ParamGrid &grid) {
    if (grid.angles.empty()) {
        throw Error(ErrorCode::EmptyGrid, "MLE over an empty grid");
    }
    const double top = *std::max_element(grid.loglik.begin(), grid.loglik.end());
    const double cut = top - kLoglikTieTolerance * std::max(1.0, std::abs(top));
    std::size_t best = 0;
    while (grid.loglik[best] < cut) {
        ++best;
    }
    return MleResult{grid.angles[best], grid.loglik[best], best};
}

MleResult mle_refined(const ParamGrid &grid, const FamilyConfig &cfg, std::span<const Observation> transcript,
                      std::optional<double> incumbent_deg) {
    const MleResult coarse = mle(grid);
    const std::size_t j = coarse.grid_index;
    auto f = [&](double w) { return transcript_loglik(cfg, w, transcript); };

    MleResult best{coarse.omega_deg, f(coarse.omega_deg), j};

    const bool interior = grid.segment[j] >= 0 && j > 0 && j + 1 < grid.size() &&
                          grid.segment[j - 1] == grid.segment[j] && grid.segment[j + 1] == grid.segment[j];
    if (interior && !transcript.empty()) {
        double a = grid.angles[j - 1];
        double b = grid.angles[j + 1];
        double x1 = b - kGoldenRatio * (b - a);
        double x2 = a + kGoldenRatio * (b - a);
        double f1 = f(x1);
        double f2 = f(x2);
        for (int it = 0; it < 80 && (b - a) > 1e-9; ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + kGoldenRatio * (b - a);
                f2 = f(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - kGoldenRatio * (b - a);
                f1 = f(x1);
            }
        }
        const double x = f1 >= f2 ? x1 : x2;
        const double fx = std::max(f1, f2);
        if (fx > best.loglik) {
            best.omega_deg = x;
            best.loglik = fx;
        }
    }
    if (incumbent_deg) {
        const double fi = f(*incumbent_deg);
        if (fi > best.loglik) {
            best.omega_deg = *incumbent_deg;
            best.loglik = fi;
        }
    }
    return best;
}

}  // namespace qsut
