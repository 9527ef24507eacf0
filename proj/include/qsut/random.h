#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qsut {

/// Seeded stream used for every random draw in a run. mt19937_64 output is
/// fixed by the standard, and the uniform conversions below are done by hand
/// so results do not depend on the standard library's distributions.
class RandomStream {
   public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {
    }

    std::uint64_t next_u64() {
        return engine_();
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on the open interval (0, 1).
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

   private:
    std::mt19937_64 engine_;
};

/// Deterministic seed for a sub-stream, mixing the master seed with a path of
/// coordinates (method id, budget, run index, ...) through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace qsut
