#pragma once

#include <cmath>
#include <cstdint>

namespace rsinv {

/**
 * Counter-based random streams (Philox4x32-10). A draw is a pure function of
 * (seed, path, step), so per-path streams are random-access, collision-free,
 * and identical whether paths run serially or on any number of threads.
 */
namespace rng {

struct Block {
    std::uint32_t x[4];
};

inline Block philox4x32(std::uint64_t key, std::uint64_t ctr_hi, std::uint64_t ctr_lo) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    std::uint32_t x0 = static_cast<std::uint32_t>(ctr_lo);
    std::uint32_t x1 = static_cast<std::uint32_t>(ctr_lo >> 32);
    std::uint32_t x2 = static_cast<std::uint32_t>(ctr_hi);
    std::uint32_t x3 = static_cast<std::uint32_t>(ctr_hi >> 32);

    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = 0xD2511F53ULL * x0;
        const std::uint64_t p1 = 0xCD9E8D57ULL * x2;
        const std::uint32_t y0 = static_cast<std::uint32_t>(p1 >> 32) ^ x1 ^ k0;
        const std::uint32_t y1 = static_cast<std::uint32_t>(p1);
        const std::uint32_t y2 = static_cast<std::uint32_t>(p0 >> 32) ^ x3 ^ k1;
        const std::uint32_t y3 = static_cast<std::uint32_t>(p0);
        x0 = y0;
        x1 = y1;
        x2 = y2;
        x3 = y3;
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return Block{{x0, x1, x2, x3}};
}

/// Uniform in the open interval (0, 1).
inline double u01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

struct NormalPair {
    double z1;
    double z2;
};

/// Two independent standard normals (Box-Muller on one Philox block).
inline NormalPair normal_pair(std::uint64_t seed, std::uint64_t path, std::uint64_t step) {
    const Block b = philox4x32(seed, path, step);
    const std::uint64_t w1 =
        static_cast<std::uint64_t>(b.x[0]) | (static_cast<std::uint64_t>(b.x[1]) << 32);
    const std::uint64_t w2 =
        static_cast<std::uint64_t>(b.x[2]) | (static_cast<std::uint64_t>(b.x[3]) << 32);
    const double radius = std::sqrt(-2.0 * std::log(u01(w1)));
    const double angle = 6.283185307179586476925286766559 * u01(w2);
    return NormalPair{radius * std::cos(angle), radius * std::sin(angle)};
}

/// Sequential view of one path's stream.
class PathStream {
public:
    PathStream(std::uint64_t seed, std::uint64_t path) : seed_(seed), path_(path) {}

    NormalPair next() { return normal_pair(seed_, path_, step_++); }

    /// Uniform draw in [lo, hi) consuming one counter slot.
    double uniform(double lo, double hi) {
        const Block b = philox4x32(seed_, path_, step_++);
        const std::uint64_t w =
            static_cast<std::uint64_t>(b.x[0]) | (static_cast<std::uint64_t>(b.x[1]) << 32);
        return lo + (hi - lo) * u01(w);
    }

private:
    std::uint64_t seed_;
    std::uint64_t path_;
    std::uint64_t step_ = 0;
};

} // namespace rng
} // namespace rsinv
