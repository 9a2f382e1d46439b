#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "gencs/errors.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

/// Counter-based pseudorandom stream. Output i of a stream is
/// splitmix64_mix(key + (i+1)*GAMMA), with key derived by mixing
/// (master_seed, stream_index); identical (seed, index) pairs therefore
/// replay the identical sequence, and distinct indices give independent
/// streams without coordination. Normal variates use Box-Muller over
/// consecutive 53-bit uniforms (the spare variate is cached).
class RngStream {
public:
    explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_index = 0)
        : master_seed_(master_seed), stream_index_(stream_index) {
        key_ = mix(master_seed + GAMMA * mix(stream_index + GAMMA));
    }

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * GAMMA); }

    /// Uniform on [0, 1): 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller. ln argument kept in (0, 1].
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

    /// Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    /// Independent child stream; children of distinct indices do not overlap.
    RngStream split(std::uint64_t child_index) const { return RngStream(key_, child_index); }

private:
    static constexpr std::uint64_t GAMMA = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t master_seed_ = 0;
    std::uint64_t stream_index_ = 0;
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Stable 64-bit stream index from a string label (FNV-1a).
inline std::uint64_t stream_label(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// i.i.d. normal tensor; deterministic given the stream state.
inline Tensor gaussian(RngStream& rng, std::vector<std::size_t> shape, double mean = 0.0,
                       double std = 1.0) {
    if (!(std > 0.0)) {
        throw ParameterError("gaussian: std must be > 0, got " + std::to_string(std));
    }
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(mean, std);
    require_finite(t, "gaussian");
    return t;
}

} // namespace gencs
