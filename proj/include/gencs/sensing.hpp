#pragma once

#include <cmath>
#include <cstdint>

#include "gencs/errors.hpp"
#include "gencs/rng.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

/// m x d Gaussian sensing operator, entries i.i.d. N(0, 1/m). The seed is kept
/// so checkpoints can store it instead of the full matrix.
struct SensingMatrix {
    Tensor A;
    std::size_t m = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;

    /// m > d is allowed but atypical for compressed sensing.
    bool atypical() const { return m > d; }
};

struct NoiseModel {
    enum class Kind { none, gaussian };
    Kind kind = Kind::none;
    double std = 0.0;

    static NoiseModel none() { return {Kind::none, 0.0}; }
    static NoiseModel gaussian_noise(double std) {
        if (!(std >= 0.0)) throw ParameterError("noise: std must be >= 0");
        return {Kind::gaussian, std};
    }
};

inline SensingMatrix sample_sensing(std::size_t m, std::size_t d, RngStream& rng) {
    if (m == 0 || d == 0) {
        throw ParameterError("sample_sensing: m and d must be positive, got m=" +
                             std::to_string(m) + " d=" + std::to_string(d));
    }
    SensingMatrix s;
    s.m = m;
    s.d = d;
    s.seed = rng.master_seed();
    s.A = gaussian(rng, {m, d}, 0.0, 1.0 / std::sqrt(static_cast<double>(m)));
    return s;
}

/// Deterministic reconstruction of a sensing matrix from (seed, m, d).
inline SensingMatrix sensing_from_seed(std::uint64_t seed, std::size_t m, std::size_t d) {
    RngStream rng(seed, stream_label("sensing"));
    SensingMatrix s = sample_sensing(m, d, rng);
    s.seed = seed;
    return s;
}

/// y = A x + noise. With NoiseModel::none the result equals matvec(A, x) exactly.
inline Measurement measure(const SensingMatrix& s, const Signal& x, const NoiseModel& noise,
                           RngStream& rng) {
    require_vector(x, "measure");
    if (x.numel() != s.d) {
        throw DimensionError("measure: A is " + s.A.shape_string() + ", x is " + x.shape_string());
    }
    Measurement y = matvec(s.A, x);
    if (noise.kind == NoiseModel::Kind::gaussian && noise.std > 0.0) {
        for (std::size_t i = 0; i < y.numel(); ++i) y[i] += rng.normal(0.0, noise.std);
    }
    return y;
}

inline Measurement measure(const SensingMatrix& s, const Signal& x) {
    RngStream unused(0);
    return measure(s, x, NoiseModel::none(), unused);
}

} // namespace gencs
