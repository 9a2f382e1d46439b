#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "gencs/errors.hpp"
#include "gencs/recovery.hpp"
#include "gencs/sensing.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

/// |x_hat - x_te|^2 / d, the per-pixel reporting convention.
inline double per_pixel_error(const Tensor& x_hat, const Tensor& x_te) {
    require_vector(x_hat, "per_pixel_error");
    require_vector(x_te, "per_pixel_error");
    if (!x_hat.same_shape(x_te)) {
        throw DimensionError("per_pixel_error: shapes " + x_hat.shape_string() + " and " +
                             x_te.shape_string() + " differ");
    }
    return sub(x_hat, x_te).squared_norm() / static_cast<double>(x_te.numel());
}

struct ConfidenceInterval {
    double mean = 0.0;
    double halfwidth = 0.0;
};

/// Student-t interval: mean +- t_{(1+level)/2, n-1} * sd / sqrt(n).
inline ConfidenceInterval confidence_interval(std::span<const double> values,
                                              double level = 0.95) {
    const std::size_t n = values.size();
    if (n < 2) throw ParameterError("confidence_interval: need at least 2 values");
    if (!(level > 0.0 && level < 1.0)) {
        throw ParameterError("confidence_interval: level must be in (0,1)");
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    const double t = boost::math::quantile(dist, 0.5 * (1.0 + level));
    return {mean, t * sd / std::sqrt(static_cast<double>(n))};
}

struct PresenceStats {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> per_signal;
};

/// Fraction of n_z latent draws landing within eps of each test signal
/// (per-pixel squared error by default; total squared error when per_pixel is
/// false), aggregated as mean +- stddev over the test set. Conditional
/// generators are fed y = A x_te. Draws for signal i come from rng.split(i),
/// so marginal and conditional evaluations at the same master stream use
/// matched seeds.
template <GeneratorModel G>
PresenceStats presence_probability(const G& g, std::span<const Tensor> test_set,
                                   const SensingMatrix& S, double eps, int n_z, RngStream& rng,
                                   bool per_pixel = true) {
    if (!(eps > 0.0)) throw ParameterError("presence_probability: eps must be > 0");
    if (n_z < 1) throw ParameterError("presence_probability: n_z must be >= 1");
    const bool conditional = g.cond_dim() > 0;
    if (conditional && g.cond_dim() != static_cast<int>(S.m)) {
        throw ContractError("presence_probability: generator cond_dim != m");
    }
    PresenceStats stats;
    stats.per_signal.reserve(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) {
        const Tensor& x_te = test_set[i];
        Measurement y;
        if (conditional) y = matvec(S.A, x_te);
        RngStream zs = rng.split(i);
        int hits = 0;
        for (int k = 0; k < n_z; ++k) {
            const Tensor z = gaussian(zs, {static_cast<std::size_t>(g.latent_dim())});
            const Tensor sample = g.forward(z, conditional ? &y : nullptr);
            double err = sub(sample, x_te).squared_norm();
            if (per_pixel) err /= static_cast<double>(x_te.numel());
            if (err < eps) ++hits;
        }
        stats.per_signal.push_back(static_cast<double>(hits) / n_z);
    }
    double mean = 0.0;
    for (double p : stats.per_signal) mean += p;
    mean /= static_cast<double>(stats.per_signal.size());
    double ss = 0.0;
    for (double p : stats.per_signal) ss += (p - mean) * (p - mean);
    stats.mean = mean;
    stats.stddev = std::sqrt(ss / static_cast<double>(stats.per_signal.size()));
    return stats;
}

/// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
/// Ties are excluded by the caller.
inline double sign_test_p(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    if (wins == 0) return 1.0;
    const boost::math::binomial_distribution<double> dist(n, 0.5);
    // P(X >= wins) = 1 - CDF(wins - 1)
    return 1.0 - boost::math::cdf(dist, wins - 1);
}

} // namespace gencs
