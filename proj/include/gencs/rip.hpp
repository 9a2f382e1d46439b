#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gencs/errors.hpp"
#include "gencs/svd.hpp"
#include "gencs/tensor.hpp"
#include "gencs/trace.hpp"
#include "gencs/transforms.hpp"

namespace gencs {

/// Family of candidate supports (index subsets), deduplicated, each of size
/// at most max_size.
struct SupportFamily {
    std::set<std::vector<int>> supports;
    std::size_t max_size = 0;

    static SupportFamily from_supports(std::vector<std::vector<int>> list, std::size_t max_size) {
        SupportFamily f;
        f.max_size = max_size;
        for (auto& s : list) {
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            if (s.size() > max_size) {
                throw ParameterError("support family: support of size " + std::to_string(s.size()) +
                                     " exceeds max " + std::to_string(max_size));
            }
            f.supports.insert(std::move(s));
        }
        return f;
    }

    std::size_t size() const { return supports.size(); }
};

/// Which inequality check_rip applies to the submatrix singular values:
/// definition1 bounds sigma by [1-gamma, 1+gamma]; squared bounds sigma^2
/// instead, which is the form the convergence analysis consumes.
enum class RipConvention { definition1, squared };

struct RipReport {
    struct Entry {
        std::vector<int> support;
        double sigma_min = 0.0;
        double sigma_max = 0.0;
    };
    double gamma = 0.0;
    RipConvention convention = RipConvention::definition1;
    std::vector<Entry> per_support;
    bool pass = false;
    std::vector<int> worst_support;
    double worst_violation = 0.0; // > 0 means a bound was exceeded
};

/// Extreme singular values of the column submatrix M[:, support].
inline std::pair<double, double> extreme_singular_values(const Tensor& M,
                                                         const std::vector<int>& support) {
    require_matrix(M, "extreme_singular_values");
    if (support.empty()) {
        throw ParameterError("extreme_singular_values: empty support");
    }
    const std::size_t m = M.rows(), d = M.cols();
    if (support.size() > std::min(m, d)) {
        throw ParameterError("extreme_singular_values: support size " +
                             std::to_string(support.size()) + " exceeds min(m,d)=" +
                             std::to_string(std::min(m, d)));
    }
    Tensor sub({m, support.size()});
    for (std::size_t j = 0; j < support.size(); ++j) {
        const int col = support[j];
        if (col < 0 || static_cast<std::size_t>(col) >= d) {
            throw ParameterError("extreme_singular_values: column index " + std::to_string(col) +
                                 " out of range for " + M.shape_string());
        }
        for (std::size_t i = 0; i < m; ++i) sub(i, j) = M(i, col);
    }
    const std::vector<double> sv = singular_values(sub);
    return {sv.back(), sv.front()};
}

inline RipReport check_rip(const Tensor& M, const SupportFamily& family, double gamma,
                           RipConvention convention = RipConvention::definition1) {
    if (!(gamma > 0.0)) throw ParameterError("check_rip: gamma must be > 0");
    RipReport report;
    report.gamma = gamma;
    report.convention = convention;
    report.pass = true;
    for (const auto& support : family.supports) {
        if (support.empty()) throw ParameterError("check_rip: empty support in family");
        auto [smin, smax] = extreme_singular_values(M, support);
        report.per_support.push_back({support, smin, smax});
        const double lo = convention == RipConvention::definition1 ? smin : smin * smin;
        const double hi = convention == RipConvention::definition1 ? smax : smax * smax;
        const double violation = std::max(hi - (1.0 + gamma), (1.0 - gamma) - lo);
        if (violation > report.worst_violation || report.worst_support.empty()) {
            report.worst_violation = violation;
            report.worst_support = support;
        }
        if (violation > 0.0) report.pass = false;
    }
    return report;
}

/// Difference supports of thresholded transform coefficients along a recovery
/// trace: supp(h_s(U^T x_t) - h_s(U^T x_te)) and
/// supp(h_s(U^T x_{t+1}) - h_s(U^T x_t)) for t = 0..T-1. Empty differences are
/// dropped (a converged step contributes no support).
inline SupportFamily support_family_from_trace(const RecoveryTrace& trace,
                                               const UnitaryTransform& U, std::size_t s) {
    if (trace.iterates.size() < 2) {
        throw ContractError("support_family_from_trace: trace does not retain iterates");
    }
    if (!trace.target.has_value()) {
        throw ContractError("support_family_from_trace: trace does not retain the target signal");
    }
    const Tensor target_coeff = hard_threshold(U.forward(*trace.target), s);
    std::vector<Tensor> coeffs;
    coeffs.reserve(trace.iterates.size());
    for (const Tensor& x : trace.iterates) coeffs.push_back(hard_threshold(U.forward(x), s));

    auto diff_support = [](const Tensor& a, const Tensor& b) {
        std::vector<int> sup;
        for (std::size_t i = 0; i < a.numel(); ++i) {
            if (a[i] != b[i]) sup.push_back(static_cast<int>(i));
        }
        return sup;
    };

    std::vector<std::vector<int>> list;
    for (std::size_t t = 0; t + 1 < coeffs.size(); ++t) {
        auto g1 = diff_support(coeffs[t], target_coeff);
        auto g2 = diff_support(coeffs[t + 1], coeffs[t]);
        if (!g1.empty()) list.push_back(std::move(g1));
        if (!g2.empty()) list.push_back(std::move(g2));
    }
    return SupportFamily::from_supports(std::move(list), 2 * s);
}

/// Smallest m with m >= 2(s + ln(4T/tau)) / (sqrt(1+gamma)-1)^2 and m >= 2s.
inline int theorem2_min_m(int s, int T, double tau, double gamma) {
    if (s < 1) throw ParameterError("theorem2_min_m: s must be >= 1");
    if (T < 1) throw ParameterError("theorem2_min_m: T must be >= 1");
    if (!(tau > 0.0 && tau < 1.0)) throw ParameterError("theorem2_min_m: tau must be in (0,1)");
    if (!(gamma > 0.0)) throw ParameterError("theorem2_min_m: gamma must be > 0");
    const double denom = std::sqrt(1.0 + gamma) - 1.0;
    const double bound = 2.0 * (s + std::log(4.0 * T / tau)) / (denom * denom);
    const long long m = std::max<long long>(static_cast<long long>(std::ceil(bound)), 2LL * s);
    return static_cast<int>(m);
}

} // namespace gencs
