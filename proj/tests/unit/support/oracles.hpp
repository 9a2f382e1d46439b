// Test-side reference implementations, written independently of the library
// code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "gencs/tensor.hpp"

namespace oracle {

/// Central finite differences of a scalar function at x.
inline std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double fp = f(x);
        x[i] = saved - h;
        const double fm = f(x);
        x[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Relative error with a unit floor, elementwise max.
inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

/// Plain-loop iterative hard thresholding: x <- h_s(x - alpha A^T (A x - y)).
/// Summation order matches the canonical convention (row dot products, then
/// column accumulation with the row index innermost).
inline std::vector<double> iht(const std::vector<double>& A_rowmajor, int m, int d,
                               const std::vector<double>& y, double alpha, int s, int iters) {
    std::vector<double> x(d, 0.0);
    std::vector<double> r(m), g(d), w(d);
    for (int t = 0; t < iters; ++t) {
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d; ++j) acc += A_rowmajor[i * d + j] * x[j];
            r[i] = acc - y[i];
        }
        for (int j = 0; j < d; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += A_rowmajor[i * d + j] * r[i];
            g[j] = acc;
        }
        for (int j = 0; j < d; ++j) w[j] = x[j] - alpha * g[j];
        // keep the s largest magnitudes, lower index first on ties
        std::vector<int> idx(d);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int a, int b) {
            const double ma = std::abs(w[a]), mb = std::abs(w[b]);
            if (ma != mb) return ma > mb;
            return a < b;
        });
        std::fill(x.begin(), x.end(), 0.0);
        for (int k = 0; k < s; ++k) x[idx[k]] = w[idx[k]];
    }
    return x;
}

/// Best s-sparse approximation by exhaustive search over all supports.
inline std::vector<double> brute_force_sparse_projection(const std::vector<double>& v, int s) {
    const int d = static_cast<int>(v.size());
    std::vector<int> comb(s);
    std::iota(comb.begin(), comb.end(), 0);
    std::vector<double> best;
    double best_dist = std::numeric_limits<double>::infinity();
    auto eval = [&]() {
        double dist = 0.0;
        std::vector<double> cand(d, 0.0);
        for (int i : comb) cand[i] = v[i];
        for (int i = 0; i < d; ++i) dist += (v[i] - cand[i]) * (v[i] - cand[i]);
        if (dist < best_dist) {
            best_dist = dist;
            best = cand;
        }
    };
    if (s == 0) return std::vector<double>(d, 0.0);
    for (;;) {
        eval();
        int i = s - 1;
        while (i >= 0 && comb[i] == d - s + i) --i;
        if (i < 0) break;
        ++comb[i];
        for (int k = i + 1; k < s; ++k) comb[k] = comb[k - 1] + 1;
    }
    return best;
}

/// Smallest/largest singular values of the Gram matrix route: eigenvalues of
/// M^T M by cyclic Jacobi, then square roots. Independent of the library's
/// one-sided Jacobi on M itself.
inline std::pair<double, double> gram_extreme_singular_values(const gencs::Tensor& M) {
    const std::size_t n = M.cols();
    std::vector<std::vector<double>> G(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < M.rows(); ++k) acc += M(k, i) * M(k, j);
            G[i][j] = acc;
        }
    }
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += G[p][q] * G[p][q];
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(G[p][q]) < 1e-18) continue;
                const double theta = 0.5 * std::atan2(2.0 * G[p][q], G[q][q] - G[p][p]);
                const double c = std::cos(theta), s = std::sin(theta);
                for (std::size_t k = 0; k < n; ++k) {
                    const double gkp = G[k][p], gkq = G[k][q];
                    G[k][p] = c * gkp - s * gkq;
                    G[k][q] = s * gkp + c * gkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double gpk = G[p][k], gqk = G[q][k];
                    G[p][k] = c * gpk - s * gqk;
                    G[q][k] = s * gpk + c * gqk;
                }
            }
        }
    }
    double lo = G[0][0], hi = G[0][0];
    for (std::size_t i = 1; i < n; ++i) {
        lo = std::min(lo, G[i][i]);
        hi = std::max(hi, G[i][i]);
    }
    return {std::sqrt(std::max(0.0, lo)), std::sqrt(std::max(0.0, hi))};
}

} // namespace oracle
