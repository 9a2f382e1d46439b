#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gencs/errors.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

/// Singular values of M (rows >= cols) by one-sided Jacobi: plane rotations
/// orthogonalize column pairs until every inner product is negligible, after
/// which the column norms are the singular values. Accurate and dependency-free
/// for the small submatrices used here.
inline std::vector<double> singular_values(const Tensor& M, double tol = 1e-12,
                                           int max_sweeps = 100) {
    require_matrix(M, "singular_values");
    const std::size_t rows = M.rows(), cols = M.cols();
    if (rows < cols) {
        throw ParameterError("singular_values: need rows >= cols, got " + M.shape_string());
    }
    // Column-major working copy.
    std::vector<std::vector<double>> c(cols, std::vector<double>(rows));
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) c[j][i] = M(i, j);

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < cols; ++p) {
            for (std::size_t q = p + 1; q < cols; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < rows; ++i) {
                    app += c[p][i] * c[p][i];
                    aqq += c[q][i] * c[q][i];
                    apq += c[p][i] * c[q][i];
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < rows; ++i) {
                    const double vp = c[p][i], vq = c[q][i];
                    c[p][i] = cs * vp - sn * vq;
                    c[q][i] = sn * vp + cs * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> sv(cols);
    for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < rows; ++i) s += c[j][i] * c[j][i];
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end(), std::greater<>());
    return sv;
}

} // namespace gencs
