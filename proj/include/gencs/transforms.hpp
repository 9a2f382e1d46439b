#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gencs/errors.hpp"
#include "gencs/rng.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

enum class TransformKind { identity, haar, explicit_matrix };

inline const char* transform_kind_name(TransformKind k) {
    switch (k) {
    case TransformKind::identity: return "identity";
    case TransformKind::haar: return "haar";
    case TransformKind::explicit_matrix: return "explicit";
    }
    return "?";
}

/// Unitary sparsifying transform. forward() computes analysis coefficients
/// U^T x, inverse() synthesizes U c; both preserve the l2 norm.
class UnitaryTransform {
public:
    static UnitaryTransform identity(std::size_t d) {
        UnitaryTransform u;
        u.kind_ = TransformKind::identity;
        u.d_ = d;
        return u;
    }

    /// Orthonormal multilevel Haar transform; d must be a power of two.
    static UnitaryTransform haar(std::size_t d) {
        if (d == 0 || (d & (d - 1)) != 0) {
            throw ParameterError("haar transform: dimension " + std::to_string(d) +
                                 " is not a power of 2");
        }
        UnitaryTransform u;
        u.kind_ = TransformKind::haar;
        u.d_ = d;
        return u;
    }

    /// Wraps an explicit orthogonal matrix; validated to 1e-10 in Frobenius norm.
    static UnitaryTransform explicit_matrix(Tensor U) {
        require_matrix(U, "explicit transform");
        if (U.rows() != U.cols()) {
            throw ParameterError("explicit transform: matrix must be square, got " +
                                 U.shape_string());
        }
        const std::size_t d = U.rows();
        double frob2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                double g = 0.0;
                for (std::size_t k = 0; k < d; ++k) g += U(k, i) * U(k, j);
                const double target = i == j ? 1.0 : 0.0;
                frob2 += (g - target) * (g - target);
            }
        }
        if (std::sqrt(frob2) > 1e-10) {
            throw ParameterError("explicit transform: matrix is not unitary (|U^T U - I|_F = " +
                                 std::to_string(std::sqrt(frob2)) + ")");
        }
        UnitaryTransform u;
        u.kind_ = TransformKind::explicit_matrix;
        u.d_ = d;
        u.matrix_ = std::move(U);
        return u;
    }

    TransformKind kind() const { return kind_; }
    std::size_t dim() const { return d_; }

    /// Analysis: c = U^T x.
    Tensor forward(const Tensor& x) const {
        check_input(x);
        switch (kind_) {
        case TransformKind::identity: return x;
        case TransformKind::haar: return haar_analysis(x);
        case TransformKind::explicit_matrix: return matvec_t(matrix_, x);
        }
        throw ContractError("transform: bad kind");
    }

    /// Synthesis: x = U c.
    Tensor inverse(const Tensor& c) const {
        check_input(c);
        switch (kind_) {
        case TransformKind::identity: return c;
        case TransformKind::haar: return haar_synthesis(c);
        case TransformKind::explicit_matrix: return matvec(matrix_, c);
        }
        throw ContractError("transform: bad kind");
    }

    /// Materialize U (columns are synthesized basis vectors).
    Tensor matrix() const {
        if (kind_ == TransformKind::explicit_matrix) return matrix_;
        Tensor U({d_, d_});
        for (std::size_t j = 0; j < d_; ++j) {
            Tensor e({d_});
            e[j] = 1.0;
            Tensor col = inverse(e);
            for (std::size_t i = 0; i < d_; ++i) U(i, j) = col[i];
        }
        return U;
    }

private:
    void check_input(const Tensor& x) const {
        require_vector(x, "transform");
        if (x.numel() != d_) {
            throw DimensionError("transform: expected length " + std::to_string(d_) + ", got " +
                                 x.shape_string());
        }
    }

    // Coefficient layout per level: [approximation..., detail...], recursing on
    // the approximation half down to length 1.
    Tensor haar_analysis(const Tensor& x) const {
        Tensor v = x;
        static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (std::size_t n = d_; n > 1; n /= 2) {
            std::vector<double> tmp(n);
            for (std::size_t i = 0; i < n / 2; ++i) {
                tmp[i] = (v[2 * i] + v[2 * i + 1]) * inv_sqrt2;
                tmp[n / 2 + i] = (v[2 * i] - v[2 * i + 1]) * inv_sqrt2;
            }
            for (std::size_t i = 0; i < n; ++i) v[i] = tmp[i];
        }
        return v;
    }

    Tensor haar_synthesis(const Tensor& c) const {
        Tensor v = c;
        static const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        for (std::size_t n = 2; n <= d_; n *= 2) {
            std::vector<double> tmp(n);
            for (std::size_t i = 0; i < n / 2; ++i) {
                tmp[2 * i] = (v[i] + v[n / 2 + i]) * inv_sqrt2;
                tmp[2 * i + 1] = (v[i] - v[n / 2 + i]) * inv_sqrt2;
            }
            for (std::size_t i = 0; i < n; ++i) v[i] = tmp[i];
        }
        return v;
    }

    TransformKind kind_ = TransformKind::identity;
    std::size_t d_ = 0;
    Tensor matrix_;
};

/// Keep the s entries of largest magnitude (ties broken toward the lower
/// index), zero the rest. This is the Euclidean projection onto s-sparse
/// vectors.
inline Tensor hard_threshold(const Tensor& v, std::size_t s) {
    require_vector(v, "hard_threshold");
    const std::size_t d = v.numel();
    if (s > d) {
        throw ParameterError("hard_threshold: s=" + std::to_string(s) + " exceeds d=" +
                             std::to_string(d));
    }
    if (s == d) return v;
    Tensor out({d});
    if (s == 0) return out;
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double ma = std::abs(v[a]), mb = std::abs(v[b]);
        if (ma != mb) return ma > mb;
        return a < b;
    });
    for (std::size_t k = 0; k < s; ++k) out[idx[k]] = v[idx[k]];
    return out;
}

/// x -> U h_s(U^T x): best approximation of x that is s-sparse in the U domain.
inline Tensor sparsify(const UnitaryTransform& U, const Tensor& x, std::size_t s) {
    return U.inverse(hard_threshold(U.forward(x), s));
}

/// Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix
/// (re-orthogonalized once; diagonal kept positive for determinism).
inline Tensor random_orthogonal(std::size_t d, RngStream& rng) {
    Tensor G = gaussian(rng, {d, d});
    Tensor Q({d, d});
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col(d);
        for (std::size_t i = 0; i < d; ++i) col[i] = G(i, j);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < j; ++k) {
                double proj = 0.0;
                for (std::size_t i = 0; i < d; ++i) proj += Q(i, k) * col[i];
                for (std::size_t i = 0; i < d; ++i) col[i] -= proj * Q(i, k);
            }
        }
        double nrm = 0.0;
        for (double c : col) nrm += c * c;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-12) throw NumericError("random_orthogonal: rank deficiency");
        const double sign = col[j] >= 0.0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < d; ++i) Q(i, j) = sign * col[i] / nrm;
    }
    return Q;
}

} // namespace gencs
