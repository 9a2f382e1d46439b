#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gencs/errors.hpp"

namespace gencs {

/// Dense row-major real tensor. Rank 1 holds signals/measurements/latents,
/// rank 2 holds operator and weight matrices.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_numel(shape_) != data_.size()) {
            throw DimensionError("tensor: shape " + shape_string(shape_) + " needs " +
                                 std::to_string(checked_numel(shape_)) + " values, got " +
                                 std::to_string(data_.size()));
        }
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor vector(std::vector<double> v) {
        const std::size_t n = v.size();
        return Tensor({n}, std::move(v));
    }

    static Tensor zeros(std::size_t n) { return Tensor({n}); }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
        return Tensor({rows, cols}, std::move(v));
    }

    static Tensor identity(std::size_t n) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
        return t;
    }

    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    double squared_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return s;
    }
    double norm() const { return std::sqrt(squared_norm()); }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    static std::string shape_string(const std::vector<std::size_t>& shape) {
        std::ostringstream os;
        os << "(";
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
        os << ")";
        return os.str();
    }
    std::string shape_string() const { return shape_string(shape_); }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (std::size_t s : shape) {
            if (s == 0) throw ParameterError("tensor: zero-sized dimension in shape " + shape_string(shape));
            n *= s;
        }
        return shape.empty() ? 0 : n;
    }

    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// Signals x, measurements y and latents z are all plain dense vectors.
using Signal = Tensor;
using Measurement = Tensor;
using Latent = Tensor;

inline void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) throw NumericError(std::string(what) + ": non-finite value produced");
}

inline void require_vector(const Tensor& t, const char* what) {
    if (t.rank() != 1) throw DimensionError(std::string(what) + ": expected a vector, got shape " + t.shape_string());
}

inline void require_matrix(const Tensor& t, const char* what) {
    if (t.rank() != 2) throw DimensionError(std::string(what) + ": expected a matrix, got shape " + t.shape_string());
}

/// y[i] = sum_j A(i,j) x[j], accumulated in index order. Several equivalence
/// tests rely on this exact summation order, so keep it canonical.
inline Tensor matvec(const Tensor& A, const Tensor& x) {
    require_matrix(A, "matvec");
    require_vector(x, "matvec");
    if (A.cols() != x.numel()) {
        throw DimensionError("matvec: A is " + A.shape_string() + ", x is " + x.shape_string());
    }
    Tensor y({A.rows()});
    for (std::size_t i = 0; i < A.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j) acc += A(i, j) * x[j];
        y[i] = acc;
    }
    require_finite(y, "matvec");
    return y;
}

/// r[j] = sum_i A(i,j) v[i], inner loop over rows (canonical order, see matvec).
inline Tensor matvec_t(const Tensor& A, const Tensor& v) {
    require_matrix(A, "matvec_t");
    require_vector(v, "matvec_t");
    if (A.rows() != v.numel()) {
        throw DimensionError("matvec_t: A is " + A.shape_string() + ", v is " + v.shape_string());
    }
    Tensor r({A.cols()});
    for (std::size_t j = 0; j < A.cols(); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < A.rows(); ++i) acc += A(i, j) * v[i];
        r[j] = acc;
    }
    require_finite(r, "matvec_t");
    return r;
}

inline Tensor matmul(const Tensor& A, const Tensor& B) {
    require_matrix(A, "matmul");
    require_matrix(B, "matmul");
    if (A.cols() != B.rows()) {
        throw DimensionError("matmul: A is " + A.shape_string() + ", B is " + B.shape_string());
    }
    Tensor C({A.rows(), B.cols()});
    for (std::size_t i = 0; i < A.rows(); ++i) {
        for (std::size_t k = 0; k < A.cols(); ++k) {
            const double a = A(i, k);
            if (a == 0.0) continue;
            for (std::size_t j = 0; j < B.cols(); ++j) C(i, j) += a * B(k, j);
        }
    }
    require_finite(C, "matmul");
    return C;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(what) + ": shapes " + a.shape_string() + " and " +
                             b.shape_string() + " differ");
    }
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += b[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= b[i];
    return out;
}

inline Tensor scale(const Tensor& a, double c) {
    Tensor out = a;
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
    return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
    return s;
}

inline Tensor concat(const Tensor& a, const Tensor& b) {
    require_vector(a, "concat");
    require_vector(b, "concat");
    std::vector<double> v;
    v.reserve(a.numel() + b.numel());
    v.insert(v.end(), a.data().begin(), a.data().end());
    v.insert(v.end(), b.data().begin(), b.data().end());
    return Tensor::vector(std::move(v));
}

} // namespace gencs
