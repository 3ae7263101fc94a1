#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "kgmix/errors.hpp"

namespace kgmix {

// Dense row-major tensor of 64-bit floats.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)),
          data_(std::accumulate(shape_.begin(), shape_.end(), size_t{1}, std::multiplies<>()),
                fill) {
        if (shape_.empty()) throw ConfigError("Tensor: shape must be non-empty");
    }

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t size() const { return data_.size(); }
    size_t dim(size_t i) const { return shape_.at(i); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double& operator()(size_t i, size_t j) { return data_[i * shape_[1] + j]; }
    double operator()(size_t i, size_t j) const { return data_[i * shape_[1] + j]; }

    double& operator()(size_t i, size_t j, size_t k) {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double operator()(size_t i, size_t j, size_t k) const {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    // Row view of a rank-2 tensor.
    std::span<double> row(size_t i) {
        return std::span<double>(data_.data() + i * shape_[1], shape_[1]);
    }
    std::span<const double> row(size_t i) const {
        return std::span<const double>(data_.data() + i * shape_[1], shape_[1]);
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

namespace tensor_ops {

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) throw ConfigError(std::string(what) + ": shape mismatch");
}

inline Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = a;
    for (size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a;
    for (size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

inline Tensor hadamard(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "hadamard");
    Tensor out = a;
    for (size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
    return out;
}

inline Tensor scale(const Tensor& a, double c) {
    Tensor out = a;
    for (size_t i = 0; i < out.size(); ++i) out[i] *= c;
    return out;
}

inline void axpy(double c, const Tensor& x, Tensor& y) {
    check_same_shape(x, y, "axpy");
    for (size_t i = 0; i < y.size(); ++i) y[i] += c * x[i];
}

inline double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data()) s += v;
    return s;
}

inline double dot(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ConfigError("dot: length mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Contract a rank-3 tensor with a vector along `mode`, producing the
// rank-2 tensor over the remaining modes (in original order).
inline Tensor contract_mode(const Tensor& core, std::span<const double> vec, size_t mode) {
    if (core.rank() != 3) throw ConfigError("contract_mode: rank-3 tensor required");
    if (mode > 2) throw ConfigError("contract_mode: mode out of range");
    if (core.dim(mode) != vec.size()) throw ConfigError("contract_mode: length mismatch");
    const size_t d0 = core.dim(0), d1 = core.dim(1), d2 = core.dim(2);
    if (mode == 0) {
        Tensor out({d1, d2});
        for (size_t i = 0; i < d0; ++i)
            for (size_t j = 0; j < d1; ++j)
                for (size_t k = 0; k < d2; ++k) out(j, k) += core(i, j, k) * vec[i];
        return out;
    }
    if (mode == 1) {
        Tensor out({d0, d2});
        for (size_t i = 0; i < d0; ++i)
            for (size_t j = 0; j < d1; ++j)
                for (size_t k = 0; k < d2; ++k) out(i, k) += core(i, j, k) * vec[j];
        return out;
    }
    Tensor out({d0, d1});
    for (size_t i = 0; i < d0; ++i)
        for (size_t j = 0; j < d1; ++j)
            for (size_t k = 0; k < d2; ++k) out(i, j) += core(i, j, k) * vec[k];
    return out;
}

}  // namespace tensor_ops

}  // namespace kgmix
