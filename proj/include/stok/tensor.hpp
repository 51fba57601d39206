#pragma once

#include <algorithm>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "stok/common.hpp"

namespace stok {

// Dense row-major tensor of doubles. All numeric state in the project
// (parameters, activations, gradients, EMA statistics) lives in these.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<index_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0) {}
    Tensor(std::vector<index_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        STOK_CHECK(static_cast<index_t>(data_.size()) == checked_numel(shape_),
                   "tensor data size does not match shape");
    }

    static Tensor zeros(std::vector<index_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<index_t> shape, double v) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), v);
        return t;
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor from(std::vector<index_t> shape, std::initializer_list<double> v) {
        return Tensor(std::move(shape), std::vector<double>(v));
    }
    static Tensor randn(std::vector<index_t> shape, Rng& rng, double stddev = 1.0) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) x = rng.normal(0.0, stddev);
        return t;
    }
    static Tensor rand_uniform(std::vector<index_t> shape, Rng& rng, double lo, double hi) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) x = rng.uniform(lo, hi);
        return t;
    }

    const std::vector<index_t>& shape() const { return shape_; }
    index_t ndim() const { return static_cast<index_t>(shape_.size()); }
    index_t dim(index_t i) const {
        STOK_CHECK(i >= 0 && i < ndim(), "dim index out of range");
        return shape_[static_cast<size_t>(i)];
    }
    index_t numel() const { return static_cast<index_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* ptr() { return data_.data(); }
    const double* ptr() const { return data_.data(); }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double& operator[](index_t i) { return data_[static_cast<size_t>(i)]; }
    double operator[](index_t i) const { return data_[static_cast<size_t>(i)]; }

    // 2-D accessors (row-major).
    double& at(index_t r, index_t c) { return data_[static_cast<size_t>(r * shape_[1] + c)]; }
    double at(index_t r, index_t c) const { return data_[static_cast<size_t>(r * shape_[1] + c)]; }

    Tensor reshaped(std::vector<index_t> shape) const {
        Tensor t(std::move(shape), data_);
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    static index_t checked_numel(const std::vector<index_t>& shape) {
        index_t n = 1;
        for (index_t d : shape) {
            STOK_CHECK(d >= 0, "negative tensor dimension");
            n *= d;
        }
        return n;
    }

    std::vector<index_t> shape_;
    std::vector<double> data_;
};

inline std::string shape_str(const std::vector<index_t>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s[i]);
        if (i + 1 < s.size()) out += ",";
    }
    return out + ")";
}

}  // namespace stok
