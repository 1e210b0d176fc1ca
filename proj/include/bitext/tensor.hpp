#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bitext/rng.hpp"

namespace bitext {

struct TensorError : std::runtime_error {
    explicit TensorError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major tensor of 64-bit floats. Treated as immutable once handed
// to the graph; mutation is only done while constructing a value.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0) {}
    Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<size_t>(numel_of(shape)) != data.size())
            throw TensorError("tensor: shape/data size mismatch");
    }

    static int64_t numel_of(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 1) throw TensorError("tensor: dimension must be >= 1");
            n *= d;
        }
        return n;
    }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int ndim() const { return static_cast<int>(shape.size()); }
    bool is_scalar() const { return numel() == 1; }

    int rows() const { return shape.at(0); }
    int cols() const { return ndim() == 1 ? 1 : shape.at(1); }

    double& at(int i) { return data[static_cast<size_t>(i)]; }
    double at(int i) const { return data[static_cast<size_t>(i)]; }
    double& at(int i, int j) { return data[static_cast<size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * shape[1] + j]; }

    double scalar() const {
        if (!is_scalar()) throw TensorError("tensor: expected scalar, got " + shape_str());
        return data[0];
    }

    std::string shape_str() const {
        std::string s = "[";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int> s, double v) {
        Tensor t(std::move(s));
        for (double& x : t.data) x = v;
        return t;
    }

    static Tensor scalar_of(double v) { return Tensor({1}, {v}); }

    static Tensor uniform(std::vector<int> s, double lo, double hi, Rng& rng) {
        Tensor t(std::move(s));
        for (double& x : t.data) x = rng.uniform(lo, hi);
        return t;
    }

    static Tensor gaussian(std::vector<int> s, double mean, double stddev, Rng& rng) {
        Tensor t(std::move(s));
        for (double& x : t.data) x = rng.normal(mean, stddev);
        return t;
    }
};

inline bool all_finite(const Tensor& t) {
    for (double x : t.data)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace bitext
