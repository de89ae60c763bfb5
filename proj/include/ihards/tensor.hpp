#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "ihards/errors.hpp"

namespace ihards::nn {

// Dense row-major tensor. Training runs in float; the finite-difference
// harness instantiates the same layers in double.
template <typename T>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<T> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims)
        : shape(std::move(dims)),
          data(std::accumulate(shape.begin(), shape.end(),
                               static_cast<std::size_t>(1),
                               std::multiplies<>()),
               T{}) {}
    Tensor(std::initializer_list<std::size_t> dims)
        : Tensor(std::vector<std::size_t>(dims)) {}

    std::size_t rank() const { return shape.size(); }
    std::size_t numel() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    T* begin() { return data.data(); }
    T* end() { return data.data() + data.size(); }
    const T* begin() const { return data.data(); }
    const T* end() const { return data.data() + data.size(); }

    T& operator[](std::size_t i) { return data[i]; }
    const T& operator[](std::size_t i) const { return data[i]; }

    T& at2(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
    const T& at2(std::size_t i, std::size_t j) const {
        return data[i * shape[1] + j];
    }
    T& at3(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * shape[1] + j) * shape[2] + k];
    }
    const T& at3(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * shape[1] + j) * shape[2] + k];
    }

    void fill(T value) { data.assign(data.size(), value); }

    void require_rank(std::size_t r, const std::string& context) const {
        if (rank() != r) {
            throw ShapeError(context + ": expected rank " + std::to_string(r) +
                             " tensor, got rank " + std::to_string(rank()));
        }
    }

    bool all_finite() const {
        for (const T& v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    std::string shape_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
};

template <typename T>
inline Tensor<T> reshape(const Tensor<T>& t, std::vector<std::size_t> dims) {
    Tensor<T> out;
    out.shape = std::move(dims);
    std::size_t n = 1;
    for (std::size_t d : out.shape) n *= d;
    if (n != t.numel()) {
        throw ShapeError("reshape: element count mismatch (" +
                         std::to_string(t.numel()) + " vs " +
                         std::to_string(n) + ")");
    }
    out.data = t.data;
    return out;
}

} // namespace ihards::nn
