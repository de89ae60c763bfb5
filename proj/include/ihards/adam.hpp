#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/layers.hpp"
#include "ihards/tensor.hpp"

namespace ihards::nn {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;  // added outside the square root
};

// First/second-moment buffers, one pair per parameter tensor, plus the
// shared step counter.
template <typename T>
struct AdamState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::uint64_t t = 0;

    static AdamState make(const std::vector<ParamRef<T>>& params) {
        AdamState state;
        state.m.reserve(params.size());
        state.v.reserve(params.size());
        for (const auto& p : params) {
            state.m.emplace_back(p.value->shape);
            state.v.emplace_back(p.value->shape);
        }
        return state;
    }
};

// One bias-corrected Adam update over all parameter tensors:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   delta = -lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <typename T>
inline void adam_step(const std::vector<ParamRef<T>>& params,
                      AdamState<T>& state, const AdamConfig& cfg) {
    if (params.size() != state.m.size()) {
        throw ShapeError("adam_step: state tracks " +
                         std::to_string(state.m.size()) +
                         " tensors, got " + std::to_string(params.size()));
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1,
                                      static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2,
                                      static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (p.grad == nullptr) continue;
        if (p.grad->numel() != p.value->numel() ||
            state.m[i].numel() != p.value->numel()) {
            throw ShapeError("adam_step: shape mismatch on tensor " + p.name);
        }
        Tensor<T>& m = state.m[i];
        Tensor<T>& v = state.v[i];
        for (std::size_t j = 0; j < p.value->numel(); ++j) {
            const double g = static_cast<double>((*p.grad)[j]);
            if (!std::isfinite(g)) {
                throw NumericError("non-finite gradient in tensor " + p.name);
            }
            const double mj =
                cfg.beta1 * static_cast<double>(m[j]) + (1.0 - cfg.beta1) * g;
            const double vj = cfg.beta2 * static_cast<double>(v[j]) +
                              (1.0 - cfg.beta2) * g * g;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            (*p.value)[j] -= static_cast<T>(
                cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon));
        }
    }
}

} // namespace ihards::nn
