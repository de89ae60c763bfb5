#pragma once

// Finite-difference gradient verification, shared between the unit suite and
// the acceptance runner. All checks run layers instantiated over double with
// central differences at h = 1e-5; analytic gradients must agree to a
// relative tolerance of 1e-4 (absolute floor for near-zero entries).
//
// Layers are rebuilt from a deterministic factory for every loss evaluation
// so stochastic layers (dropout) and stateful ones (batch norm) see the
// exact same internal draws on each probe.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ihards/arch.hpp"
#include "ihards/loss.hpp"
#include "ihards/network.hpp"
#include "ihards/rng.hpp"
#include "ihards/tensor.hpp"

namespace fdcheck {

struct FdResult {
    std::size_t checks = 0;       // individual d(loss)/d(element) probes
    double worst_rel = 0.0;
    std::string worst_at;
    bool ok = true;
};

inline void record(FdResult& res, double numeric, double analytic,
                   double tol, const std::string& where) {
    ++res.checks;
    const double scale =
        std::max({std::abs(numeric), std::abs(analytic), 1e-2});
    const double rel = std::abs(numeric - analytic) / scale;
    if (rel > res.worst_rel) {
        res.worst_rel = rel;
        res.worst_at = where;
    }
    if (rel > tol) res.ok = false;
}

inline constexpr double kStep = 1e-5;
inline constexpr double kTol = 1e-4;

// ---------------------------------------------------------------------------
// Single-layer check. `make` must return the same layer (same parameter
// values, same RNG state) every time it is called.
// ---------------------------------------------------------------------------

template <typename MakeLayer>
FdResult check_layer(MakeLayer&& make, std::vector<std::size_t> in_shape,
                     std::uint64_t seed, double h = kStep,
                     double tol = kTol) {
    using ihards::SeededRng;
    using ihards::nn::Tensor;

    SeededRng rng(seed);
    Tensor<double> x(in_shape);
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);

    // Probe output shape, then fix random loss weights.
    Tensor<double> probe = make()->forward(x, true);
    Tensor<double> w(probe.shape);
    for (double& v : w.data) v = rng.uniform(-1.0, 1.0);

    const auto loss_of = [&](const Tensor<double>& input,
                             std::size_t param_idx, std::size_t elem,
                             double delta) {
        auto layer = make();
        if (delta != 0.0) {
            auto params = layer->parameters();
            params[param_idx].value->data[elem] += delta;
        }
        const Tensor<double> out = layer->forward(input, true);
        double s = 0.0;
        for (std::size_t i = 0; i < out.numel(); ++i) {
            s += w.data[i] * out.data[i];
        }
        return s;
    };

    // Analytic pass.
    auto layer = make();
    (void)layer->forward(x, true);
    const Tensor<double> grad_in = layer->backward(w);
    auto params = layer->parameters();

    FdResult res;

    for (std::size_t i = 0; i < x.numel(); ++i) {
        Tensor<double> xp = x, xm = x;
        xp.data[i] += h;
        xm.data[i] -= h;
        const double numeric =
            (loss_of(xp, 0, 0, 0.0) - loss_of(xm, 0, 0, 0.0)) / (2.0 * h);
        record(res, numeric, grad_in.data[i], tol,
               "input[" + std::to_string(i) + "]");
    }

    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p].grad == nullptr) continue;
        for (std::size_t i = 0; i < params[p].value->numel(); ++i) {
            const double numeric =
                (loss_of(x, p, i, h) - loss_of(x, p, i, -h)) / (2.0 * h);
            record(res, numeric, params[p].grad->data[i], tol,
                   params[p].name + "[" + std::to_string(i) + "]");
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Whole-network check: softmax cross-entropy loss over a built architecture,
// gradients checked for the input rows and every trainable parameter.
// ---------------------------------------------------------------------------

inline FdResult check_network(const ihards::nn::ArchSpec& spec,
                              std::size_t features, std::size_t batch,
                              std::uint64_t seed, double h = kStep,
                              double tol = kTol) {
    using ihards::SeededRng;
    using ihards::nn::Tensor;

    SeededRng rng(seed);
    Tensor<double> x({batch, features});
    for (double& v : x.data) v = rng.uniform(-1.0, 1.0);
    std::vector<std::uint8_t> labels(batch);
    for (auto& l : labels) {
        l = static_cast<std::uint8_t>(rng.below(ihards::kClassCount));
    }

    const auto loss_of = [&](const Tensor<double>& input,
                             const std::string& pname, std::size_t elem,
                             double delta) {
        auto net =
            ihards::nn::build_architecture<double>(spec, features, seed);
        if (delta != 0.0) {
            for (auto& p : net.named_parameters()) {
                if (p.name == pname) {
                    p.value->data[elem] += delta;
                    break;
                }
            }
        }
        Tensor<double> logits = net.forward(input, true);
        return ihards::nn::softmax_xent<double>(logits, labels).loss;
    };

    auto net = ihards::nn::build_architecture<double>(spec, features, seed);
    Tensor<double> logits = net.forward(x, true);
    auto xent = ihards::nn::softmax_xent<double>(logits, labels);
    const Tensor<double> grad_in = net.backward(xent.grad_logits);
    auto params = net.named_parameters();

    FdResult res;

    for (std::size_t i = 0; i < x.numel(); ++i) {
        Tensor<double> xp = x, xm = x;
        xp.data[i] += h;
        xm.data[i] -= h;
        const double numeric =
            (loss_of(xp, "", 0, 0.0) - loss_of(xm, "", 0, 0.0)) / (2.0 * h);
        record(res, numeric, grad_in.data[i], tol,
               "net input[" + std::to_string(i) + "]");
    }

    for (const auto& p : params) {
        for (std::size_t i = 0; i < p.value->numel(); ++i) {
            const double numeric =
                (loss_of(x, p.name, i, h) - loss_of(x, p.name, i, -h)) /
                (2.0 * h);
            record(res, numeric, p.grad->data[i], tol,
                   p.name + "[" + std::to_string(i) + "]");
        }
    }
    return res;
}

} // namespace fdcheck
