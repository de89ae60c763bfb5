#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ihards/arch.hpp"
#include "ihards/errors.hpp"
#include "ihards/layers.hpp"
#include "ihards/rng.hpp"
#include "ihards/tensor.hpp"

namespace ihards::nn {

// A built layer pipeline. Rows enter as [batch, features] and are viewed as
// a 1-channel signal [batch, features, 1] for the conv stack; the final
// dense layer emits logits (softmax lives in the loss / prediction step).
template <typename T>
struct Network {
    ArchSpec spec;
    std::size_t input_features = 0;
    std::vector<std::unique_ptr<Layer<T>>> layers;

    Tensor<T> forward(const Tensor<T>& rows, bool training) {
        rows.require_rank(2, "Network::forward");
        if (rows.dim(1) != input_features) {
            throw ShapeError("network expects " +
                             std::to_string(input_features) +
                             " features, got " + std::to_string(rows.dim(1)));
        }
        Tensor<T> x = reshape(rows, {rows.dim(0), input_features, 1});
        for (auto& layer : layers) x = layer->forward(x, training);
        return x;
    }

    Tensor<T> backward(const Tensor<T>& grad_logits) {
        Tensor<T> g = grad_logits;
        for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
            g = (*it)->backward(g);
        }
        return reshape(g, {g.dim(0), input_features});
    }

    // Trainable tensors in canonical order, names prefixed with the layer's
    // pipeline position ("l0.conv.weights", ...). The checkpoint format and
    // the optimizer both rely on this ordering.
    std::vector<ParamRef<T>> named_parameters() {
        std::vector<ParamRef<T>> out;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            for (auto p : layers[i]->parameters()) {
                p.name = "l" + std::to_string(i) + "." + layers[i]->kind() +
                         "." + p.name;
                out.push_back(p);
            }
        }
        return out;
    }

    std::vector<ParamRef<T>> named_state() {
        std::vector<ParamRef<T>> out;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            for (auto p : layers[i]->state()) {
                p.name = "l" + std::to_string(i) + "." + layers[i]->kind() +
                         "." + p.name;
                out.push_back(p);
            }
        }
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (const auto& p : named_parameters()) n += p.value->numel();
        return n;
    }

    std::vector<std::uint8_t> predict(const Tensor<T>& rows) {
        Tensor<T> logits = forward(rows, /*training=*/false);
        std::vector<std::uint8_t> preds(logits.dim(0));
        for (std::size_t b = 0; b < logits.dim(0); ++b) {
            const T* row = &logits.at2(b, 0);
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.dim(1); ++c) {
                if (row[c] > row[best]) best = c;
            }
            preds[b] = static_cast<std::uint8_t>(best);
        }
        return preds;
    }
};

namespace detail {

// Fan-in-scaled uniform init, U(-sqrt(6/fan_in), +sqrt(6/fan_in)); biases
// stay zero.
template <typename T>
inline void init_weights(Tensor<T>& weights, std::size_t fan_in,
                         SeededRng rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (T& v : weights.data) {
        v = static_cast<T>(rng.uniform(-limit, limit));
    }
}

} // namespace detail

template <typename T>
inline Network<T> build_architecture(const ArchSpec& spec,
                                     std::size_t input_features,
                                     std::uint64_t seed) {
    const ShapeWalk walk = walk_shapes(spec, input_features);
    SeededRng root(seed);

    Network<T> net;
    net.spec = spec;
    net.input_features = input_features;
    auto idx = [&net] { return net.layers.size(); };

    std::size_t channels = 1;
    for (std::size_t i = 0; i < spec.conv_filters.size(); ++i) {
        auto conv = std::make_unique<Conv1D<T>>(spec.conv_kernels[i],
                                                channels,
                                                spec.conv_filters[i]);
        detail::init_weights(*conv->parameters()[0].value,
                             spec.conv_kernels[i] * channels,
                             root.derive(streams::kWeightInit + idx()));
        channels = spec.conv_filters[i];
        net.layers.push_back(std::move(conv));
        net.layers.push_back(std::make_unique<ReLU<T>>());
    }
    net.layers.push_back(std::make_unique<MaxPool1D<T>>(spec.pool_size));
    net.layers.push_back(std::make_unique<Dropout<T>>(
        spec.conv_dropout, root.derive(streams::kDropout + idx())));
    net.layers.push_back(std::make_unique<Flatten<T>>());

    std::size_t width = walk.flatten_width;
    for (std::size_t j = 0; j < spec.dense_units.size(); ++j) {
        const bool hidden = j + 1 < spec.dense_units.size();
        auto dense = std::make_unique<Dense<T>>(width, spec.dense_units[j]);
        detail::init_weights(*dense->parameters()[0].value, width,
                             root.derive(streams::kWeightInit + idx()));
        width = spec.dense_units[j];
        net.layers.push_back(std::move(dense));
        if (hidden) {
            net.layers.push_back(std::make_unique<ReLU<T>>());
            if (spec.batch_norm) {
                net.layers.push_back(std::make_unique<BatchNorm1D<T>>(width));
            }
            net.layers.push_back(std::make_unique<Dropout<T>>(
                spec.dense_dropouts[j],
                root.derive(streams::kDropout + idx())));
        }
    }
    return net;
}

} // namespace ihards::nn
