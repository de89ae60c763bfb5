#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/rng.hpp"
#include "ihards/tensor.hpp"

namespace ihards::nn {

// A trainable or persistent tensor slot exposed by a layer. Parameters carry
// a gradient buffer; persistent state (batch-norm running stats) does not.
template <typename T>
struct ParamRef {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;  // null for non-trainable state
};

template <typename T>
class Layer {
public:
    virtual ~Layer() = default;
    virtual const char* kind() const = 0;

    // forward caches whatever backward needs; backward consumes the most
    // recent forward and returns the gradient w.r.t. that forward's input,
    // overwriting the layer's parameter gradients.
    virtual Tensor<T> forward(const Tensor<T>& input, bool training) = 0;
    virtual Tensor<T> backward(const Tensor<T>& upstream) = 0;

    virtual std::vector<ParamRef<T>> parameters() { return {}; }
    virtual std::vector<ParamRef<T>> state() { return {}; }
};

// ---------------------------------------------------------------------------
// Conv1D, valid padding, stride 1. Input [batch, length, c_in], weights
// [k, c_in, filters]: out[b,t,f] = bias[f] + sum_{i,c} in[b,t+i,c] * w[i,c,f].
// ---------------------------------------------------------------------------

template <typename T>
class Conv1D final : public Layer<T> {
public:
    Conv1D(std::size_t kernel, std::size_t channels_in, std::size_t filters)
        : kernel_(kernel), channels_in_(channels_in), filters_(filters),
          weights_({kernel, channels_in, filters}),
          bias_({filters}),
          grad_weights_({kernel, channels_in, filters}),
          grad_bias_({filters}) {
        if (kernel == 0 || channels_in == 0 || filters == 0) {
            throw ConfigError("Conv1D dimensions must be positive");
        }
    }

    const char* kind() const override { return "conv"; }
    std::size_t kernel() const { return kernel_; }
    std::size_t filters() const { return filters_; }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        input.require_rank(3, "Conv1D");
        const std::size_t B = input.dim(0), L = input.dim(1);
        if (input.dim(2) != channels_in_) {
            throw ShapeError("Conv1D: input has " +
                             std::to_string(input.dim(2)) +
                             " channels, layer expects " +
                             std::to_string(channels_in_));
        }
        if (L < kernel_) {
            throw ShapeError("Conv1D: input length " + std::to_string(L) +
                             " shorter than kernel " +
                             std::to_string(kernel_));
        }
        input_ = input;
        const std::size_t out_len = L - kernel_ + 1;
        Tensor<T> out({B, out_len, filters_});
        const T* w = weights_.data.data();
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = 0; t < out_len; ++t) {
                T* o = &out.at3(b, t, 0);
                for (std::size_t f = 0; f < filters_; ++f) o[f] = bias_[f];
                for (std::size_t i = 0; i < kernel_; ++i) {
                    const T* x = &input.at3(b, t + i, 0);
                    for (std::size_t c = 0; c < channels_in_; ++c) {
                        const T s = x[c];
                        const T* wr = w + (i * channels_in_ + c) * filters_;
                        for (std::size_t f = 0; f < filters_; ++f) {
                            o[f] += s * wr[f];
                        }
                    }
                }
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        upstream.require_rank(3, "Conv1D backward");
        const std::size_t B = input_.dim(0), L = input_.dim(1);
        const std::size_t out_len = L - kernel_ + 1;
        if (upstream.dim(0) != B || upstream.dim(1) != out_len ||
            upstream.dim(2) != filters_) {
            throw ShapeError("Conv1D backward: upstream shape " +
                             upstream.shape_string() + " does not match " +
                             "cached forward");
        }
        grad_weights_.fill(T{});
        grad_bias_.fill(T{});
        Tensor<T> grad_input({B, L, channels_in_});

        const T* w = weights_.data.data();
        T* gw = grad_weights_.data.data();
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = 0; t < out_len; ++t) {
                const T* up = &upstream.at3(b, t, 0);
                for (std::size_t f = 0; f < filters_; ++f) {
                    grad_bias_[f] += up[f];
                }
                for (std::size_t i = 0; i < kernel_; ++i) {
                    const T* x = &input_.at3(b, t + i, 0);
                    T* gx = &grad_input.at3(b, t + i, 0);
                    for (std::size_t c = 0; c < channels_in_; ++c) {
                        const std::size_t base =
                            (i * channels_in_ + c) * filters_;
                        const T s = x[c];
                        T acc{};
                        for (std::size_t f = 0; f < filters_; ++f) {
                            gw[base + f] += s * up[f];
                            acc += w[base + f] * up[f];
                        }
                        gx[c] += acc;
                    }
                }
            }
        }
        return grad_input;
    }

    std::vector<ParamRef<T>> parameters() override {
        return {{"weights", &weights_, &grad_weights_},
                {"bias", &bias_, &grad_bias_}};
    }

private:
    std::size_t kernel_, channels_in_, filters_;
    Tensor<T> weights_, bias_, grad_weights_, grad_bias_;
    Tensor<T> input_;
};

// ---------------------------------------------------------------------------

template <typename T>
class ReLU final : public Layer<T> {
public:
    const char* kind() const override { return "relu"; }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        input_ = input;
        Tensor<T> out = input;
        for (T& v : out.data) v = v > T{} ? v : T{};
        return out;
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (upstream.numel() != input_.numel()) {
            throw ShapeError("ReLU backward: size mismatch");
        }
        Tensor<T> grad = upstream;
        for (std::size_t i = 0; i < grad.numel(); ++i) {
            if (!(input_[i] > T{})) grad[i] = T{};
        }
        return grad;
    }

private:
    Tensor<T> input_;
};

// ---------------------------------------------------------------------------
// MaxPool1D: non-overlapping windows of `pool`, stride == pool, trailing
// remainder dropped. Ties resolve to the first (lowest-index) position.
// ---------------------------------------------------------------------------

template <typename T>
class MaxPool1D final : public Layer<T> {
public:
    explicit MaxPool1D(std::size_t pool) : pool_(pool) {
        if (pool == 0) throw ConfigError("pool size must be positive");
    }

    const char* kind() const override { return "maxpool"; }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        input.require_rank(3, "MaxPool1D");
        const std::size_t B = input.dim(0), L = input.dim(1),
                          C = input.dim(2);
        if (L < pool_) {
            throw ShapeError("MaxPool1D: input length " + std::to_string(L) +
                             " shorter than pool " + std::to_string(pool_));
        }
        input_shape_ = input.shape;
        const std::size_t out_len = L / pool_;
        Tensor<T> out({B, out_len, C});
        argmax_.assign(out.numel(), 0);
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = 0; t < out_len; ++t) {
                for (std::size_t c = 0; c < C; ++c) {
                    std::size_t best = t * pool_;
                    T best_v = input.at3(b, best, c);
                    for (std::size_t i = 1; i < pool_; ++i) {
                        const T v = input.at3(b, t * pool_ + i, c);
                        if (v > best_v) {
                            best_v = v;
                            best = t * pool_ + i;
                        }
                    }
                    out.at3(b, t, c) = best_v;
                    argmax_[(b * out_len + t) * C + c] = best;
                }
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        upstream.require_rank(3, "MaxPool1D backward");
        const std::size_t B = input_shape_[0], L = input_shape_[1],
                          C = input_shape_[2];
        const std::size_t out_len = L / pool_;
        if (upstream.dim(0) != B || upstream.dim(1) != out_len ||
            upstream.dim(2) != C) {
            throw ShapeError("MaxPool1D backward: upstream shape " +
                             upstream.shape_string() +
                             " does not match cached forward");
        }
        Tensor<T> grad({B, L, C});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t t = 0; t < out_len; ++t) {
                for (std::size_t c = 0; c < C; ++c) {
                    grad.at3(b, argmax_[(b * out_len + t) * C + c], c) +=
                        upstream.at3(b, t, c);
                }
            }
        }
        return grad;
    }

private:
    std::size_t pool_;
    std::vector<std::size_t> input_shape_;
    std::vector<std::size_t> argmax_;
};

// ---------------------------------------------------------------------------
// BatchNorm1D over the trailing (channel) dimension: statistics reduce over
// every leading dimension. Population variance in both the batch statistics
// and the running-average update.
// ---------------------------------------------------------------------------

template <typename T>
class BatchNorm1D final : public Layer<T> {
public:
    explicit BatchNorm1D(std::size_t channels, double epsilon = 1e-3,
                         double momentum = 0.99)
        : channels_(channels), epsilon_(epsilon), momentum_(momentum),
          gamma_({channels}), beta_({channels}),
          grad_gamma_({channels}), grad_beta_({channels}),
          running_mean_({channels}), running_var_({channels}) {
        if (channels == 0) throw ConfigError("BatchNorm1D needs channels");
        gamma_.fill(T{1});
        running_var_.fill(T{1});
    }

    const char* kind() const override { return "batchnorm"; }

    Tensor<T> forward(const Tensor<T>& input, bool training) override {
        if (input.rank() < 2 || input.shape.back() != channels_) {
            throw ShapeError("BatchNorm1D: expected trailing dimension " +
                             std::to_string(channels_) + ", got " +
                             input.shape_string());
        }
        const std::size_t M = input.numel() / channels_;
        Tensor<T> out = input;

        if (training) {
            if (M < 2) {
                throw ShapeError("BatchNorm1D: batch variance undefined for "
                                 "a single sample");
            }
            std::vector<double> mean(channels_, 0.0), var(channels_, 0.0);
            for (std::size_t m = 0; m < M; ++m) {
                const T* row = input.data.data() + m * channels_;
                for (std::size_t c = 0; c < channels_; ++c) {
                    mean[c] += static_cast<double>(row[c]);
                }
            }
            for (std::size_t c = 0; c < channels_; ++c) {
                mean[c] /= static_cast<double>(M);
            }
            for (std::size_t m = 0; m < M; ++m) {
                const T* row = input.data.data() + m * channels_;
                for (std::size_t c = 0; c < channels_; ++c) {
                    const double d = static_cast<double>(row[c]) - mean[c];
                    var[c] += d * d;
                }
            }
            inv_std_.resize(channels_);
            mean_.resize(channels_);
            for (std::size_t c = 0; c < channels_; ++c) {
                var[c] /= static_cast<double>(M);
                mean_[c] = mean[c];
                inv_std_[c] = 1.0 / std::sqrt(var[c] + epsilon_);
                running_mean_[c] = static_cast<T>(
                    momentum_ * static_cast<double>(running_mean_[c]) +
                    (1.0 - momentum_) * mean[c]);
                running_var_[c] = static_cast<T>(
                    momentum_ * static_cast<double>(running_var_[c]) +
                    (1.0 - momentum_) * var[c]);
            }
            xhat_ = input;
            for (std::size_t m = 0; m < M; ++m) {
                T* xh = xhat_.data.data() + m * channels_;
                T* o = out.data.data() + m * channels_;
                for (std::size_t c = 0; c < channels_; ++c) {
                    const double h =
                        (static_cast<double>(xh[c]) - mean_[c]) * inv_std_[c];
                    xh[c] = static_cast<T>(h);
                    o[c] = static_cast<T>(h) * gamma_[c] + beta_[c];
                }
            }
            reduce_count_ = M;
        } else {
            for (std::size_t m = 0; m < M; ++m) {
                T* o = out.data.data() + m * channels_;
                for (std::size_t c = 0; c < channels_; ++c) {
                    const double inv = 1.0 / std::sqrt(
                        static_cast<double>(running_var_[c]) + epsilon_);
                    o[c] = static_cast<T>(
                               (static_cast<double>(o[c]) -
                                static_cast<double>(running_mean_[c])) *
                               inv) *
                               gamma_[c] +
                           beta_[c];
                }
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (upstream.numel() != xhat_.numel()) {
            throw ShapeError("BatchNorm1D backward: size mismatch");
        }
        const std::size_t M = reduce_count_;
        grad_gamma_.fill(T{});
        grad_beta_.fill(T{});
        std::vector<double> sum_dy(channels_, 0.0),
            sum_dy_xhat(channels_, 0.0);
        for (std::size_t m = 0; m < M; ++m) {
            const T* up = upstream.data.data() + m * channels_;
            const T* xh = xhat_.data.data() + m * channels_;
            for (std::size_t c = 0; c < channels_; ++c) {
                sum_dy[c] += static_cast<double>(up[c]);
                sum_dy_xhat[c] +=
                    static_cast<double>(up[c]) * static_cast<double>(xh[c]);
            }
        }
        for (std::size_t c = 0; c < channels_; ++c) {
            grad_beta_[c] = static_cast<T>(sum_dy[c]);
            grad_gamma_[c] = static_cast<T>(sum_dy_xhat[c]);
        }
        Tensor<T> grad = upstream;
        const auto inv_m = 1.0 / static_cast<double>(M);
        for (std::size_t m = 0; m < M; ++m) {
            T* g = grad.data.data() + m * channels_;
            const T* xh = xhat_.data.data() + m * channels_;
            for (std::size_t c = 0; c < channels_; ++c) {
                const double dy = static_cast<double>(g[c]);
                const double centered =
                    dy - sum_dy[c] * inv_m -
                    static_cast<double>(xh[c]) * sum_dy_xhat[c] * inv_m;
                g[c] = static_cast<T>(static_cast<double>(gamma_[c]) *
                                      inv_std_[c] * centered);
            }
        }
        return grad;
    }

    std::vector<ParamRef<T>> parameters() override {
        return {{"gamma", &gamma_, &grad_gamma_},
                {"beta", &beta_, &grad_beta_}};
    }
    std::vector<ParamRef<T>> state() override {
        return {{"running_mean", &running_mean_, nullptr},
                {"running_var", &running_var_, nullptr}};
    }

private:
    std::size_t channels_;
    double epsilon_, momentum_;
    Tensor<T> gamma_, beta_, grad_gamma_, grad_beta_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> xhat_;
    std::vector<double> mean_, inv_std_;
    std::size_t reduce_count_ = 0;
};

// ---------------------------------------------------------------------------
// Inverted dropout: training zeroes with probability `rate` and scales
// survivors by 1/(1-rate); inference is the identity.
// ---------------------------------------------------------------------------

template <typename T>
class Dropout final : public Layer<T> {
public:
    Dropout(double rate, SeededRng rng) : rate_(rate), rng_(std::move(rng)) {
        if (!(rate >= 0.0 && rate < 1.0)) {
            throw ConfigError("dropout rate must lie in [0, 1)");
        }
    }

    const char* kind() const override { return "dropout"; }

    Tensor<T> forward(const Tensor<T>& input, bool training) override {
        if (!training || rate_ == 0.0) {
            mask_.clear();
            return input;
        }
        const T scale = static_cast<T>(1.0 / (1.0 - rate_));
        mask_.resize(input.numel());
        Tensor<T> out = input;
        for (std::size_t i = 0; i < out.numel(); ++i) {
            const bool keep = rng_.uniform() >= rate_;
            mask_[i] = keep ? scale : T{};
            out[i] *= mask_[i];
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        if (mask_.empty()) return upstream;  // identity forward
        if (upstream.numel() != mask_.size()) {
            throw ShapeError("Dropout backward: size mismatch");
        }
        Tensor<T> grad = upstream;
        for (std::size_t i = 0; i < grad.numel(); ++i) grad[i] *= mask_[i];
        return grad;
    }

private:
    double rate_;
    SeededRng rng_;
    std::vector<T> mask_;
};

// ---------------------------------------------------------------------------

template <typename T>
class Flatten final : public Layer<T> {
public:
    const char* kind() const override { return "flatten"; }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        if (input.rank() < 2) {
            throw ShapeError("Flatten expects a batched tensor");
        }
        input_shape_ = input.shape;
        return reshape(input,
                       {input.dim(0), input.numel() / input.dim(0)});
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        return reshape(upstream, input_shape_);
    }

private:
    std::vector<std::size_t> input_shape_;
};

// ---------------------------------------------------------------------------
// Dense: y = xW + b with W [in, out].
// ---------------------------------------------------------------------------

template <typename T>
class Dense final : public Layer<T> {
public:
    Dense(std::size_t in, std::size_t out)
        : in_(in), out_(out), weights_({in, out}), bias_({out}),
          grad_weights_({in, out}), grad_bias_({out}) {
        if (in == 0 || out == 0) {
            throw ConfigError("Dense dimensions must be positive");
        }
    }

    const char* kind() const override { return "dense"; }
    std::size_t out_features() const { return out_; }

    Tensor<T> forward(const Tensor<T>& input, bool) override {
        input.require_rank(2, "Dense");
        if (input.dim(1) != in_) {
            throw ShapeError("Dense: input width " +
                             std::to_string(input.dim(1)) +
                             ", layer expects " + std::to_string(in_));
        }
        input_ = input;
        const std::size_t B = input.dim(0);
        Tensor<T> out({B, out_});
        const T* w = weights_.data.data();
        for (std::size_t b = 0; b < B; ++b) {
            T* o = &out.at2(b, 0);
            for (std::size_t j = 0; j < out_; ++j) o[j] = bias_[j];
            const T* x = &input.at2(b, 0);
            for (std::size_t i = 0; i < in_; ++i) {
                const T s = x[i];
                const T* wr = w + i * out_;
                for (std::size_t j = 0; j < out_; ++j) o[j] += s * wr[j];
            }
        }
        return out;
    }

    Tensor<T> backward(const Tensor<T>& upstream) override {
        upstream.require_rank(2, "Dense backward");
        const std::size_t B = input_.dim(0);
        if (upstream.dim(0) != B || upstream.dim(1) != out_) {
            throw ShapeError("Dense backward: upstream shape " +
                             upstream.shape_string() +
                             " does not match cached forward");
        }
        grad_weights_.fill(T{});
        grad_bias_.fill(T{});
        Tensor<T> grad_input({B, in_});
        const T* w = weights_.data.data();
        T* gw = grad_weights_.data.data();
        for (std::size_t b = 0; b < B; ++b) {
            const T* up = &upstream.at2(b, 0);
            const T* x = &input_.at2(b, 0);
            T* gx = &grad_input.at2(b, 0);
            for (std::size_t j = 0; j < out_; ++j) grad_bias_[j] += up[j];
            for (std::size_t i = 0; i < in_; ++i) {
                const T s = x[i];
                const T* wr = w + i * out_;
                T* gwr = gw + i * out_;
                T acc{};
                for (std::size_t j = 0; j < out_; ++j) {
                    gwr[j] += s * up[j];
                    acc += wr[j] * up[j];
                }
                gx[i] = acc;
            }
        }
        return grad_input;
    }

    std::vector<ParamRef<T>> parameters() override {
        return {{"weights", &weights_, &grad_weights_},
                {"bias", &bias_, &grad_bias_}};
    }

private:
    std::size_t in_, out_;
    Tensor<T> weights_, bias_, grad_weights_, grad_bias_;
    Tensor<T> input_;
};

} // namespace ihards::nn
