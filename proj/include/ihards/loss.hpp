#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"
#include "ihards/tensor.hpp"

namespace ihards::nn {

// Row-wise stable softmax (max-subtracted).
template <typename T>
inline Tensor<T> softmax(const Tensor<T>& logits) {
    logits.require_rank(2, "softmax");
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    Tensor<T> probs = logits;
    for (std::size_t b = 0; b < B; ++b) {
        T* row = &probs.at2(b, 0);
        T mx = row[0];
        for (std::size_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        T sum{};
        for (std::size_t c = 0; c < C; ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
        }
        for (std::size_t c = 0; c < C; ++c) row[c] /= sum;
    }
    return probs;
}

// Sparse categorical cross-entropy over logits. Returns the mean loss and
// the gradient w.r.t. the logits, (softmax - onehot) / batch.
template <typename T>
struct SoftmaxXentResult {
    double loss = 0.0;
    Tensor<T> grad_logits;
};

template <typename T>
inline SoftmaxXentResult<T> softmax_xent(const Tensor<T>& logits,
                                         std::span<const std::uint8_t> labels) {
    logits.require_rank(2, "softmax_xent");
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    if (labels.size() != B) {
        throw ShapeError("softmax_xent: " + std::to_string(labels.size()) +
                         " labels for a batch of " + std::to_string(B));
    }
    for (std::uint8_t l : labels) {
        if (l >= C) {
            throw MappingError("label " + std::to_string(l) +
                               " outside 0.." + std::to_string(C - 1));
        }
    }

    SoftmaxXentResult<T> result;
    result.grad_logits = softmax(logits);
    double loss_sum = 0.0;
    const T inv_batch = static_cast<T>(1.0 / static_cast<double>(B));
    for (std::size_t b = 0; b < B; ++b) {
        T* row = &result.grad_logits.at2(b, 0);
        const double p = static_cast<double>(row[labels[b]]);
        // p > 0 always: softmax of finite logits; the max-subtracted entry
        // contributes exp(0) = 1 to the denominator.
        loss_sum += -std::log(p);
        row[labels[b]] -= T{1};
        for (std::size_t c = 0; c < C; ++c) row[c] *= inv_batch;
    }
    result.loss = loss_sum / static_cast<double>(B);
    return result;
}

} // namespace ihards::nn
