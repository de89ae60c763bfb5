#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "ihards/adam.hpp"
#include "ihards/arch.hpp"
#include "ihards/checkpoint.hpp"
#include "ihards/errors.hpp"
#include "ihards/ihds.hpp"
#include "ihards/loss.hpp"
#include "ihards/metrics.hpp"
#include "ihards/network.hpp"
#include "ihards/rng.hpp"
#include "ihards/tensor.hpp"

namespace ihards::nn {

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 500;
    std::size_t epochs = 10;
    std::size_t repeats = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    std::uint64_t seed = 0;

    void validate() const {
        if (learning_rate <= 0.0 || beta1 <= 0.0 || beta1 >= 1.0 ||
            beta2 <= 0.0 || beta2 >= 1.0 || epsilon <= 0.0) {
            throw ConfigError("optimizer hyperparameters out of range");
        }
        if (batch_size == 0 || epochs == 0 || repeats == 0) {
            throw ConfigError("batch_size, epochs and repeats must be "
                              "positive");
        }
    }

    AdamConfig adam() const {
        return {learning_rate, beta1, beta2, epsilon};
    }
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<metrics::EpochRecord> curve;
};

// Invoked after every completed epoch (e.g. for progress lines).
using EpochCallback = std::function<void(const metrics::EpochRecord&)>;

namespace detail {

inline void fill_batch(const IhardsDataset& data,
                       const std::vector<std::size_t>& order,
                       std::size_t start, std::size_t count,
                       Tensor<float>& x, std::vector<std::uint8_t>& y) {
    x.shape = {count, data.cols};
    x.data.resize(count * data.cols);
    y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t r = order[start + i];
        std::memcpy(x.data.data() + i * data.cols,
                    data.features.data() + r * data.cols,
                    data.cols * sizeof(float));
        y[i] = data.labels.empty() ? 0 : data.labels[r];
    }
}

} // namespace detail

// Minibatch Adam over seeded-shuffled epochs. Expects rows that are already
// masked and standardized; the caller attaches mask/stats to the returned
// checkpoint before persisting it. The per-epoch curve reports the mean
// sample loss and the accuracy of the predictions made during training,
// scored by the metrics module.
inline TrainResult train_model(const IhardsDataset& train,
                               const ArchSpec& spec, const TrainConfig& cfg,
                               const EpochCallback& on_epoch = {}) {
    cfg.validate();
    train.validate();
    if (train.rows == 0 || !train.has_labels() || train.labels.empty()) {
        throw StructuralError("training requires labelled rows");
    }

    Network<float> net =
        build_architecture<float>(spec, train.cols, cfg.seed);
    auto params = net.named_parameters();
    AdamState<float> opt_state = AdamState<float>::make(params);
    const AdamConfig adam_cfg = cfg.adam();

    SeededRng root(cfg.seed);
    const std::size_t N = train.rows;
    std::vector<std::size_t> order(N);
    for (std::size_t i = 0; i < N; ++i) order[i] = i;

    TrainResult result;
    Tensor<float> x;
    std::vector<std::uint8_t> y;
    std::vector<std::uint8_t> epoch_labels, epoch_preds;
    epoch_labels.reserve(N);
    epoch_preds.reserve(N);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        SeededRng shuffle_rng = root.derive(streams::kEpochShuffle + epoch);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        epoch_labels.clear();
        epoch_preds.clear();
        std::size_t step = 0;
        for (std::size_t start = 0; start < N; start += cfg.batch_size) {
            ++step;
            const std::size_t count = std::min(cfg.batch_size, N - start);
            detail::fill_batch(train, order, start, count, x, y);

            Tensor<float> logits = net.forward(x, /*training=*/true);
            auto xent = softmax_xent<float>(logits, y);
            if (!std::isfinite(xent.loss)) {
                throw NumericError("non-finite training loss at epoch " +
                                   std::to_string(epoch) + ", step " +
                                   std::to_string(step));
            }
            loss_sum += xent.loss * static_cast<double>(count);

            for (std::size_t b = 0; b < count; ++b) {
                const float* row = &logits.at2(b, 0);
                std::size_t best = 0;
                for (std::size_t c = 1; c < logits.dim(1); ++c) {
                    if (row[c] > row[best]) best = c;
                }
                epoch_labels.push_back(y[b]);
                epoch_preds.push_back(static_cast<std::uint8_t>(best));
            }

            net.backward(xent.grad_logits);
            adam_step(params, opt_state, adam_cfg);
        }

        const auto cm = metrics::confusion_matrix(epoch_labels, epoch_preds);
        const auto scores = metrics::derive_scores(cm);
        result.curve.push_back(
            {epoch, loss_sum / static_cast<double>(N), scores.accuracy});
        if (on_epoch) on_epoch(result.curve.back());
    }

    result.checkpoint = checkpoint_from_network(net);
    return result;
}

// ---------------------------------------------------------------------------
// Inference. Input rows are raw (unstandardized) values over the
// checkpoint's kept columns; standardization stats stored in the checkpoint
// are applied here. Nothing is mutated: repeated evaluations agree exactly.
// ---------------------------------------------------------------------------

struct EvaluationResult {
    std::vector<std::uint8_t> predictions;
    double loss = 0.0;  // mean cross-entropy; meaningful iff has_loss
    bool has_loss = false;
    std::vector<float> probabilities;  // row-major [rows x classes], opt-in
};

inline constexpr std::size_t kEvalBatch = 500;

inline EvaluationResult evaluate_model(const Checkpoint& ckpt,
                                       const IhardsDataset& test,
                                       bool with_probabilities = false) {
    test.validate();
    if (test.cols != ckpt.input_features) {
        throw ShapeError("checkpoint expects " +
                         std::to_string(ckpt.input_features) +
                         " feature columns, input has " +
                         std::to_string(test.cols));
    }
    if (!ckpt.stats.mean.empty() && ckpt.stats.cols() != test.cols) {
        throw ShapeError("checkpoint stats cover " +
                         std::to_string(ckpt.stats.cols()) +
                         " columns, input has " + std::to_string(test.cols));
    }

    Network<float> net = restore_network(ckpt);
    const bool labelled = !test.labels.empty();

    EvaluationResult result;
    result.predictions.reserve(test.rows);
    result.has_loss = labelled && test.rows > 0;

    Tensor<float> x;
    std::vector<std::uint8_t> y;
    double loss_sum = 0.0;
    std::vector<std::size_t> identity(test.rows);
    for (std::size_t i = 0; i < test.rows; ++i) identity[i] = i;

    for (std::size_t start = 0; start < test.rows; start += kEvalBatch) {
        const std::size_t count = std::min(kEvalBatch, test.rows - start);
        detail::fill_batch(test, identity, start, count, x, y);
        if (!ckpt.stats.mean.empty()) {
            for (std::size_t b = 0; b < count; ++b) {
                float* row = &x.at2(b, 0);
                for (std::size_t c = 0; c < test.cols; ++c) {
                    const float centered = row[c] - ckpt.stats.mean[c];
                    row[c] = ckpt.stats.stddev[c] > 0.0f
                                 ? centered / ckpt.stats.stddev[c]
                                 : centered;
                }
            }
        }
        Tensor<float> logits = net.forward(x, /*training=*/false);
        if (labelled) {
            auto xent = softmax_xent<float>(logits, y);
            loss_sum += xent.loss * static_cast<double>(count);
        }
        if (with_probabilities) {
            const Tensor<float> probs = softmax(logits);
            result.probabilities.insert(result.probabilities.end(),
                                        probs.data.begin(),
                                        probs.data.end());
        }
        for (std::size_t b = 0; b < count; ++b) {
            const float* row = &logits.at2(b, 0);
            std::size_t best = 0;
            for (std::size_t c = 1; c < logits.dim(1); ++c) {
                if (row[c] > row[best]) best = c;
            }
            result.predictions.push_back(static_cast<std::uint8_t>(best));
        }
    }
    if (result.has_loss) {
        result.loss = loss_sum / static_cast<double>(test.rows);
    }
    return result;
}

} // namespace ihards::nn
