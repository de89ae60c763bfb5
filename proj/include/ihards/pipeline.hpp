#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ihards/correlation.hpp"
#include "ihards/errors.hpp"
#include "ihards/ihds.hpp"
#include "ihards/integrate.hpp"
#include "ihards/manifest.hpp"
#include "ihards/metrics.hpp"
#include "ihards/rng.hpp"
#include "ihards/train.hpp"

namespace ihards::pipeline {

// Synthetic sources -> integrated dataset, all from one seed. The per-class
// draw is a full permutation (pool size == n), so no replacement occurs.
inline IhardsDataset synthesize_integrated(
    std::size_t per_class, double sigma, std::uint64_t seed,
    integrate::ReplacementPolicy policy =
        integrate::ReplacementPolicy::ReplaceIfShort,
    std::function<void(const std::string&)> warn = {}) {
    SeededRng synth_rng = SeededRng(seed).derive(streams::kSynthetic);
    const auto sources =
        integrate::generate_synthetic(kIhardsCols, per_class, sigma,
                                      synth_rng);
    integrate::IntegrationConfig cfg;
    cfg.per_class_n = per_class;
    cfg.seed = seed;
    cfg.policy = policy;
    cfg.warn = std::move(warn);
    return integrate::build_integrated_dataset(sources.uci, sources.wisdm,
                                               sources.kuhar, cfg);
}

// Drop full-width standardization stats down to a mask's kept columns.
inline integrate::StandardizationStats restrict_stats(
    const integrate::StandardizationStats& stats,
    const correlation::FeatureMask& mask) {
    if (stats.cols() != mask.columns()) {
        throw ShapeError("stats cover " + std::to_string(stats.cols()) +
                         " columns, mask covers " +
                         std::to_string(mask.columns()));
    }
    integrate::StandardizationStats out;
    for (std::size_t i : mask.kept_indices()) {
        out.mean.push_back(stats.mean[i]);
        out.stddev.push_back(stats.stddev[i]);
    }
    return out;
}

struct RepeatMetrics {
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    double accuracy = 0.0;
    double loss = 0.0;
};

struct TrainEvalOutcome {
    // Artifacts of the last repeat (the persisted model).
    nn::Checkpoint checkpoint;
    std::vector<metrics::EpochRecord> curve;
    metrics::ScoreReport report;
    // Across repeats.
    std::vector<RepeatMetrics> repeats;
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;
    double mean_loss = 0.0;
    double stddev_loss = 0.0;
};

// Progress hook: (repeat index, completed epoch record).
using RepeatEpochCallback =
    std::function<void(std::size_t, const metrics::EpochRecord&)>;

// The full evaluation protocol: seeded stratified split, standardization
// fitted on the training half, optional feature mask, `cfg.repeats`
// independently seeded training runs, each scored on the held-out half.
inline TrainEvalOutcome run_train_eval(
    const IhardsDataset& data, const nn::ArchSpec& arch,
    const nn::TrainConfig& cfg, double test_fraction = 0.5,
    const correlation::FeatureMask* mask = nullptr,
    const RepeatEpochCallback& on_epoch = {}) {
    cfg.validate();
    data.validate();
    if (!data.has_labels() || data.rows == 0) {
        throw StructuralError("train/eval requires labelled rows");
    }

    SeededRng root(cfg.seed);
    SeededRng split_rng = root.derive(streams::kSplit);
    auto [train_raw, test_raw] =
        integrate::stratified_split(data, test_fraction, split_rng);

    const auto stats_full = integrate::standardize_fit(train_raw);

    IhardsDataset train_masked, test_masked;
    integrate::StandardizationStats stats_used;
    correlation::FeatureMask stored_mask;
    if (mask != nullptr) {
        train_masked = correlation::apply_feature_mask(train_raw, *mask);
        test_masked = correlation::apply_feature_mask(test_raw, *mask);
        stats_used = restrict_stats(stats_full, *mask);
        stored_mask = *mask;
    } else {
        train_masked = std::move(train_raw);
        test_masked = std::move(test_raw);
        stats_used = stats_full;
    }

    const IhardsDataset train_std =
        integrate::standardize_apply(train_masked, stats_used);

    TrainEvalOutcome outcome;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        nn::TrainConfig rcfg = cfg;
        rcfg.repeats = 1;
        rcfg.seed = root.derive(streams::kRepeat + r).seed();

        nn::EpochCallback epoch_cb;
        if (on_epoch) {
            epoch_cb = [&on_epoch, r](const metrics::EpochRecord& rec) {
                on_epoch(r, rec);
            };
        }
        nn::TrainResult tr = nn::train_model(train_std, arch, rcfg, epoch_cb);
        tr.checkpoint.stats = stats_used;
        tr.checkpoint.mask = stored_mask;

        const auto eval = nn::evaluate_model(tr.checkpoint, test_masked);
        auto cm = metrics::confusion_matrix(test_masked.labels,
                                            eval.predictions);
        auto report = metrics::derive_scores(cm);
        report.loss = eval.loss;

        outcome.repeats.push_back(
            {r, rcfg.seed, report.accuracy, report.loss});
        if (r + 1 == cfg.repeats) {
            tr.checkpoint.info.add("trained.seed",
                                   std::to_string(rcfg.seed));
            tr.checkpoint.info.add("trained.repeat", std::to_string(r));
            tr.checkpoint.info.add("test.accuracy",
                                   kv::format_double(report.accuracy));
            tr.checkpoint.info.add("test.loss",
                                   kv::format_double(report.loss));
            outcome.checkpoint = std::move(tr.checkpoint);
            outcome.curve = std::move(tr.curve);
            outcome.report = std::move(report);
        }
    }

    const auto R = static_cast<double>(outcome.repeats.size());
    for (const auto& m : outcome.repeats) {
        outcome.mean_accuracy += m.accuracy;
        outcome.mean_loss += m.loss;
    }
    outcome.mean_accuracy /= R;
    outcome.mean_loss /= R;
    double va = 0.0, vl = 0.0;
    for (const auto& m : outcome.repeats) {
        va += (m.accuracy - outcome.mean_accuracy) *
              (m.accuracy - outcome.mean_accuracy);
        vl += (m.loss - outcome.mean_loss) * (m.loss - outcome.mean_loss);
    }
    outcome.stddev_accuracy = std::sqrt(va / R);
    outcome.stddev_loss = std::sqrt(vl / R);
    return outcome;
}

} // namespace ihards::pipeline
