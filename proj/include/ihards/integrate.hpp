#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"
#include "ihards/ihds.hpp"
#include "ihards/rng.hpp"

namespace ihards::integrate {

enum class ReplacementPolicy { ErrorIfShort, ReplaceIfShort };

struct IntegrationConfig {
    std::size_t per_class_n = 0;
    std::uint64_t seed = 0;
    ReplacementPolicy policy = ReplacementPolicy::ReplaceIfShort;
    // Sink for non-fatal warnings (e.g. a source class being oversampled);
    // defaults to stderr.
    std::function<void(const std::string&)> warn;
};

namespace detail {

inline void emit_warning(const IntegrationConfig& cfg,
                         const std::string& message) {
    if (cfg.warn) {
        cfg.warn(message);
    } else {
        std::cerr << "warning: " << message << "\n";
    }
}

} // namespace detail

// Draw n row indices from [0, pool_size). Short pools either fault or fall
// back to sampling with replacement, per policy; `context` names the class
// and source for error/warning text.
inline std::vector<std::size_t> draw_class_indices(
    std::size_t pool_size, std::size_t n, SeededRng& rng,
    ReplacementPolicy policy, const std::string& context = "") {
    if (pool_size == 0 || n == 0) {
        throw ConfigError("draw_class_indices requires pool_size >= 1 and "
                          "n >= 1");
    }
    if (n <= pool_size) {
        return rng.sample_without_replacement(pool_size, n);
    }
    if (policy == ReplacementPolicy::ErrorIfShort) {
        throw CapacityError(
            "cannot draw " + std::to_string(n) +
            " distinct indices from a pool of " + std::to_string(pool_size) +
            (context.empty() ? "" : " (" + context + ")"));
    }
    return rng.sample_with_replacement(pool_size, n);
}

namespace detail {

inline std::vector<std::vector<std::size_t>> rows_by_class(
    const CanonicalFrame& frame) {
    std::vector<std::vector<std::size_t>> by_class(kClassCount);
    for (std::size_t r = 0; r < frame.rows; ++r) {
        by_class[frame.labels[r]].push_back(r);
    }
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (by_class[c].empty()) {
            throw StructuralError(
                std::string("source ") + std::string(source_name(frame.source)) +
                " has no rows for class " +
                std::string(activity_name(static_cast<ActivityClass>(c))));
        }
    }
    return by_class;
}

// Reorder rows so output row r holds input row order[r], reusing the buffer
// (full-scale IHARDS is several GB; a second copy is avoidable).
inline void apply_row_order(IhardsDataset& data,
                            const std::vector<std::size_t>& order) {
    std::vector<bool> placed(data.rows, false);
    std::vector<float> tmp(data.cols);
    for (std::size_t start = 0; start < data.rows; ++start) {
        if (placed[start] || order[start] == start) {
            placed[start] = true;
            continue;
        }
        auto start_row = data.row(start);
        std::copy(start_row.begin(), start_row.end(), tmp.begin());
        const std::uint8_t tmp_label = data.labels[start];
        std::size_t j = start;
        while (true) {
            const std::size_t k = order[j];
            placed[j] = true;
            if (k == start) {
                std::copy(tmp.begin(), tmp.end(), data.row(j).begin());
                data.labels[j] = tmp_label;
                break;
            }
            auto src = data.row(k);
            std::copy(src.begin(), src.end(), data.row(j).begin());
            data.labels[j] = data.labels[k];
            j = k;
        }
    }
}

} // namespace detail

// Assemble the integrated dataset: per class, draw per_class_n row triples
// (one row from each source) and concatenate them into 571-column rows, then
// shuffle the full row set with the run seed.
inline IhardsDataset build_integrated_dataset(const CanonicalFrame& uci,
                                              const CanonicalFrame& wisdm,
                                              const CanonicalFrame& kuhar,
                                              const IntegrationConfig& cfg) {
    if (cfg.per_class_n == 0) {
        throw ConfigError("per_class_n must be >= 1");
    }
    uci.validate();
    wisdm.validate();
    kuhar.validate();
    if (uci.source != SourceId::UciHar || uci.cols != kUciCols ||
        wisdm.source != SourceId::Wisdm || wisdm.cols != kWisdmCols ||
        kuhar.source != SourceId::KuHar || kuhar.cols != kKuharCols) {
        throw ShapeError("build_integrated_dataset expects UCI-HAR (561), "
                         "WISDM (3) and KU-HAR (7) frames in that order");
    }

    const CanonicalFrame* sources[3] = {&uci, &wisdm, &kuhar};
    std::vector<std::vector<std::size_t>> pools[3];
    for (int s = 0; s < 3; ++s) pools[s] = detail::rows_by_class(*sources[s]);

    SeededRng root(cfg.seed);
    const std::size_t n = cfg.per_class_n;

    IhardsDataset out;
    out.rows = kClassCount * n;
    out.cols = kIhardsCols;
    out.seed_used = cfg.seed;
    out.features.resize(out.rows * out.cols);
    out.labels.resize(out.rows);

    for (std::size_t c = 0; c < kClassCount; ++c) {
        std::vector<std::size_t> picks[3];
        for (int s = 0; s < 3; ++s) {
            const auto& pool = pools[s][c];
            const std::string context =
                "class " +
                std::string(activity_name(static_cast<ActivityClass>(c))) +
                ", source " +
                std::string(source_name(sources[s]->source));
            if (n > pool.size() &&
                cfg.policy == ReplacementPolicy::ReplaceIfShort) {
                detail::emit_warning(
                    cfg, context + " has only " + std::to_string(pool.size()) +
                             " rows for " + std::to_string(n) +
                             " draws; sampling with replacement");
            }
            SeededRng draw_rng = root.derive(
                streams::kClassDraw + 8 * c + static_cast<std::uint64_t>(s));
            picks[s] =
                draw_class_indices(pool.size(), n, draw_rng, cfg.policy,
                                   context);
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r = c * n + i;
            float* dst = out.features.data() + r * out.cols;
            std::size_t offset = 0;
            for (int s = 0; s < 3; ++s) {
                const auto& pool = pools[s][c];
                auto src = sources[s]->row(pool[picks[s][i]]);
                std::copy(src.begin(), src.end(), dst + offset);
                offset += src.size();
            }
            out.labels[r] = static_cast<std::uint8_t>(c);
        }
    }

    std::vector<std::size_t> order(out.rows);
    for (std::size_t i = 0; i < out.rows; ++i) order[i] = i;
    SeededRng shuffle_rng = root.derive(streams::kRowShuffle);
    shuffle_rng.shuffle(order);
    detail::apply_row_order(out, order);
    return out;
}

// ---------------------------------------------------------------------------
// Column standardization (z-score with population std).
// ---------------------------------------------------------------------------

struct StandardizationStats {
    std::vector<float> mean;
    std::vector<float> stddev;  // population std; 0 marks a constant column

    std::size_t cols() const { return mean.size(); }
};

inline StandardizationStats standardize_fit(const IhardsDataset& train) {
    if (train.rows == 0) {
        throw ShapeError("standardize_fit requires at least one row");
    }
    const std::size_t cols = train.cols;
    std::vector<double> sum(cols, 0.0), sq(cols, 0.0);
    for (std::size_t r = 0; r < train.rows; ++r) {
        const float* row = train.features.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = row[c];
            sum[c] += v;
        }
    }
    std::vector<double> mean(cols);
    for (std::size_t c = 0; c < cols; ++c)
        mean[c] = sum[c] / static_cast<double>(train.rows);
    for (std::size_t r = 0; r < train.rows; ++r) {
        const float* row = train.features.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = row[c] - mean[c];
            sq[c] += d * d;
        }
    }

    StandardizationStats stats;
    stats.mean.resize(cols);
    stats.stddev.resize(cols);
    for (std::size_t c = 0; c < cols; ++c) {
        stats.mean[c] = static_cast<float>(mean[c]);
        stats.stddev[c] = static_cast<float>(
            std::sqrt(sq[c] / static_cast<double>(train.rows)));
    }
    return stats;
}

inline void standardize_apply_inplace(IhardsDataset& data,
                                      const StandardizationStats& stats) {
    if (data.cols != stats.cols()) {
        throw ShapeError("standardization stats cover " +
                         std::to_string(stats.cols()) + " columns, data has " +
                         std::to_string(data.cols));
    }
    for (std::size_t r = 0; r < data.rows; ++r) {
        float* row = data.features.data() + r * data.cols;
        for (std::size_t c = 0; c < data.cols; ++c) {
            const float centered = row[c] - stats.mean[c];
            row[c] = stats.stddev[c] > 0.0f ? centered / stats.stddev[c]
                                            : centered;
        }
    }
}

inline IhardsDataset standardize_apply(const IhardsDataset& data,
                                       const StandardizationStats& stats) {
    IhardsDataset out = data;
    standardize_apply_inplace(out, stats);
    return out;
}

// ---------------------------------------------------------------------------
// Stratified split. Membership is drawn per class; surviving rows keep their
// relative order. Odd per-class counts round toward train.
// ---------------------------------------------------------------------------

inline std::pair<IhardsDataset, IhardsDataset> stratified_split(
    const IhardsDataset& data, double test_fraction, SeededRng& rng) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must lie in (0, 1)");
    }
    data.validate();
    if (!data.has_labels() || data.rows == 0) {
        throw StructuralError("stratified split requires labelled rows");
    }

    std::vector<std::vector<std::size_t>> by_class(kClassCount);
    for (std::size_t r = 0; r < data.rows; ++r) {
        by_class[data.labels[r]].push_back(r);
    }

    std::vector<bool> is_test(data.rows, false);
    std::size_t test_total = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        auto& members = by_class[c];
        if (members.empty()) {
            throw StructuralError(
                "class " +
                std::string(activity_name(static_cast<ActivityClass>(c))) +
                " has no rows to split");
        }
        const auto test_n = static_cast<std::size_t>(std::floor(
            static_cast<double>(members.size()) * test_fraction));
        rng.shuffle(members);
        for (std::size_t i = 0; i < test_n; ++i) is_test[members[i]] = true;
        test_total += test_n;
    }

    IhardsDataset train, test;
    train.cols = test.cols = data.cols;
    train.seed_used = test.seed_used = data.seed_used;
    train.rows = data.rows - test_total;
    test.rows = test_total;
    train.features.reserve(train.rows * data.cols);
    test.features.reserve(test.rows * data.cols);
    train.labels.reserve(train.rows);
    test.labels.reserve(test.rows);
    for (std::size_t r = 0; r < data.rows; ++r) {
        auto row = data.row(r);
        IhardsDataset& dst = is_test[r] ? test : train;
        dst.features.insert(dst.features.end(), row.begin(), row.end());
        dst.labels.push_back(data.labels[r]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// Synthetic sources: five well-separated class means over the concatenated
// column space, sliced 561/3/7 across three frames, with Gaussian noise.
// Class means are pushed apart to >= 10*sigma so a nearest-centroid rule is
// essentially exact on the generated data.
// ---------------------------------------------------------------------------

struct SyntheticSources {
    CanonicalFrame uci;
    CanonicalFrame wisdm;
    CanonicalFrame kuhar;
};

inline SyntheticSources generate_synthetic(std::size_t features,
                                           std::size_t per_class,
                                           double sigma, SeededRng& rng) {
    if (features != kIhardsCols) {
        throw ConfigError("synthetic generator produces the fixed 561+3+7 "
                          "column split; features must be 571");
    }
    if (per_class == 0) throw ConfigError("per_class must be >= 1");
    if (sigma < 0.0) throw ConfigError("sigma must be >= 0");

    std::vector<std::vector<double>> means(kClassCount,
                                           std::vector<double>(features));
    for (auto& m : means)
        for (auto& v : m) v = rng.uniform(-1.0, 1.0);

    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < kClassCount; ++a) {
        for (std::size_t b = a + 1; b < kClassCount; ++b) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < features; ++c) {
                const double d = means[a][c] - means[b][c];
                d2 += d * d;
            }
            min_dist = std::min(min_dist, std::sqrt(d2));
        }
    }
    if (sigma > 0.0 && min_dist < 10.0 * sigma) {
        const double scale = 10.0 * sigma / min_dist;
        for (auto& m : means)
            for (auto& v : m) v *= scale;
    }

    SyntheticSources out;
    out.uci.source = SourceId::UciHar;
    out.uci.cols = kUciCols;
    out.wisdm.source = SourceId::Wisdm;
    out.wisdm.cols = kWisdmCols;
    out.kuhar.source = SourceId::KuHar;
    out.kuhar.cols = kKuharCols;

    std::vector<float> row(features);
    for (std::size_t c = 0; c < kClassCount; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            for (std::size_t f = 0; f < features; ++f) {
                row[f] = static_cast<float>(
                    means[c][f] + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0));
            }
            const auto label = static_cast<std::uint8_t>(c);
            out.uci.push_row({row.data(), kUciCols}, label);
            out.wisdm.push_row({row.data() + kUciCols, kWisdmCols}, label);
            out.kuhar.push_row({row.data() + kUciCols + kWisdmCols, kKuharCols},
                               label);
        }
    }
    return out;
}

} // namespace ihards::integrate
