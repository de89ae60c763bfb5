#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/ihds.hpp"

namespace ihards::correlation {

// Pearson's r with population moments. Constant inputs correlate with
// nothing; by convention they yield 0 rather than NaN.
inline double pearson_r(std::span<const float> x, std::span<const float> y) {
    if (x.size() != y.size()) {
        throw ShapeError("pearson_r: length mismatch (" +
                         std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw ShapeError("pearson_r requires at least 2 observations");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

struct CorrelationMatrix {
    std::size_t cols = 0;
    std::vector<double> values;          // cols * cols, symmetric
    std::vector<std::uint8_t> constant;  // 1 = zero-variance column

    double at(std::size_t i, std::size_t j) const {
        return values[i * cols + j];
    }
};

// All pairwise correlations in one pass over the rows (sums and second
// moments per column pair), O(rows * cols^2).
inline CorrelationMatrix correlation_matrix(const float* data,
                                            std::size_t rows,
                                            std::size_t cols) {
    if (rows < 2) {
        throw ShapeError("correlation_matrix requires at least 2 rows");
    }
    if (cols == 0) {
        throw ShapeError("correlation_matrix requires at least 1 column");
    }

    std::vector<double> sums(cols, 0.0);
    std::vector<double> cross(cols * (cols + 1) / 2, 0.0);  // upper triangle
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = data + r * cols;
        std::size_t t = 0;
        for (std::size_t i = 0; i < cols; ++i) {
            const double xi = row[i];
            sums[i] += xi;
            for (std::size_t j = i; j < cols; ++j, ++t) {
                cross[t] += xi * row[j];
            }
        }
    }

    const auto n = static_cast<double>(rows);
    std::vector<double> mean(cols), var(cols);
    {
        std::size_t t = 0;
        for (std::size_t i = 0; i < cols; ++i) {
            mean[i] = sums[i] / n;
            var[i] = cross[t] / n - mean[i] * mean[i];
            if (var[i] < 0.0) var[i] = 0.0;  // rounding guard
            t += cols - i;
        }
    }

    CorrelationMatrix out;
    out.cols = cols;
    out.values.assign(cols * cols, 0.0);
    out.constant.assign(cols, 0);
    for (std::size_t i = 0; i < cols; ++i) {
        if (var[i] == 0.0) out.constant[i] = 1;
    }
    std::size_t t = 0;
    for (std::size_t i = 0; i < cols; ++i) {
        for (std::size_t j = i; j < cols; ++j, ++t) {
            double r;
            if (i == j) {
                r = out.constant[i] ? 0.0 : 1.0;
            } else if (out.constant[i] || out.constant[j]) {
                r = 0.0;
            } else {
                const double cov = cross[t] / n - mean[i] * mean[j];
                r = cov / std::sqrt(var[i] * var[j]);
                if (r > 1.0) r = 1.0;
                if (r < -1.0) r = -1.0;
            }
            out.values[i * cols + j] = r;
            out.values[j * cols + i] = r;
        }
    }
    return out;
}

inline CorrelationMatrix correlation_matrix(const IhardsDataset& data) {
    return correlation_matrix(data.features.data(), data.rows, data.cols);
}

struct FeatureMask {
    std::vector<std::uint8_t> keep;
    double threshold = 0.0;

    std::size_t columns() const { return keep.size(); }
    std::size_t kept_count() const {
        std::size_t n = 0;
        for (auto k : keep) n += k ? 1 : 0;
        return n;
    }
    std::size_t dropped_count() const { return keep.size() - kept_count(); }
    std::vector<std::size_t> kept_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < keep.size(); ++i)
            if (keep[i]) idx.push_back(i);
        return idx;
    }
};

// Greedy keep-first scan in ascending column index: a column survives iff
// its |r| against every previously kept column stays at or below the
// threshold. Strictly-above correlations are what get removed.
inline FeatureMask drwcc_prune(const CorrelationMatrix& corr,
                               double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ConfigError("correlation threshold must lie in (0, 1)");
    }
    FeatureMask mask;
    mask.threshold = threshold;
    mask.keep.assign(corr.cols, 0);
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < corr.cols; ++j) {
        bool ok = true;
        for (std::size_t k : kept) {
            if (std::abs(corr.at(j, k)) > threshold) {
                ok = false;
                break;
            }
        }
        if (ok) {
            mask.keep[j] = 1;
            kept.push_back(j);
        }
    }
    return mask;
}

// Count of off-diagonal column pairs whose |r| exceeds the threshold, and of
// columns involved in at least one such pair (what a correlation report
// summarizes).
struct CorrelationSummary {
    std::size_t pairs_above = 0;
    std::size_t columns_above = 0;
};

inline CorrelationSummary summarize_correlations(const CorrelationMatrix& corr,
                                                 double threshold) {
    CorrelationSummary s;
    std::vector<std::uint8_t> hit(corr.cols, 0);
    for (std::size_t i = 0; i < corr.cols; ++i) {
        for (std::size_t j = i + 1; j < corr.cols; ++j) {
            if (std::abs(corr.at(i, j)) > threshold) {
                ++s.pairs_above;
                hit[i] = hit[j] = 1;
            }
        }
    }
    for (auto h : hit) s.columns_above += h ? 1 : 0;
    return s;
}

inline IhardsDataset apply_feature_mask(const IhardsDataset& data,
                                        const FeatureMask& mask) {
    if (mask.columns() != data.cols) {
        throw ShapeError("mask covers " + std::to_string(mask.columns()) +
                         " columns, data has " + std::to_string(data.cols));
    }
    const auto kept = mask.kept_indices();
    IhardsDataset out;
    out.rows = data.rows;
    out.cols = kept.size();
    out.labels = data.labels;
    out.seed_used = data.seed_used;
    out.features.resize(out.rows * out.cols);
    for (std::size_t r = 0; r < data.rows; ++r) {
        const float* src = data.features.data() + r * data.cols;
        float* dst = out.features.data() + r * out.cols;
        for (std::size_t i = 0; i < kept.size(); ++i) dst[i] = src[kept[i]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mask persistence: a line-oriented key=value text file, one kept index per
// line so diffs localize.
//
//   version=1
//   threshold=0.5
//   columns=571
//   kept_count=111
//   keep=0
//   keep=2
//   ...
// ---------------------------------------------------------------------------

inline void save_feature_mask(const std::filesystem::path& path,
                              const FeatureMask& mask) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw StructuralError("cannot open for writing: " + path.string());
    }
    char num[64];
    auto [ptr, ec] = std::to_chars(num, num + sizeof num, mask.threshold);
    out << "version=1\n";
    out << "threshold=" << std::string_view(num, ptr) << "\n";
    out << "columns=" << mask.columns() << "\n";
    out << "kept_count=" << mask.kept_count() << "\n";
    for (std::size_t i : mask.kept_indices()) out << "keep=" << i << "\n";
    if (!out) {
        throw StructuralError("write failed: " + path.string());
    }
}

inline FeatureMask load_feature_mask(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("missing or unreadable file: " + path.string());
    }
    FeatureMask mask;
    std::size_t columns = 0, declared_kept = 0;
    bool saw_version = false, saw_columns = false, saw_threshold = false,
         saw_kept = false;
    std::vector<std::size_t> kept;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected key=value");
        }
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        auto fail = [&](const std::string& what) -> ParseError {
            return ParseError(path.string() + ":" + std::to_string(lineno) +
                              ": " + what);
        };
        if (key == "version") {
            if (value != "1") throw fail("unsupported mask version " + value);
            saw_version = true;
        } else if (key == "threshold") {
            double t = 0.0;
            auto [p, ec] =
                std::from_chars(value.data(), value.data() + value.size(), t);
            if (ec != std::errc() || p != value.data() + value.size())
                throw fail("bad threshold");
            mask.threshold = t;
            saw_threshold = true;
        } else if (key == "columns") {
            std::size_t v = 0;
            auto [p, ec] =
                std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size() ||
                v == 0)
                throw fail("bad column count");
            columns = v;
            saw_columns = true;
        } else if (key == "kept_count") {
            auto [p, ec] = std::from_chars(
                value.data(), value.data() + value.size(), declared_kept);
            if (ec != std::errc() || p != value.data() + value.size())
                throw fail("bad kept_count");
            saw_kept = true;
        } else if (key == "keep") {
            std::size_t idx = 0;
            auto [p, ec] = std::from_chars(value.data(),
                                           value.data() + value.size(), idx);
            if (ec != std::errc() || p != value.data() + value.size())
                throw fail("bad keep index");
            kept.push_back(idx);
        } else {
            throw fail("unknown key \"" + key + "\"");
        }
    }
    if (!saw_version || !saw_columns || !saw_threshold || !saw_kept) {
        throw FormatError(path.string() +
                          ": missing version/threshold/columns/kept_count");
    }
    if (kept.size() != declared_kept) {
        throw FormatError(path.string() + ": kept_count says " +
                          std::to_string(declared_kept) + " but " +
                          std::to_string(kept.size()) + " indices listed");
    }
    mask.keep.assign(columns, 0);
    std::size_t prev = 0;
    bool first = true;
    for (std::size_t idx : kept) {
        if (idx >= columns) {
            throw FormatError(path.string() + ": keep index " +
                              std::to_string(idx) + " out of range");
        }
        if (!first && idx <= prev) {
            throw FormatError(path.string() +
                              ": keep indices must be strictly ascending");
        }
        mask.keep[idx] = 1;
        prev = idx;
        first = false;
    }
    return mask;
}

} // namespace ihards::correlation
