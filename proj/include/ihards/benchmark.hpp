#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ihards/layers.hpp"
#include "ihards/manifest.hpp"
#include "ihards/rng.hpp"
#include "ihards/tensor.hpp"

namespace ihards::benchmark {

// Empirical check that conv cost scales linearly in input length, kernel
// size and filter count, and that a dense stack scales linearly in each
// width. Each factor is measured at a base size and at double that size;
// a ratio near 2 (within a generous band — desk machines are noisy) is the
// expected linear behaviour.

struct ScalingRow {
    std::string factor;      // e.g. "conv.n"
    std::size_t base = 0;
    std::size_t doubled = 0;
    double base_ms = 0.0;
    double doubled_ms = 0.0;
    double ratio = 0.0;
    bool linear = false;     // ratio within [lo, hi]
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double band_lo = 1.5;
    double band_hi = 3.0;
    std::size_t trials = 5;
    bool all_linear = true;
    // Degenerate conv where the kernel spans the whole signal (one output
    // position); recorded to show it completes, not judged against the band.
    std::size_t edge_n = 0;
    double edge_ms = 0.0;
    bool edge_completed = false;
};

namespace detail {

template <typename F>
inline double median_ms(F&& body, std::size_t trials) {
    std::vector<double> times;
    times.reserve(trials);
    for (std::size_t i = 0; i < trials; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(
            std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

inline nn::Tensor<float> random_tensor(std::vector<std::size_t> shape,
                                       SeededRng& rng) {
    nn::Tensor<float> t(std::move(shape));
    for (float& v : t.data) {
        v = static_cast<float>(rng.uniform(-1.0, 1.0));
    }
    return t;
}

// One conv forward; returns a checksum so the work cannot be elided.
inline double conv_once(std::size_t batch, std::size_t n, std::size_t k,
                        std::size_t channels, std::size_t filters,
                        SeededRng& rng) {
    nn::Conv1D<float> conv(k, channels, filters);
    auto params = conv.parameters();
    for (float& v : params[0].value->data) {
        v = static_cast<float>(rng.uniform(-0.5, 0.5));
    }
    auto input = random_tensor({batch, n, channels}, rng);
    auto out = conv.forward(input, false);
    double sum = 0.0;
    for (float v : out.data) sum += v;
    return sum;
}

// One forward pass through a 4-width dense stack i -> j -> k -> l.
inline double dense_once(std::size_t batch, std::size_t i, std::size_t j,
                         std::size_t k, std::size_t l, SeededRng& rng) {
    nn::Dense<float> d1(i, j), d2(j, k), d3(k, l);
    for (auto* dense : {&d1, &d2, &d3}) {
        auto params = dense->parameters();
        for (float& v : params[0].value->data) {
            v = static_cast<float>(rng.uniform(-0.1, 0.1));
        }
    }
    auto x = random_tensor({batch, i}, rng);
    auto out = d3.forward(d2.forward(d1.forward(x, false), false), false);
    double sum = 0.0;
    for (float v : out.data) sum += v;
    return sum;
}

} // namespace detail

// Volatile sink defeating dead-code elimination across trials.
inline volatile double benchmark_sink = 0.0;

inline ScalingReport run_scaling_benchmark(std::uint64_t seed,
                                           std::size_t trials = 5) {
    ScalingReport report;
    report.trials = trials;
    SeededRng rng(seed);

    // Conv base point: n 4096, k 16, 2 channels, 16 filters, batch 48.
    const std::size_t B = 48, N = 4096, K = 16, C = 2, F = 16;
    struct ConvCase {
        const char* factor;
        std::size_t n, k, f;
    };
    const ConvCase conv_cases[] = {
        {"conv.n", N, K, F},
        {"conv.k", N, K, F},
        {"conv.f", N, K, F},
    };
    for (const auto& cs : conv_cases) {
        std::size_t n2 = cs.n, k2 = cs.k, f2 = cs.f;
        std::size_t base_value = 0, doubled_value = 0;
        if (std::string(cs.factor) == "conv.n") {
            base_value = cs.n;
            n2 *= 2;
            doubled_value = n2;
        } else if (std::string(cs.factor) == "conv.k") {
            base_value = cs.k;
            k2 *= 2;
            doubled_value = k2;
        } else {
            base_value = cs.f;
            f2 *= 2;
            doubled_value = f2;
        }
        ScalingRow row;
        row.factor = cs.factor;
        row.base = base_value;
        row.doubled = doubled_value;
        row.base_ms = detail::median_ms(
            [&] {
                benchmark_sink =
                    detail::conv_once(B, cs.n, cs.k, C, cs.f, rng);
            },
            trials);
        row.doubled_ms = detail::median_ms(
            [&] { benchmark_sink = detail::conv_once(B, n2, k2, C, f2, rng); },
            trials);
        row.ratio = row.doubled_ms / row.base_ms;
        row.linear = row.ratio >= report.band_lo && row.ratio <= report.band_hi;
        report.all_linear = report.all_linear && row.linear;
        report.rows.push_back(row);
    }

    // Dense stack: measured width 4096 doubling to 8192, others 64.
    const std::size_t DB = 256, wide = 4096, narrow = 64;
    const char* dense_factors[] = {"dense.i", "dense.j", "dense.k",
                                   "dense.l"};
    for (std::size_t which = 0; which < 4; ++which) {
        std::size_t w[4] = {narrow, narrow, narrow, narrow};
        w[which] = wide;
        std::size_t w2[4] = {w[0], w[1], w[2], w[3]};
        w2[which] = wide * 2;
        ScalingRow row;
        row.factor = dense_factors[which];
        row.base = wide;
        row.doubled = wide * 2;
        row.base_ms = detail::median_ms(
            [&] {
                benchmark_sink =
                    detail::dense_once(DB, w[0], w[1], w[2], w[3], rng);
            },
            trials);
        row.doubled_ms = detail::median_ms(
            [&] {
                benchmark_sink =
                    detail::dense_once(DB, w2[0], w2[1], w2[2], w2[3], rng);
            },
            trials);
        row.ratio = row.doubled_ms / row.base_ms;
        row.linear = row.ratio >= report.band_lo && row.ratio <= report.band_hi;
        report.all_linear = report.all_linear && row.linear;
        report.rows.push_back(row);
    }

    // Edge case: kernel as long as the signal itself.
    report.edge_n = 512;
    report.edge_ms = detail::median_ms(
        [&] {
            benchmark_sink = detail::conv_once(8, report.edge_n,
                                               report.edge_n, C, 8, rng);
        },
        trials);
    report.edge_completed = std::isfinite(benchmark_sink);
    return report;
}

inline kv::Document scaling_report_document(const ScalingReport& report) {
    kv::Document doc;
    doc.add("version", "1");
    doc.add("trials", std::to_string(report.trials));
    doc.add("band", kv::format_double(report.band_lo) + "," +
                        kv::format_double(report.band_hi));
    for (const auto& row : report.rows) {
        const std::string p = row.factor + ".";
        doc.add(p + "base", std::to_string(row.base));
        doc.add(p + "doubled", std::to_string(row.doubled));
        doc.add(p + "base_ms", kv::format_double(row.base_ms));
        doc.add(p + "doubled_ms", kv::format_double(row.doubled_ms));
        doc.add(p + "ratio", kv::format_double(row.ratio));
        doc.add(p + "linear", row.linear ? "yes" : "no");
    }
    doc.add("edge.n", std::to_string(report.edge_n));
    doc.add("edge.ms", kv::format_double(report.edge_ms));
    doc.add("edge.completed", report.edge_completed ? "yes" : "no");
    doc.add("all_linear", report.all_linear ? "yes" : "no");
    return doc;
}

} // namespace ihards::benchmark
