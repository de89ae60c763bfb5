#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ihards/errors.hpp"

namespace ihards {

// The five activity classes shared by all three source datasets, with
// fixed integer codes used everywhere downstream.
enum class ActivityClass : std::uint8_t {
    Stand = 0,
    Sit = 1,
    Walk = 2,
    StairDown = 3,
    StairUp = 4,
};

constexpr std::size_t kClassCount = 5;

inline const char* activity_name(ActivityClass c) {
    switch (c) {
        case ActivityClass::Stand: return "Stand";
        case ActivityClass::Sit: return "Sit";
        case ActivityClass::Walk: return "Walk";
        case ActivityClass::StairDown: return "Stair-down";
        case ActivityClass::StairUp: return "Stair-up";
    }
    return "?";
}

inline std::optional<ActivityClass> activity_from_name(const std::string& name) {
    for (std::size_t c = 0; c < kClassCount; ++c) {
        auto cls = static_cast<ActivityClass>(c);
        if (name == activity_name(cls)) return cls;
    }
    return std::nullopt;
}

enum class SourceId : std::uint8_t { UciHar = 0, Wisdm = 1, KuHar = 2 };

inline const char* source_name(SourceId id) {
    switch (id) {
        case SourceId::UciHar: return "UCI-HAR";
        case SourceId::Wisdm: return "WISDM";
        case SourceId::KuHar: return "KU-HAR";
    }
    return "?";
}

// Feature column counts after the documented column selection.
constexpr std::size_t kUciCols = 561;
constexpr std::size_t kWisdmCols = 3;
constexpr std::size_t kKuharCols = 7;
constexpr std::size_t kIhardsCols = kUciCols + kWisdmCols + kKuharCols;  // 571

inline std::size_t expected_cols(SourceId id) {
    switch (id) {
        case SourceId::UciHar: return kUciCols;
        case SourceId::Wisdm: return kWisdmCols;
        case SourceId::KuHar: return kKuharCols;
    }
    return 0;
}

// Row-major feature matrix with per-row class labels; the unit of exchange
// between pipeline stages.
struct CanonicalFrame {
    SourceId source = SourceId::UciHar;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> features;       // rows * cols
    std::vector<std::uint8_t> labels;  // each in 0..4

    std::span<const float> row(std::size_t r) const {
        return {features.data() + r * cols, cols};
    }
    std::span<float> row(std::size_t r) {
        return {features.data() + r * cols, cols};
    }

    void push_row(std::span<const float> values, std::uint8_t label) {
        features.insert(features.end(), values.begin(), values.end());
        labels.push_back(label);
        ++rows;
    }

    void validate() const {
        if (labels.size() != rows || features.size() != rows * cols) {
            throw StructuralError("CanonicalFrame: inconsistent dimensions");
        }
        for (std::uint8_t l : labels) {
            if (l >= kClassCount) {
                throw StructuralError("CanonicalFrame: label out of range");
            }
        }
        for (float v : features) {
            if (!std::isfinite(v)) {
                throw StructuralError("CanonicalFrame: non-finite feature");
            }
        }
    }
};

// Per-source bookkeeping satisfying the row-conservation property
// rows_in == rows_emitted + rows_label_filtered + rows_malformed.
struct ParseStats {
    std::size_t rows_in = 0;
    std::size_t rows_emitted = 0;
    std::size_t rows_label_filtered = 0;
    std::size_t rows_malformed = 0;
};

} // namespace ihards
