#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"
#include "ihards/labelmap.hpp"

namespace ihards::ingest {

namespace detail {

inline std::optional<double> parse_number(std::string_view token) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    return value;
}

inline std::optional<long> parse_integer(std::string_view token) {
    long value = 0;
    auto [ptr, ec] =
        std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
        return std::nullopt;
    return value;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                          s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline void split_whitespace(std::string_view line,
                             std::vector<std::string_view>& out) {
    out.clear();
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() &&
               (line[i] == ' ' || line[i] == '\t' || line[i] == '\r'))
            ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' &&
               line[i] != '\r')
            ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
}

inline void split_char(std::string_view line, char delim,
                       std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("missing or unreadable file: " + path.string());
    }
    return in;
}

} // namespace detail

// Lookup in the label map; Drop comes back as nullopt, unknown labels throw.
inline std::optional<ActivityClass> map_to_canonical_labels(
    const std::string& raw_label, const LabelMap& map) {
    return map.map(raw_label);
}

// ---------------------------------------------------------------------------
// UCI-HAR: directory with train/ and test/ subtrees holding X_*.txt
// (whitespace-separated rows of 561 floats) and y_*.txt (one activity id per
// row), plus activity_labels.txt mapping ids to names. Train rows precede
// test rows in the output.
// ---------------------------------------------------------------------------

inline std::map<long, std::string> load_uci_activity_names(
    const std::filesystem::path& path) {
    auto in = detail::open_or_throw(path);
    std::map<long, std::string> names;
    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string_view> tokens;
    while (std::getline(in, line)) {
        ++lineno;
        detail::split_whitespace(line, tokens);
        if (tokens.empty()) continue;
        if (tokens.size() != 2) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected \"<id> <name>\"");
        }
        auto id = detail::parse_integer(tokens[0]);
        if (!id) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": bad activity id");
        }
        names[*id] = std::string(tokens[1]);
    }
    return names;
}

namespace detail {

inline void load_uci_partition(const std::filesystem::path& x_path,
                               const std::filesystem::path& y_path,
                               const std::map<long, std::string>& names,
                               const LabelMap& map, CanonicalFrame& frame,
                               ParseStats& stats) {
    auto xin = open_or_throw(x_path);
    auto yin = open_or_throw(y_path);

    std::vector<std::string_view> tokens;
    std::vector<float> row(kUciCols);
    std::string xline, yline;
    std::size_t lineno = 0;
    while (std::getline(xin, xline)) {
        ++lineno;
        split_whitespace(xline, tokens);
        if (tokens.empty()) continue;  // tolerate a trailing blank line
        if (tokens.size() != kUciCols) {
            throw ParseError(x_path.string() + ":" + std::to_string(lineno) +
                             ": expected 561 values, got " +
                             std::to_string(tokens.size()));
        }
        for (std::size_t c = 0; c < kUciCols; ++c) {
            auto v = parse_number(tokens[c]);
            if (!v) {
                throw ParseError(x_path.string() + ":" +
                                 std::to_string(lineno) +
                                 ": non-numeric token \"" +
                                 std::string(tokens[c]) + "\"");
            }
            row[c] = static_cast<float>(*v);
        }

        std::string_view ytoken;
        do {
            if (!std::getline(yin, yline)) {
                throw StructuralError(x_path.string() + " and " +
                                      y_path.string() +
                                      ": row count mismatch");
            }
            ytoken = trim(yline);
        } while (ytoken.empty());
        auto id = parse_integer(ytoken);
        if (!id) {
            throw ParseError(y_path.string() + ": bad label \"" +
                             std::string(ytoken) + "\"");
        }
        auto name_it = names.find(*id);
        if (name_it == names.end()) {
            throw MappingError(y_path.string() + ": activity id " +
                               std::to_string(*id) +
                               " not in activity_labels.txt");
        }

        ++stats.rows_in;
        auto cls = map_to_canonical_labels(name_it->second, map);
        if (!cls) {
            ++stats.rows_label_filtered;
            continue;
        }
        frame.push_row(row, static_cast<std::uint8_t>(*cls));
        ++stats.rows_emitted;
    }
    // Any leftover non-blank y rows mean the files disagree.
    while (std::getline(yin, yline)) {
        if (!trim(yline).empty()) {
            throw StructuralError(x_path.string() + " and " + y_path.string() +
                                  ": row count mismatch");
        }
    }
}

} // namespace detail

inline CanonicalFrame load_uci_har(const std::filesystem::path& dir,
                                   const LabelMap& map,
                                   ParseStats* stats_out = nullptr) {
    const auto names = load_uci_activity_names(dir / "activity_labels.txt");

    CanonicalFrame frame;
    frame.source = SourceId::UciHar;
    frame.cols = kUciCols;
    ParseStats stats;
    detail::load_uci_partition(dir / "train" / "X_train.txt",
                               dir / "train" / "y_train.txt", names, map,
                               frame, stats);
    detail::load_uci_partition(dir / "test" / "X_test.txt",
                               dir / "test" / "y_test.txt", names, map, frame,
                               stats);
    if (stats_out) *stats_out = stats;
    return frame;
}

// ---------------------------------------------------------------------------
// WISDM raw accelerometer log: lines "user,activity,timestamp,x,y,z;". The
// public file contains broken lines; those are skipped and counted, and a
// file where more than half the lines are malformed is rejected as being
// the wrong file altogether.
// ---------------------------------------------------------------------------

inline CanonicalFrame load_wisdm_raw(const std::filesystem::path& path,
                                     const LabelMap& map,
                                     ParseStats* stats_out = nullptr) {
    auto in = detail::open_or_throw(path);

    CanonicalFrame frame;
    frame.source = SourceId::Wisdm;
    frame.cols = kWisdmCols;
    ParseStats stats;

    std::string line;
    std::vector<std::string_view> fields;
    while (std::getline(in, line)) {
        ++stats.rows_in;
        std::string_view body = detail::trim(line);
        if (!body.empty() && body.back() == ';') {
            body.remove_suffix(1);
            body = detail::trim(body);
        }
        if (body.empty()) {
            ++stats.rows_malformed;
            continue;
        }
        detail::split_char(body, ',', fields);
        if (fields.size() != 6) {
            ++stats.rows_malformed;
            continue;
        }
        const std::string activity(detail::trim(fields[1]));
        auto x = detail::parse_number(detail::trim(fields[3]));
        auto y = detail::parse_number(detail::trim(fields[4]));
        auto z = detail::parse_number(detail::trim(fields[5]));
        if (activity.empty() || !x || !y || !z) {
            ++stats.rows_malformed;
            continue;
        }
        auto cls = map_to_canonical_labels(activity, map);
        if (!cls) {
            ++stats.rows_label_filtered;
            continue;
        }
        const float row[kWisdmCols] = {static_cast<float>(*x),
                                       static_cast<float>(*y),
                                       static_cast<float>(*z)};
        frame.push_row(row, static_cast<std::uint8_t>(*cls));
        ++stats.rows_emitted;
    }

    if (stats.rows_in > 0 && stats.rows_malformed * 2 > stats.rows_in) {
        throw ParseError(path.string() + ": " +
                         std::to_string(stats.rows_malformed) + " of " +
                         std::to_string(stats.rows_in) +
                         " lines malformed; this does not look like a WISDM "
                         "raw log");
    }
    if (stats_out) *stats_out = stats;
    return frame;
}

// ---------------------------------------------------------------------------
// KU-HAR: comma-separated rows; one column is the class code 0-17 (default:
// the last) and the features default to the 7 columns preceding it.
// ---------------------------------------------------------------------------

struct KuharColumns {
    // Empty feature_cols selects the 7 columns immediately before the label.
    std::vector<std::size_t> feature_cols;
    std::optional<std::size_t> label_col;  // default: last column
};

inline CanonicalFrame load_ku_har(const std::filesystem::path& path,
                                  const LabelMap& map,
                                  const KuharColumns& columns = {},
                                  ParseStats* stats_out = nullptr) {
    auto in = detail::open_or_throw(path);

    CanonicalFrame frame;
    frame.source = SourceId::KuHar;
    frame.cols = kKuharCols;
    ParseStats stats;

    std::string line;
    std::vector<std::string_view> fields;
    std::vector<float> row(kKuharCols);
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view body = detail::trim(line);
        if (body.empty()) continue;
        detail::split_char(body, ',', fields);

        const std::size_t label_col =
            columns.label_col.value_or(fields.size() - 1);
        std::vector<std::size_t> feats = columns.feature_cols;
        if (feats.empty()) {
            if (label_col < kKuharCols) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": fewer than 7 columns before the label");
            }
            for (std::size_t c = label_col - kKuharCols; c < label_col; ++c) {
                feats.push_back(c);
            }
        }
        if (feats.size() != kKuharCols) {
            throw ConfigError("KU-HAR feature selection must name exactly 7 "
                              "columns");
        }
        if (label_col >= fields.size()) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": label column " + std::to_string(label_col) +
                             " out of range");
        }

        auto code_raw = detail::parse_number(detail::trim(fields[label_col]));
        if (!code_raw || *code_raw != static_cast<long>(*code_raw) ||
            *code_raw < 0 || *code_raw > 17) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": class code outside 0-17: \"" +
                             std::string(detail::trim(fields[label_col])) +
                             "\"");
        }
        for (std::size_t i = 0; i < feats.size(); ++i) {
            if (feats[i] >= fields.size()) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": feature column " +
                                 std::to_string(feats[i]) + " out of range");
            }
            auto v = detail::parse_number(detail::trim(fields[feats[i]]));
            if (!v) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) +
                                 ": non-numeric cell at column " +
                                 std::to_string(feats[i]));
            }
            row[i] = static_cast<float>(*v);
        }

        ++stats.rows_in;
        const std::string code =
            std::to_string(static_cast<long>(*code_raw));
        auto cls = map_to_canonical_labels(code, map);
        if (!cls) {
            ++stats.rows_label_filtered;
            continue;
        }
        frame.push_row(row, static_cast<std::uint8_t>(*cls));
        ++stats.rows_emitted;
    }
    if (stats_out) *stats_out = stats;
    return frame;
}

} // namespace ihards::ingest
