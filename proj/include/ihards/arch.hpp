#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"
#include "ihards/manifest.hpp"

namespace ihards::nn {

// One column of the architecture table: the conv stack, the shared pool and
// dropout settings, the dense tail, and whether hidden dense layers carry
// batch normalization.
struct ArchSpec {
    std::string name;
    std::vector<std::size_t> conv_filters;
    std::vector<std::size_t> conv_kernels;
    std::size_t pool_size = 2;
    double conv_dropout = 0.5;
    std::vector<std::size_t> dense_units;  // last entry is the class count
    std::vector<double> dense_dropouts;    // one per hidden dense layer
    bool batch_norm = false;

    void validate() const {
        if (name.empty()) throw ConfigError("architecture needs a name");
        if (conv_filters.empty() ||
            conv_filters.size() != conv_kernels.size()) {
            throw ConfigError(name + ": conv_filters and conv_kernels must "
                                     "be non-empty lists of equal length");
        }
        for (std::size_t v : conv_filters) {
            if (v == 0) throw ConfigError(name + ": zero conv filter count");
        }
        for (std::size_t v : conv_kernels) {
            if (v == 0) throw ConfigError(name + ": zero conv kernel size");
        }
        if (pool_size == 0) throw ConfigError(name + ": zero pool size");
        if (dense_units.empty() || dense_units.back() != kClassCount) {
            throw ConfigError(name + ": dense_units must end in " +
                              std::to_string(kClassCount));
        }
        for (std::size_t v : dense_units) {
            if (v == 0) throw ConfigError(name + ": zero dense width");
        }
        if (dense_dropouts.size() != dense_units.size() - 1) {
            throw ConfigError(name + ": dense_dropouts must list one rate "
                                     "per hidden dense layer");
        }
        for (double r : dense_dropouts) {
            if (!(r >= 0.0 && r < 1.0)) {
                throw ConfigError(name + ": dropout rates must lie in [0,1)");
            }
        }
        if (!(conv_dropout >= 0.0 && conv_dropout < 1.0)) {
            throw ConfigError(name + ": dropout rates must lie in [0,1)");
        }
    }
};

namespace detail {

inline ArchSpec make_arch(std::string name,
                          std::vector<std::size_t> filters,
                          std::vector<std::size_t> kernels,
                          std::vector<std::size_t> dense, bool bn) {
    ArchSpec spec;
    spec.name = std::move(name);
    spec.conv_filters = std::move(filters);
    spec.conv_kernels = std::move(kernels);
    spec.dense_units = std::move(dense);
    spec.dense_dropouts.assign(spec.dense_units.size() - 1, 0.5);
    spec.batch_norm = bn;
    return spec;
}

} // namespace detail

inline const std::vector<ArchSpec>& builtin_archs() {
    static const std::vector<ArchSpec> archs = {
        detail::make_arch("arch1", {32, 16}, {7, 3}, {256, 64, 5}, false),
        detail::make_arch("arch2", {32, 16}, {7, 3}, {256, 64, 5}, true),
        detail::make_arch("arch3", {32}, {3}, {256, 64, 5}, true),
        detail::make_arch("arch4", {16}, {3}, {256, 5}, true),
        detail::make_arch("arch5", {8}, {3}, {64, 5}, true),
    };
    return archs;
}

inline const ArchSpec& arch_by_name(const std::string& name) {
    std::string valid;
    for (const auto& a : builtin_archs()) {
        if (a.name == name) return a;
        if (!valid.empty()) valid += ", ";
        valid += a.name;
    }
    throw ConfigError("unknown architecture \"" + name + "\" (valid: " +
                      valid + ", or a spec file path)");
}

// ---------------------------------------------------------------------------
// Spec (de)serialization: the same key=value shape used by config files.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += kv::format_double(v[i]);
    }
    return s;
}

inline std::vector<std::size_t> parse_size_list(const std::string& s,
                                                const std::string& context) {
    std::vector<std::size_t> out;
    for (const auto& item : kv::split_list(s)) {
        out.push_back(kv::parse_u64(item, context));
    }
    return out;
}

inline std::vector<double> parse_double_list(const std::string& s,
                                             const std::string& context) {
    std::vector<double> out;
    for (const auto& item : kv::split_list(s)) {
        out.push_back(kv::parse_double(item, context));
    }
    return out;
}

} // namespace detail

inline void arch_to_kv(const ArchSpec& spec, kv::Document& doc,
                       const std::string& prefix = "") {
    doc.add(prefix + "name", spec.name);
    doc.add(prefix + "conv_filters", detail::join_sizes(spec.conv_filters));
    doc.add(prefix + "conv_kernels", detail::join_sizes(spec.conv_kernels));
    doc.add(prefix + "pool_size", std::to_string(spec.pool_size));
    doc.add(prefix + "conv_dropout", kv::format_double(spec.conv_dropout));
    doc.add(prefix + "dense_units", detail::join_sizes(spec.dense_units));
    doc.add(prefix + "dense_dropouts",
            detail::join_doubles(spec.dense_dropouts));
    doc.add(prefix + "batch_norm", spec.batch_norm ? "yes" : "no");
}

inline ArchSpec arch_from_kv(const kv::Document& doc,
                             const std::string& prefix = "") {
    const std::string& origin = doc.origin();
    ArchSpec spec;
    spec.name = doc.require(prefix + "name");
    spec.conv_filters = detail::parse_size_list(
        doc.require(prefix + "conv_filters"), origin + ": conv_filters");
    spec.conv_kernels = detail::parse_size_list(
        doc.require(prefix + "conv_kernels"), origin + ": conv_kernels");
    spec.pool_size = doc.require_u64(prefix + "pool_size");
    spec.conv_dropout = doc.require_double(prefix + "conv_dropout");
    spec.dense_units = detail::parse_size_list(
        doc.require(prefix + "dense_units"), origin + ": dense_units");
    spec.dense_dropouts = detail::parse_double_list(
        doc.require(prefix + "dense_dropouts"), origin + ": dense_dropouts");
    spec.batch_norm = doc.require_bool(prefix + "batch_norm");
    spec.validate();
    return spec;
}

inline ArchSpec load_arch_spec(const std::filesystem::path& path) {
    return arch_from_kv(kv::Document::load(path));
}

// Resolve an --arch argument: a builtin name, else a spec file path.
inline ArchSpec resolve_arch(const std::string& name_or_path) {
    for (const auto& a : builtin_archs()) {
        if (a.name == name_or_path) return a;
    }
    if (std::filesystem::exists(name_or_path)) {
        return load_arch_spec(name_or_path);
    }
    return arch_by_name(name_or_path);  // throws with the valid-name list
}

// ---------------------------------------------------------------------------
// Shape walk: the layer-by-layer length/width algebra (conv n-k+1, pool
// floor(n/p), flatten L*C), validated against the input size.
// ---------------------------------------------------------------------------

struct ShapeWalk {
    std::vector<std::size_t> conv_lengths;  // signal length after each conv
    std::size_t pooled_length = 0;
    std::size_t flatten_width = 0;
    std::vector<std::size_t> dense_widths;  // == spec.dense_units
};

inline ShapeWalk walk_shapes(const ArchSpec& spec,
                             std::size_t input_features) {
    spec.validate();
    ShapeWalk walk;
    std::size_t length = input_features;
    for (std::size_t i = 0; i < spec.conv_filters.size(); ++i) {
        if (length < spec.conv_kernels[i]) {
            throw ConfigError(spec.name + ": signal length " +
                              std::to_string(length) +
                              " shorter than conv kernel " +
                              std::to_string(spec.conv_kernels[i]));
        }
        length = length - spec.conv_kernels[i] + 1;
        walk.conv_lengths.push_back(length);
    }
    if (length < spec.pool_size) {
        throw ConfigError(spec.name + ": signal length " +
                          std::to_string(length) + " shorter than pool " +
                          std::to_string(spec.pool_size));
    }
    walk.pooled_length = length / spec.pool_size;
    walk.flatten_width = walk.pooled_length * spec.conv_filters.back();
    walk.dense_widths = spec.dense_units;
    return walk;
}

} // namespace ihards::nn
