#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ihards/arch.hpp"
#include "ihards/correlation.hpp"
#include "ihards/errors.hpp"
#include "ihards/ihds.hpp"
#include "ihards/integrate.hpp"
#include "ihards/manifest.hpp"
#include "ihards/network.hpp"
#include "ihards/tensor.hpp"

namespace ihards::nn {

// Everything needed to reproduce predictions: the architecture, the trained
// tensors (parameters + batch-norm running stats, canonical order), the
// feature mask over raw columns, and the standardization stats over the
// kept columns. `info` carries free-form metadata such as a metric snapshot.
struct Checkpoint {
    ArchSpec arch;
    std::size_t input_features = 0;
    correlation::FeatureMask mask;          // keep.empty() == no mask
    integrate::StandardizationStats stats;  // mean.empty() == no stats
    std::vector<std::pair<std::string, Tensor<float>>> tensors;
    kv::Document info;
};

inline Checkpoint checkpoint_from_network(Network<float>& net) {
    Checkpoint ckpt;
    ckpt.arch = net.spec;
    ckpt.input_features = net.input_features;
    for (const auto& p : net.named_parameters()) {
        ckpt.tensors.emplace_back(p.name, *p.value);
    }
    for (const auto& s : net.named_state()) {
        ckpt.tensors.emplace_back(s.name, *s.value);
    }
    return ckpt;
}

// Rebuild a runnable network from a checkpoint. The tensor list must match
// the architecture's canonical layout exactly.
inline Network<float> restore_network(const Checkpoint& ckpt) {
    Network<float> net =
        build_architecture<float>(ckpt.arch, ckpt.input_features, 0);
    std::vector<ParamRef<float>> slots = net.named_parameters();
    for (const auto& s : net.named_state()) slots.push_back(s);
    if (slots.size() != ckpt.tensors.size()) {
        throw FormatError("checkpoint lists " +
                          std::to_string(ckpt.tensors.size()) +
                          " tensors, architecture " + ckpt.arch.name +
                          " has " + std::to_string(slots.size()));
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& [name, tensor] = ckpt.tensors[i];
        if (name != slots[i].name) {
            throw FormatError("checkpoint tensor " + std::to_string(i) +
                              " is \"" + name + "\", expected \"" +
                              slots[i].name + "\"");
        }
        if (tensor.shape != slots[i].value->shape) {
            throw FormatError("checkpoint tensor " + name +
                              " has shape " + tensor.shape_string() +
                              ", expected " +
                              slots[i].value->shape_string());
        }
        *slots[i].value = tensor;
    }
    return net;
}

// ---------------------------------------------------------------------------
// IHCK container: magic "IHCK", u32 LE version, u32 LE header length, UTF-8
// key=value header, mask bitset (ceil(F/8) bytes, bit i of byte i/8, LSB
// first), standardization mean then std (f32 LE, kept columns), then each
// tensor as u32 rank, u32 dims..., f32 LE row-major data.
// ---------------------------------------------------------------------------

namespace ckio {

inline constexpr char kMagic[4] = {'I', 'H', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;

inline std::string build_header(const Checkpoint& ckpt) {
    kv::Document doc;
    arch_to_kv(ckpt.arch, doc, "arch.");
    doc.add("input_features", std::to_string(ckpt.input_features));
    doc.add("mask.columns", std::to_string(ckpt.mask.keep.size()));
    if (!ckpt.mask.keep.empty()) {
        doc.add("mask.kept", std::to_string(ckpt.mask.kept_count()));
        doc.add("mask.threshold", kv::format_double(ckpt.mask.threshold));
    }
    doc.add("stats.columns", std::to_string(ckpt.stats.mean.size()));
    doc.add("tensor_count", std::to_string(ckpt.tensors.size()));
    for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
        doc.add("tensor." + std::to_string(i), ckpt.tensors[i].first);
    }
    for (const auto& [k, v] : ckpt.info.entries()) {
        doc.add("info." + k, v);
    }
    return doc.serialize();
}

} // namespace ckio

inline void checkpoint_save(const Checkpoint& ckpt,
                            const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StructuralError("cannot open for writing: " + path.string());
    }
    std::string buf;
    buf.append(ckio::kMagic, 4);
    io::detail::put_u32(buf, ckio::kVersion);
    const std::string header = ckio::build_header(ckpt);
    io::detail::put_u32(buf, static_cast<std::uint32_t>(header.size()));
    buf += header;

    const std::size_t F = ckpt.mask.keep.size();
    std::string bitset((F + 7) / 8, '\0');
    for (std::size_t i = 0; i < F; ++i) {
        if (ckpt.mask.keep[i]) bitset[i >> 3] |= static_cast<char>(1 << (i & 7));
    }
    buf += bitset;

    for (float v : ckpt.stats.mean) io::detail::put_f32(buf, v);
    for (float v : ckpt.stats.stddev) io::detail::put_f32(buf, v);

    for (const auto& [name, tensor] : ckpt.tensors) {
        io::detail::put_u32(buf, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape) {
            io::detail::put_u32(buf, static_cast<std::uint32_t>(d));
        }
        for (float v : tensor.data) io::detail::put_f32(buf, v);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw StructuralError("write failed: " + path.string());
    }
}

inline Checkpoint checkpoint_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StructuralError("missing or unreadable file: " + path.string());
    }
    auto read_exact = [&](char* dst, std::size_t n, const char* what) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) {
            throw FormatError(path.string() +
                              ": truncated checkpoint while reading " + what);
        }
    };

    char head[12];
    read_exact(head, sizeof head, "header");
    if (std::memcmp(head, ckio::kMagic, 4) != 0) {
        throw FormatError(path.string() +
                          ": not a checkpoint file (bad magic)");
    }
    const auto* h = reinterpret_cast<const unsigned char*>(head);
    const std::uint32_t version = io::detail::get_u32(h + 4);
    if (version != ckio::kVersion) {
        throw FormatError(path.string() + ": unsupported checkpoint version " +
                          std::to_string(version));
    }
    const std::uint32_t header_len = io::detail::get_u32(h + 8);
    std::string header(header_len, '\0');
    read_exact(header.data(), header_len, "header text");
    kv::Document doc = kv::Document::parse(header, path.string());

    Checkpoint ckpt;
    ckpt.arch = arch_from_kv(doc, "arch.");
    ckpt.input_features = doc.require_u64("input_features");

    const std::size_t F = doc.require_u64("mask.columns");
    if (F > 0) {
        std::string bitset((F + 7) / 8, '\0');
        read_exact(bitset.data(), bitset.size(), "feature mask");
        ckpt.mask.keep.resize(F);
        for (std::size_t i = 0; i < F; ++i) {
            ckpt.mask.keep[i] =
                (static_cast<unsigned char>(bitset[i >> 3]) >> (i & 7)) & 1;
        }
        ckpt.mask.threshold = doc.require_double("mask.threshold");
        const std::size_t declared = doc.require_u64("mask.kept");
        if (declared != ckpt.mask.kept_count()) {
            throw FormatError(path.string() + ": mask bitset has " +
                              std::to_string(ckpt.mask.kept_count()) +
                              " kept columns, header says " +
                              std::to_string(declared));
        }
    }

    const std::size_t S = doc.require_u64("stats.columns");
    if (S > 0) {
        std::vector<char> raw(8 * S);
        read_exact(raw.data(), raw.size(), "standardization stats");
        const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
        ckpt.stats.mean.resize(S);
        ckpt.stats.stddev.resize(S);
        for (std::size_t i = 0; i < S; ++i) {
            ckpt.stats.mean[i] = io::detail::get_f32(p + 4 * i);
            ckpt.stats.stddev[i] = io::detail::get_f32(p + 4 * (S + i));
        }
    }

    const std::size_t tensor_count = doc.require_u64("tensor_count");
    for (std::size_t i = 0; i < tensor_count; ++i) {
        const std::string name = doc.require("tensor." + std::to_string(i));
        char rank_raw[4];
        read_exact(rank_raw, 4, "tensor rank");
        const std::uint32_t rank = io::detail::get_u32(
            reinterpret_cast<const unsigned char*>(rank_raw));
        if (rank == 0 || rank > 8) {
            throw FormatError(path.string() + ": implausible tensor rank " +
                              std::to_string(rank));
        }
        std::vector<char> dims_raw(4 * rank);
        read_exact(dims_raw.data(), dims_raw.size(), "tensor dims");
        std::vector<std::size_t> dims(rank);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            dims[d] = io::detail::get_u32(
                reinterpret_cast<const unsigned char*>(dims_raw.data()) +
                4 * d);
            numel *= dims[d];
        }
        Tensor<float> tensor(dims);
        std::vector<char> data_raw(4 * numel);
        read_exact(data_raw.data(), data_raw.size(), "tensor data");
        const auto* p =
            reinterpret_cast<const unsigned char*>(data_raw.data());
        for (std::size_t j = 0; j < numel; ++j) {
            tensor[j] = io::detail::get_f32(p + 4 * j);
        }
        ckpt.tensors.emplace_back(name, std::move(tensor));
    }

    char extra;
    if (in.read(&extra, 1); in.gcount() != 0) {
        throw FormatError(path.string() + ": trailing bytes after tensors");
    }

    for (const auto& [k, v] : doc.entries()) {
        if (k.starts_with("info.")) ckpt.info.add(k.substr(5), v);
    }
    return ckpt;
}

} // namespace ihards::nn
