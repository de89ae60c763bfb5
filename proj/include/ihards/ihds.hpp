#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"

namespace ihards {

// The integrated dataset: a dense row-major feature matrix with one activity
// label per row. Also used for masked/standardized derivatives, so `cols` is
// not fixed at 571.
struct IhardsDataset {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> features;       // rows * cols, row-major
    std::vector<std::uint8_t> labels;  // empty iff labels are absent
    std::uint64_t seed_used = 0;       // recorded by the integration step

    bool has_labels() const { return !labels.empty() || rows == 0; }

    std::array<std::size_t, kClassCount> class_counts() const {
        std::array<std::size_t, kClassCount> counts{};
        for (std::uint8_t l : labels) {
            if (l < kClassCount) ++counts[l];
        }
        return counts;
    }

    std::span<const float> row(std::size_t r) const {
        return {features.data() + r * cols, cols};
    }
    std::span<float> row(std::size_t r) {
        return {features.data() + r * cols, cols};
    }

    void validate() const {
        if (features.size() != rows * cols) {
            throw StructuralError("dataset feature buffer has " +
                                  std::to_string(features.size()) +
                                  " values, expected " +
                                  std::to_string(rows * cols));
        }
        if (!labels.empty() && labels.size() != rows) {
            throw StructuralError("dataset has " +
                                  std::to_string(labels.size()) +
                                  " labels for " + std::to_string(rows) +
                                  " rows");
        }
        for (std::uint8_t l : labels) {
            if (l >= kClassCount) {
                throw StructuralError("label " + std::to_string(l) +
                                      " outside 0-4");
            }
        }
    }
};

namespace io {

inline constexpr char kIhdsMagic[4] = {'I', 'H', 'D', 'S'};
inline constexpr std::uint32_t kIhdsVersion = 1;
inline constexpr std::size_t kIhdsCsvRowLimit = 100000;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline float get_f32(const unsigned char* p) {
    return std::bit_cast<float>(get_u32(p));
}

inline void read_exact(std::istream& in, char* buf, std::size_t n,
                       const std::string& what) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FormatError("truncated IHDS file while reading " + what);
    }
}

} // namespace detail

inline void save_ihds(const std::filesystem::path& path,
                      const IhardsDataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw StructuralError("cannot open for writing: " + path.string());
    }
    const bool labels_present = !data.labels.empty();

    std::string buf;
    buf.reserve(1 << 20);
    buf.append(kIhdsMagic, 4);
    detail::put_u32(buf, kIhdsVersion);
    detail::put_u32(buf, static_cast<std::uint32_t>(data.cols));
    detail::put_u64(buf, static_cast<std::uint64_t>(data.rows));
    buf.push_back(labels_present ? '\x01' : '\x00');

    for (std::size_t r = 0; r < data.rows; ++r) {
        auto row = data.row(r);
        for (float v : row) detail::put_f32(buf, v);
        if (labels_present) buf.push_back(static_cast<char>(data.labels[r]));
        if (buf.size() >= (1 << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw StructuralError("write failed: " + path.string());
    }
}

inline IhardsDataset load_ihds(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw StructuralError("missing or unreadable file: " + path.string());
    }

    char header[21];  // magic 4, version 4, cols 4, rows 8, labels byte 1
    detail::read_exact(in, header, sizeof header, "header");
    if (std::memcmp(header, kIhdsMagic, 4) != 0) {
        throw FormatError(path.string() + ": not an IHDS file (bad magic)");
    }
    const auto* h = reinterpret_cast<const unsigned char*>(header);
    const std::uint32_t version = detail::get_u32(h + 4);
    if (version != kIhdsVersion) {
        throw FormatError(path.string() + ": unsupported IHDS version " +
                          std::to_string(version));
    }
    const std::uint32_t cols = detail::get_u32(h + 8);
    const std::uint64_t rows = detail::get_u64(h + 12);
    const unsigned char labels_present = h[20];
    if (labels_present > 1) {
        throw FormatError(path.string() + ": bad labels_present byte");
    }
    if (cols == 0 && rows > 0) {
        throw FormatError(path.string() + ": zero feature count");
    }

    IhardsDataset data;
    data.rows = static_cast<std::size_t>(rows);
    data.cols = cols;
    data.features.resize(data.rows * data.cols);
    if (labels_present) data.labels.resize(data.rows);

    const std::size_t row_bytes = 4 * cols + (labels_present ? 1 : 0);
    std::vector<char> buf(row_bytes);
    for (std::size_t r = 0; r < data.rows; ++r) {
        detail::read_exact(in, buf.data(), row_bytes,
                           "row " + std::to_string(r));
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
        float* dst = data.features.data() + r * cols;
        for (std::uint32_t c = 0; c < cols; ++c) {
            dst[c] = detail::get_f32(p + 4 * c);
        }
        if (labels_present) data.labels[r] = p[4 * cols];
    }
    // A stray trailing byte means the header lied about the row count.
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0) {
        throw FormatError(path.string() + ": trailing bytes after last row");
    }
    data.validate();
    return data;
}

// Plain-text view of a dataset: header "f0,...,f{N-1}[,label]" then one row
// per line, floats printed shortest-round-trip. Refused above 100,000 rows —
// full-scale exports belong in the binary container.
inline void export_ihds_csv(const std::filesystem::path& path,
                            const IhardsDataset& data) {
    data.validate();
    if (data.rows > kIhdsCsvRowLimit) {
        throw CapacityError("CSV export limited to " +
                            std::to_string(kIhdsCsvRowLimit) + " rows; got " +
                            std::to_string(data.rows));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw StructuralError("cannot open for writing: " + path.string());
    }
    const bool labels_present = !data.labels.empty();

    std::string line;
    for (std::size_t c = 0; c < data.cols; ++c) {
        if (c) line.push_back(',');
        line += "f" + std::to_string(c);
    }
    if (labels_present) line += data.cols ? ",label" : "label";
    line.push_back('\n');
    out << line;

    char num[64];
    for (std::size_t r = 0; r < data.rows; ++r) {
        line.clear();
        auto row = data.row(r);
        for (std::size_t c = 0; c < data.cols; ++c) {
            if (c) line.push_back(',');
            auto [ptr, ec] = std::to_chars(num, num + sizeof num, row[c]);
            line.append(num, ptr);
        }
        if (labels_present) {
            if (data.cols) line.push_back(',');
            line += std::to_string(data.labels[r]);
        }
        line.push_back('\n');
        out << line;
    }
    if (!out) {
        throw StructuralError("write failed: " + path.string());
    }
}

} // namespace io
} // namespace ihards
