#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ihards/errors.hpp"

namespace ihards::kv {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(context + ": bad number \"" + std::string(s) + "\"");
    }
    return v;
}

inline std::uint64_t parse_u64(std::string_view s,
                               const std::string& context) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError(context + ": bad integer \"" + std::string(s) +
                         "\"");
    }
    return v;
}

inline std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(',', start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            return out;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool parse_bool(std::string_view s, const std::string& context) {
    if (s == "yes" || s == "true" || s == "1") return true;
    if (s == "no" || s == "false" || s == "0") return false;
    throw ParseError(context + ": bad boolean \"" + std::string(s) + "\"");
}

// An ordered key=value document: the manifest/config/report interchange
// format. Insertion order is preserved so serialization is canonical; '#'
// lines and blank lines are comments on input and never round-tripped.
class Document {
public:
    using Entry = std::pair<std::string, std::string>;

    void add(std::string key, std::string value) {
        entries_.emplace_back(std::move(key), std::move(value));
    }
    void set(const std::string& key, std::string value) {
        for (auto& e : entries_) {
            if (e.first == key) {
                e.second = std::move(value);
                return;
            }
        }
        add(key, std::move(value));
    }

    const std::string* find(std::string_view key) const {
        for (const auto& e : entries_) {
            if (e.first == key) return &e.second;
        }
        return nullptr;
    }
    bool has(std::string_view key) const { return find(key) != nullptr; }

    const std::string& require(const std::string& key) const {
        if (const auto* v = find(key)) return *v;
        throw FormatError(origin_ + ": missing required key \"" + key +
                          "\"");
    }
    std::string get_or(std::string_view key, std::string fallback) const {
        if (const auto* v = find(key)) return *v;
        return fallback;
    }
    std::uint64_t require_u64(const std::string& key) const {
        return parse_u64(require(key), origin_ + ": " + key);
    }
    double require_double(const std::string& key) const {
        return parse_double(require(key), origin_ + ": " + key);
    }
    bool require_bool(const std::string& key) const {
        return parse_bool(require(key), origin_ + ": " + key);
    }

    std::vector<std::string> values_of(std::string_view key) const {
        std::vector<std::string> out;
        for (const auto& e : entries_) {
            if (e.first == key) out.push_back(e.second);
        }
        return out;
    }

    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& origin() const { return origin_; }
    void set_origin(std::string origin) { origin_ = std::move(origin); }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : entries_) {
            out += k;
            out += '=';
            out += v;
            out += '\n';
        }
        return out;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::trunc | std::ios::binary);
        if (!out) {
            throw StructuralError("cannot open for writing: " +
                                  path.string());
        }
        const std::string text = serialize();
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) {
            throw StructuralError("write failed: " + path.string());
        }
    }

    static Document parse(std::string_view text, std::string origin) {
        Document doc;
        doc.origin_ = std::move(origin);
        std::size_t lineno = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t nl = text.find('\n', pos);
            std::string_view line =
                text.substr(pos, nl == std::string_view::npos ? text.size() -
                                                                    pos
                                                              : nl - pos);
            pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (line.find_first_not_of(" \t") == std::string_view::npos ||
                line.front() == '#') {
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos || eq == 0) {
                throw ParseError(doc.origin_ + ":" + std::to_string(lineno) +
                                 ": expected key=value");
            }
            doc.add(std::string(line.substr(0, eq)),
                    std::string(line.substr(eq + 1)));
        }
        return doc;
    }

    static Document load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw StructuralError("missing or unreadable file: " +
                                  path.string());
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str(), path.string());
    }

private:
    std::vector<Entry> entries_;
    std::string origin_ = "<memory>";
};

} // namespace ihards::kv
