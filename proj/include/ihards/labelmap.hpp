#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"

namespace ihards {

// Total mapping from a source dataset's raw labels to the five shared
// classes, or Drop (nullopt) for labels outside the shared set. Defaults
// ship as editable text files under data/labelmaps/; the built-in tables
// below mirror those files so the library works without a data directory.
class LabelMap {
public:
    using Entry = std::optional<ActivityClass>;  // nullopt = Drop

    void set(const std::string& raw, Entry cls) { entries_[raw] = cls; }

    bool contains(const std::string& raw) const {
        return entries_.count(raw) != 0;
    }

    // Deterministic lookup; unknown raw labels are a mapping error.
    Entry map(const std::string& raw) const {
        auto it = entries_.find(raw);
        if (it == entries_.end()) {
            throw MappingError("unknown source label: \"" + raw + "\"");
        }
        return it->second;
    }

    // A source is usable for integration only if every class is reachable.
    bool covers_all_classes() const {
        bool seen[kClassCount] = {};
        for (const auto& [raw, cls] : entries_) {
            if (cls) seen[static_cast<std::size_t>(*cls)] = true;
        }
        for (bool s : seen) {
            if (!s) return false;
        }
        return true;
    }

    std::size_t size() const { return entries_.size(); }

    const std::unordered_map<std::string, Entry>& entries() const {
        return entries_;
    }

private:
    std::unordered_map<std::string, Entry> entries_;
};

inline LabelMap default_uci_label_map() {
    LabelMap m;
    m.set("STANDING", ActivityClass::Stand);
    m.set("SITTING", ActivityClass::Sit);
    m.set("WALKING", ActivityClass::Walk);
    m.set("WALKING_DOWNSTAIRS", ActivityClass::StairDown);
    m.set("WALKING_UPSTAIRS", ActivityClass::StairUp);
    m.set("LAYING", std::nullopt);
    return m;
}

inline LabelMap default_wisdm_label_map() {
    LabelMap m;
    m.set("Standing", ActivityClass::Stand);
    m.set("Sitting", ActivityClass::Sit);
    m.set("Walking", ActivityClass::Walk);
    m.set("Downstairs", ActivityClass::StairDown);
    m.set("Upstairs", ActivityClass::StairUp);
    m.set("Jogging", std::nullopt);
    return m;
}

// KU-HAR class codes 0-17; codes 0-4 are the shared classes, 5-17 drop.
inline LabelMap default_kuhar_label_map() {
    LabelMap m;
    m.set("0", ActivityClass::Stand);
    m.set("1", ActivityClass::Sit);
    m.set("2", ActivityClass::Walk);
    m.set("3", ActivityClass::StairDown);
    m.set("4", ActivityClass::StairUp);
    for (int code = 5; code <= 17; ++code) {
        m.set(std::to_string(code), std::nullopt);
    }
    return m;
}

inline LabelMap default_label_map(SourceId id) {
    switch (id) {
        case SourceId::UciHar: return default_uci_label_map();
        case SourceId::Wisdm: return default_wisdm_label_map();
        case SourceId::KuHar: return default_kuhar_label_map();
    }
    throw ConfigError("default_label_map: bad source id");
}

// File format: one "RAW_LABEL=ClassName" or "RAW_LABEL=drop" per line;
// '#' starts a comment. Class names are the canonical five.
inline LabelMap load_label_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw StructuralError("cannot open label map: " + path.string());
    }
    LabelMap m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
            line.pop_back();
        while (!line.empty() && line.front() == ' ') line.erase(line.begin());
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": expected RAW=Class");
        }
        std::string raw = line.substr(0, eq);
        std::string cls = line.substr(eq + 1);
        if (cls == "drop" || cls == "Drop" || cls == "DROP") {
            m.set(raw, std::nullopt);
            continue;
        }
        auto mapped = activity_from_name(cls);
        if (!mapped) {
            throw ParseError(path.string() + ":" + std::to_string(lineno) +
                             ": unknown class name \"" + cls + "\"");
        }
        m.set(raw, *mapped);
    }
    return m;
}

} // namespace ihards
