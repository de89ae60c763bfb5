#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "ihards/errors.hpp"
#include "ihards/frame.hpp"
#include "ihards/manifest.hpp"

namespace ihards::metrics {

struct ConfusionMatrix {
    std::array<std::uint64_t, kClassCount * kClassCount> counts{};
    std::uint64_t total = 0;

    std::uint64_t at(std::size_t truth, std::size_t pred) const {
        return counts[truth * kClassCount + pred];
    }
    std::uint64_t& at(std::size_t truth, std::size_t pred) {
        return counts[truth * kClassCount + pred];
    }
};

inline ConfusionMatrix confusion_matrix(std::span<const std::uint8_t> labels,
                                        std::span<const std::uint8_t> preds) {
    if (labels.size() != preds.size()) {
        throw ShapeError("confusion_matrix: " +
                         std::to_string(labels.size()) + " labels vs " +
                         std::to_string(preds.size()) + " predictions");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= kClassCount || preds[i] >= kClassCount) {
            throw MappingError("class value outside 0-4 at sample " +
                               std::to_string(i));
        }
        ++cm.at(labels[i], preds[i]);
        ++cm.total;
    }
    return cm;
}

// One-vs-rest counts and scores for a single class. F1 is computed in count
// form, 2TP/(2TP+FP+FN), which equals the harmonic mean of precision and
// recall whenever both are defined.
struct ClassScores {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double sen = 0.0;   // recall, TP/(TP+FN)
    double spf = 0.0;   // specificity, TN/(TN+FP)
    double prec = 0.0;  // TP/(TP+FP)
    double acc = 0.0;   // (TP+TN)/total
    double f1 = 0.0;
};

struct ScoreReport {
    ConfusionMatrix cm;
    std::array<ClassScores, kClassCount> per_class;
    double accuracy = 0.0;  // diagonal / total
    double micro_sen = 0.0, micro_spf = 0.0, micro_prec = 0.0,
           micro_f1 = 0.0;
    double macro_sen = 0.0, macro_spf = 0.0, macro_prec = 0.0,
           macro_acc = 0.0, macro_f1 = 0.0;
    double loss = 0.0;  // attached by the caller (not derivable from cm)
    // Scores whose denominator was zero; each reported as 0 and named here.
    std::vector<std::string> zero_denominator_flags;
};

namespace detail {

inline double ratio(std::uint64_t num, std::uint64_t den,
                    const std::string& flag_name,
                    std::vector<std::string>& flags) {
    if (den == 0) {
        flags.push_back(flag_name);
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace detail

inline ScoreReport derive_scores(const ConfusionMatrix& cm) {
    if (cm.total == 0) {
        throw StructuralError("cannot derive scores from an empty "
                              "evaluation");
    }
    ScoreReport r;
    r.cm = cm;

    std::uint64_t pooled_tp = 0, pooled_fp = 0, pooled_fn = 0, pooled_tn = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        ClassScores& s = r.per_class[c];
        std::uint64_t row = 0, col = 0;
        for (std::size_t k = 0; k < kClassCount; ++k) {
            row += cm.at(c, k);
            col += cm.at(k, c);
        }
        s.tp = cm.at(c, c);
        s.fn = row - s.tp;
        s.fp = col - s.tp;
        s.tn = cm.total - s.tp - s.fn - s.fp;
        const std::string cls = "class." + std::to_string(c);
        s.sen = detail::ratio(s.tp, s.tp + s.fn, cls + ".sen",
                              r.zero_denominator_flags);
        s.spf = detail::ratio(s.tn, s.tn + s.fp, cls + ".spf",
                              r.zero_denominator_flags);
        s.prec = detail::ratio(s.tp, s.tp + s.fp, cls + ".prec",
                               r.zero_denominator_flags);
        s.acc = detail::ratio(s.tp + s.tn, cm.total, cls + ".acc",
                              r.zero_denominator_flags);
        s.f1 = detail::ratio(2 * s.tp, 2 * s.tp + s.fp + s.fn, cls + ".f1",
                             r.zero_denominator_flags);
        pooled_tp += s.tp;
        pooled_fp += s.fp;
        pooled_fn += s.fn;
        pooled_tn += s.tn;
    }

    // Single-label multiclass: pooled TP is the diagonal and pooled
    // TP+FN == TP+FP == total, so micro precision, micro recall, micro F1
    // and accuracy are the same quotient (bit-identical by construction).
    r.accuracy = detail::ratio(pooled_tp, pooled_tp + pooled_fn, "accuracy",
                               r.zero_denominator_flags);
    r.micro_sen = detail::ratio(pooled_tp, pooled_tp + pooled_fn,
                                "micro.sen", r.zero_denominator_flags);
    r.micro_prec = detail::ratio(pooled_tp, pooled_tp + pooled_fp,
                                 "micro.prec", r.zero_denominator_flags);
    r.micro_f1 =
        detail::ratio(2 * pooled_tp, 2 * pooled_tp + pooled_fp + pooled_fn,
                      "micro.f1", r.zero_denominator_flags);
    r.micro_spf = detail::ratio(pooled_tn, pooled_tn + pooled_fp,
                                "micro.spf", r.zero_denominator_flags);

    for (std::size_t c = 0; c < kClassCount; ++c) {
        r.macro_sen += r.per_class[c].sen;
        r.macro_spf += r.per_class[c].spf;
        r.macro_prec += r.per_class[c].prec;
        r.macro_acc += r.per_class[c].acc;
        r.macro_f1 += r.per_class[c].f1;
    }
    r.macro_sen /= kClassCount;
    r.macro_spf /= kClassCount;
    r.macro_prec /= kClassCount;
    r.macro_acc /= kClassCount;
    r.macro_f1 /= kClassCount;
    return r;
}

// ---------------------------------------------------------------------------
// Report emission. All three files are deterministic functions of their
// inputs (no timestamps), and every floating-point value is printed in
// shortest round-trip form so a parse recovers it exactly.
// ---------------------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double loss = 0.0;
    double accuracy = 0.0;
};

struct ReportPaths {
    std::filesystem::path summary;
    std::filesystem::path curves_csv;
    std::filesystem::path confusion_csv;
};

inline kv::Document summary_document(const ScoreReport& r) {
    kv::Document doc;
    doc.add("version", "1");
    doc.add("samples", std::to_string(r.cm.total));
    doc.add("loss", kv::format_double(r.loss));
    doc.add("accuracy", kv::format_double(r.accuracy));
    doc.add("micro.sen", kv::format_double(r.micro_sen));
    doc.add("micro.spf", kv::format_double(r.micro_spf));
    doc.add("micro.prec", kv::format_double(r.micro_prec));
    doc.add("micro.f1", kv::format_double(r.micro_f1));
    doc.add("macro.sen", kv::format_double(r.macro_sen));
    doc.add("macro.spf", kv::format_double(r.macro_spf));
    doc.add("macro.prec", kv::format_double(r.macro_prec));
    doc.add("macro.acc", kv::format_double(r.macro_acc));
    doc.add("macro.f1", kv::format_double(r.macro_f1));
    for (std::size_t c = 0; c < kClassCount; ++c) {
        const ClassScores& s = r.per_class[c];
        const std::string p = "class." + std::to_string(c) + ".";
        doc.add(p + "name",
                std::string(activity_name(static_cast<ActivityClass>(c))));
        doc.add(p + "tp", std::to_string(s.tp));
        doc.add(p + "fp", std::to_string(s.fp));
        doc.add(p + "fn", std::to_string(s.fn));
        doc.add(p + "tn", std::to_string(s.tn));
        doc.add(p + "sen", kv::format_double(s.sen));
        doc.add(p + "spf", kv::format_double(s.spf));
        doc.add(p + "prec", kv::format_double(s.prec));
        doc.add(p + "acc", kv::format_double(s.acc));
        doc.add(p + "f1", kv::format_double(s.f1));
    }
    for (std::size_t t = 0; t < kClassCount; ++t) {
        std::string row;
        for (std::size_t p = 0; p < kClassCount; ++p) {
            if (p) row += ",";
            row += std::to_string(r.cm.at(t, p));
        }
        doc.add("confusion." + std::to_string(t), row);
    }
    std::string flags;
    for (std::size_t i = 0; i < r.zero_denominator_flags.size(); ++i) {
        if (i) flags += ",";
        flags += r.zero_denominator_flags[i];
    }
    doc.add("flags", flags);
    return doc;
}

inline void write_text(const std::filesystem::path& path,
                       const std::string& text) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) {
        throw StructuralError("cannot open for writing: " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw StructuralError("write failed: " + path.string());
    }
}

inline void emit_report(const ScoreReport& report,
                        const std::vector<EpochRecord>& curves,
                        const ReportPaths& paths) {
    summary_document(report).save(paths.summary);

    std::string csv = "epoch,loss,accuracy\n";
    for (const auto& rec : curves) {
        csv += std::to_string(rec.epoch);
        csv += ",";
        csv += kv::format_double(rec.loss);
        csv += ",";
        csv += kv::format_double(rec.accuracy);
        csv += "\n";
    }
    write_text(paths.curves_csv, csv);

    std::string conf = "true_class";
    for (std::size_t p = 0; p < kClassCount; ++p) {
        conf += ",";
        conf += std::string(activity_name(static_cast<ActivityClass>(p)));
    }
    conf += "\n";
    for (std::size_t t = 0; t < kClassCount; ++t) {
        conf += std::string(activity_name(static_cast<ActivityClass>(t)));
        for (std::size_t p = 0; p < kClassCount; ++p) {
            conf += ",";
            conf += std::to_string(report.cm.at(t, p));
        }
        conf += "\n";
    }
    write_text(paths.confusion_csv, conf);
}

// Reconstructs a ScoreReport from a summary file; the test harness uses this
// to verify the emit/parse round trip is exact.
inline ScoreReport parse_summary(const std::filesystem::path& path) {
    kv::Document doc = kv::Document::load(path);
    if (doc.require("version") != "1") {
        throw FormatError(path.string() + ": unsupported summary version");
    }
    ScoreReport r;
    for (std::size_t t = 0; t < kClassCount; ++t) {
        const auto cells =
            kv::split_list(doc.require("confusion." + std::to_string(t)));
        if (cells.size() != kClassCount) {
            throw FormatError(path.string() + ": confusion row " +
                              std::to_string(t) + " needs " +
                              std::to_string(kClassCount) + " cells");
        }
        for (std::size_t p = 0; p < kClassCount; ++p) {
            r.cm.at(t, p) = kv::parse_u64(cells[p], path.string());
        }
    }
    r.cm.total = doc.require_u64("samples");
    r.loss = doc.require_double("loss");
    r.accuracy = doc.require_double("accuracy");
    r.micro_sen = doc.require_double("micro.sen");
    r.micro_spf = doc.require_double("micro.spf");
    r.micro_prec = doc.require_double("micro.prec");
    r.micro_f1 = doc.require_double("micro.f1");
    r.macro_sen = doc.require_double("macro.sen");
    r.macro_spf = doc.require_double("macro.spf");
    r.macro_prec = doc.require_double("macro.prec");
    r.macro_acc = doc.require_double("macro.acc");
    r.macro_f1 = doc.require_double("macro.f1");
    for (std::size_t c = 0; c < kClassCount; ++c) {
        ClassScores& s = r.per_class[c];
        const std::string p = "class." + std::to_string(c) + ".";
        s.tp = doc.require_u64(p + "tp");
        s.fp = doc.require_u64(p + "fp");
        s.fn = doc.require_u64(p + "fn");
        s.tn = doc.require_u64(p + "tn");
        s.sen = doc.require_double(p + "sen");
        s.spf = doc.require_double(p + "spf");
        s.prec = doc.require_double(p + "prec");
        s.acc = doc.require_double(p + "acc");
        s.f1 = doc.require_double(p + "f1");
    }
    const std::string flags = doc.require("flags");
    if (!flags.empty()) {
        for (auto& f : kv::split_list(flags)) {
            r.zero_denominator_flags.push_back(f);
        }
    }
    return r;
}

} // namespace ihards::metrics
