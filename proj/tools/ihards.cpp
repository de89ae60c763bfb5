// ihards: command-line front end for the integrated HAR pipeline.
//
// Subcommands: integrate, analyze, train, eval, predict, synth, benchmark.
// Every run echoes its effective configuration and writes it as a manifest
// (key=value) next to the outputs; re-running with --config <manifest>
// reproduces the outputs byte-for-byte. Exit codes: 0 success, 2 bad
// configuration, 3 bad data, 4 numeric failure.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ihards/ihards.hpp"

namespace fs = std::filesystem;
using namespace ihards;

namespace {

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

std::optional<fs::path> data_dir_from_env() {
    if (const char* dir = std::getenv("IHARDS_DATA_DIR")) {
        if (*dir != '\0') return fs::path(dir);
    }
    return std::nullopt;
}

// Label map resolution: explicit flag, then IHARDS_DATA_DIR/labelmaps/,
// then the built-in defaults.
LabelMap resolve_label_map(const std::string& flag_path, SourceId source,
                           const char* filename) {
    if (!flag_path.empty()) return load_label_map(flag_path);
    if (auto dir = data_dir_from_env()) {
        const fs::path candidate = *dir / "labelmaps" / filename;
        if (fs::exists(candidate)) return load_label_map(candidate);
    }
    return default_label_map(source);
}

std::string resolve_source_path(const std::string& flag_path,
                                const char* default_name,
                                const char* flag_name) {
    if (!flag_path.empty()) return flag_path;
    if (auto dir = data_dir_from_env()) {
        return (*dir / default_name).string();
    }
    throw ConfigError(std::string("missing ") + flag_name +
                      " (pass the flag or set IHARDS_DATA_DIR)");
}

integrate::ReplacementPolicy parse_policy(const std::string& name) {
    if (name == "replace") return integrate::ReplacementPolicy::ReplaceIfShort;
    if (name == "error") return integrate::ReplacementPolicy::ErrorIfShort;
    throw ConfigError("unknown replacement policy \"" + name +
                      "\" (valid: replace, error)");
}

// ---------------------------------------------------------------------------
// Config files. Each subcommand accepts --config <file> holding the same
// key=value pairs the manifest uses; values fill in options the command
// line did not set (flags win). A manifest therefore reruns its command.
// ---------------------------------------------------------------------------

using Bindings =
    std::vector<std::pair<std::string, std::function<void(const std::string&)>>>;

void apply_config(const CLI::App& sub, const std::string& config_path,
                  const Bindings& bindings) {
    if (config_path.empty()) return;
    const kv::Document doc = kv::Document::load(config_path);
    for (const auto& [key, value] : doc.entries()) {
        const auto it =
            std::find_if(bindings.begin(), bindings.end(),
                         [&](const auto& b) { return b.first == key; });
        if (it == bindings.end()) {
            throw ConfigError(config_path + ": unknown configuration key \"" +
                              key + "\"");
        }
        if (sub.count("--" + key) > 0) continue;  // explicit flag wins
        try {
            it->second(value);
        } catch (const ParseError& e) {
            throw ConfigError(e.what());
        }
    }
}

// Post-merge check for options that must come from the flag or the config.
void require_opt(const CLI::App& sub, bool present, const char* flag) {
    if (!present) {
        std::cerr << sub.help() << "\n";
        throw ConfigError(std::string("missing required option ") + flag);
    }
}

void echo_and_save_manifest(const kv::Document& doc, const fs::path& path) {
    std::cout << "# effective configuration (saved to " << path.string()
              << ")\n";
    for (const auto& [k, v] : doc.entries()) {
        std::cout << k << "=" << v << "\n";
    }
    doc.save(path);
}

void ensure_parent_dir(const fs::path& path) {
    const fs::path parent = path.parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

std::string format_float(float v) {
    char buf[48];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void print_parse_stats(const char* name, const ParseStats& stats) {
    std::cout << name << ": " << stats.rows_in << " rows read, "
              << stats.rows_emitted << " kept, " << stats.rows_label_filtered
              << " label-filtered, " << stats.rows_malformed
              << " malformed\n";
}

// ---------------------------------------------------------------------------
// integrate
// ---------------------------------------------------------------------------

struct IntegrateOpts {
    std::string config;
    std::string uci, wisdm, kuhar;
    std::string uci_map, wisdm_map, kuhar_map;
    bool synthetic = false;
    double sigma = 0.5;
    std::uint64_t per_class = 0;
    std::uint64_t seed = 0;
    std::string policy = "replace";
    std::int64_t kuhar_label_col = -1;
    std::string kuhar_feature_cols;
    std::string out;
    std::string csv;
};

void run_integrate(const IntegrateOpts& o) {
    const auto policy = parse_policy(o.policy);

    IhardsDataset data;
    if (o.synthetic) {
        data = pipeline::synthesize_integrated(o.per_class, o.sigma, o.seed,
                                               policy);
    } else {
        const std::string uci_path =
            resolve_source_path(o.uci, "uci_har", "--uci");
        const std::string wisdm_path =
            resolve_source_path(o.wisdm, "wisdm.txt", "--wisdm");
        const std::string kuhar_path =
            resolve_source_path(o.kuhar, "kuhar.csv", "--kuhar");

        ParseStats uci_stats, wisdm_stats, kuhar_stats;
        const auto uci = ingest::load_uci_har(
            uci_path, resolve_label_map(o.uci_map, SourceId::UciHar,
                                        "uci_har.map"),
            &uci_stats);
        const auto wisdm = ingest::load_wisdm_raw(
            wisdm_path, resolve_label_map(o.wisdm_map, SourceId::Wisdm,
                                          "wisdm.map"),
            &wisdm_stats);
        ingest::KuharColumns columns;
        if (o.kuhar_label_col >= 0) {
            columns.label_col = static_cast<std::size_t>(o.kuhar_label_col);
        }
        if (!o.kuhar_feature_cols.empty()) {
            for (const auto& item : kv::split_list(o.kuhar_feature_cols)) {
                columns.feature_cols.push_back(
                    kv::parse_u64(item, "--kuhar-feature-cols"));
            }
        }
        const auto kuhar = ingest::load_ku_har(
            kuhar_path, resolve_label_map(o.kuhar_map, SourceId::KuHar,
                                          "kuhar.map"),
            columns, &kuhar_stats);
        print_parse_stats("uci_har", uci_stats);
        print_parse_stats("wisdm", wisdm_stats);
        print_parse_stats("kuhar", kuhar_stats);

        integrate::IntegrationConfig cfg;
        cfg.per_class_n = o.per_class;
        cfg.seed = o.seed;
        cfg.policy = policy;
        data = integrate::build_integrated_dataset(uci, wisdm, kuhar, cfg);
    }

    ensure_parent_dir(o.out);
    io::save_ihds(o.out, data);
    if (!o.csv.empty()) {
        ensure_parent_dir(o.csv);
        io::export_ihds_csv(o.csv, data);
    }

    kv::Document manifest;
    manifest.add("synthetic", o.synthetic ? "true" : "false");
    if (o.synthetic) {
        manifest.add("sigma", kv::format_double(o.sigma));
    } else {
        manifest.add("uci", o.uci);
        manifest.add("wisdm", o.wisdm);
        manifest.add("kuhar", o.kuhar);
        if (!o.uci_map.empty()) manifest.add("uci-map", o.uci_map);
        if (!o.wisdm_map.empty()) manifest.add("wisdm-map", o.wisdm_map);
        if (!o.kuhar_map.empty()) manifest.add("kuhar-map", o.kuhar_map);
        if (o.kuhar_label_col >= 0) {
            manifest.add("kuhar-label-col",
                         std::to_string(o.kuhar_label_col));
        }
        if (!o.kuhar_feature_cols.empty()) {
            manifest.add("kuhar-feature-cols", o.kuhar_feature_cols);
        }
    }
    manifest.add("per-class", std::to_string(o.per_class));
    manifest.add("seed", std::to_string(o.seed));
    manifest.add("policy", o.policy);
    manifest.add("out", o.out);
    if (!o.csv.empty()) manifest.add("csv", o.csv);
    echo_and_save_manifest(manifest, o.out + ".manifest");

    const auto counts = data.class_counts();
    std::cout << "wrote " << o.out << ": " << data.rows << " rows, "
              << data.cols << " columns (per class:";
    for (std::size_t c = 0; c < kClassCount; ++c) {
        std::cout << " " << counts[c];
    }
    std::cout << ")\n";
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOpts {
    std::string config;
    std::string input;
    double threshold = 0.5;
    bool fit_on_all = false;
    double test_fraction = 0.5;
    std::uint64_t seed = 0;
    std::string out;
};

void run_analyze(const AnalyzeOpts& o) {
    const IhardsDataset data = io::load_ihds(o.input);

    const IhardsDataset* fit_data = &data;
    IhardsDataset train;
    if (!o.fit_on_all) {
        if (!data.has_labels() || data.labels.empty()) {
            throw StructuralError(
                "input has no labels; correlation fitting on the training "
                "split needs them (use --fit-on-all for unlabelled data)");
        }
        SeededRng split_rng = SeededRng(o.seed).derive(streams::kSplit);
        auto [tr, te] =
            integrate::stratified_split(data, o.test_fraction, split_rng);
        train = std::move(tr);
        fit_data = &train;
    }

    const auto corr = correlation::correlation_matrix(*fit_data);
    const auto mask = correlation::drwcc_prune(corr, o.threshold);
    const auto summary = correlation::summarize_correlations(corr,
                                                             o.threshold);

    double max_r = 0.0, sum_r = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < corr.cols; ++i) {
        for (std::size_t j = i + 1; j < corr.cols; ++j) {
            const double a = std::abs(corr.at(i, j));
            max_r = std::max(max_r, a);
            sum_r += a;
            ++pairs;
        }
    }

    ensure_parent_dir(o.out);
    correlation::save_feature_mask(o.out, mask);

    kv::Document stats_doc;
    stats_doc.add("version", "1");
    stats_doc.add("threshold", kv::format_double(o.threshold));
    stats_doc.add("columns", std::to_string(mask.columns()));
    stats_doc.add("kept", std::to_string(mask.kept_count()));
    stats_doc.add("dropped", std::to_string(mask.dropped_count()));
    stats_doc.add("fitted_rows", std::to_string(fit_data->rows));
    stats_doc.add("fit_on_all", o.fit_on_all ? "yes" : "no");
    stats_doc.add("max_abs_r", kv::format_double(max_r));
    stats_doc.add("mean_abs_r",
                  kv::format_double(pairs ? sum_r / static_cast<double>(pairs)
                                          : 0.0));
    stats_doc.add("pairs_above_threshold",
                  std::to_string(summary.pairs_above));
    stats_doc.add("columns_above_threshold",
                  std::to_string(summary.columns_above));
    stats_doc.save(o.out + ".summary");

    kv::Document manifest;
    manifest.add("input", o.input);
    manifest.add("threshold", kv::format_double(o.threshold));
    manifest.add("fit-on-all", o.fit_on_all ? "true" : "false");
    manifest.add("test-fraction", kv::format_double(o.test_fraction));
    manifest.add("seed", std::to_string(o.seed));
    manifest.add("out", o.out);
    echo_and_save_manifest(manifest, o.out + ".manifest");

    std::cout << "kept " << mask.kept_count() << " of " << mask.columns()
              << " columns at threshold " << kv::format_double(o.threshold)
              << " (max |r| " << kv::format_double(max_r) << ")\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOpts {
    std::string config;
    std::string input;
    std::string mask;
    std::string arch = "arch1";
    double learning_rate = 0.001;
    std::uint64_t batch_size = 500;
    std::uint64_t epochs = 10;
    std::uint64_t repeats = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    double test_fraction = 0.5;
    std::uint64_t seed = 0;
    std::string out_dir;
};

kv::Document train_manifest(const TrainOpts& o) {
    kv::Document manifest;
    manifest.add("input", o.input);
    if (!o.mask.empty()) manifest.add("mask", o.mask);
    manifest.add("arch", o.arch);
    manifest.add("learning-rate", kv::format_double(o.learning_rate));
    manifest.add("batch-size", std::to_string(o.batch_size));
    manifest.add("epochs", std::to_string(o.epochs));
    manifest.add("repeats", std::to_string(o.repeats));
    manifest.add("beta1", kv::format_double(o.beta1));
    manifest.add("beta2", kv::format_double(o.beta2));
    manifest.add("epsilon", kv::format_double(o.epsilon));
    manifest.add("test-fraction", kv::format_double(o.test_fraction));
    manifest.add("seed", std::to_string(o.seed));
    manifest.add("out-dir", o.out_dir);
    return manifest;
}

void run_train(const TrainOpts& o) {
    const IhardsDataset data = io::load_ihds(o.input);
    const nn::ArchSpec arch = nn::resolve_arch(o.arch);

    std::optional<correlation::FeatureMask> mask;
    if (!o.mask.empty()) {
        mask = correlation::load_feature_mask(o.mask);
    }

    nn::TrainConfig cfg;
    cfg.learning_rate = o.learning_rate;
    cfg.batch_size = o.batch_size;
    cfg.epochs = o.epochs;
    cfg.repeats = o.repeats;
    cfg.beta1 = o.beta1;
    cfg.beta2 = o.beta2;
    cfg.epsilon = o.epsilon;
    cfg.seed = o.seed;

    fs::create_directories(o.out_dir);
    echo_and_save_manifest(train_manifest(o),
                           fs::path(o.out_dir) / "manifest.txt");

    const auto outcome = pipeline::run_train_eval(
        data, arch, cfg, o.test_fraction, mask ? &*mask : nullptr,
        [&](std::size_t repeat, const metrics::EpochRecord& rec) {
            std::cout << "repeat " << (repeat + 1) << "/" << cfg.repeats
                      << " epoch " << rec.epoch << "/" << cfg.epochs
                      << " loss " << kv::format_double(rec.loss) << " acc "
                      << kv::format_double(rec.accuracy) << "\n";
        });

    const fs::path dir(o.out_dir);
    nn::checkpoint_save(outcome.checkpoint, dir / "model.ihck");
    metrics::ReportPaths paths{dir / "summary.txt", dir / "curves.csv",
                               dir / "confusion.csv"};
    metrics::emit_report(outcome.report, outcome.curve, paths);

    // Extend the summary with the cross-repeat aggregates.
    kv::Document summary = metrics::summary_document(outcome.report);
    summary.add("repeats", std::to_string(outcome.repeats.size()));
    summary.add("repeats.mean_accuracy",
                kv::format_double(outcome.mean_accuracy));
    summary.add("repeats.stddev_accuracy",
                kv::format_double(outcome.stddev_accuracy));
    summary.add("repeats.mean_loss", kv::format_double(outcome.mean_loss));
    summary.add("repeats.stddev_loss",
                kv::format_double(outcome.stddev_loss));
    for (const auto& m : outcome.repeats) {
        const std::string p = "repeat." + std::to_string(m.repeat) + ".";
        summary.add(p + "seed", std::to_string(m.seed));
        summary.add(p + "accuracy", kv::format_double(m.accuracy));
        summary.add(p + "loss", kv::format_double(m.loss));
    }
    summary.save(paths.summary);

    std::cout << "test accuracy " << kv::format_double(outcome.mean_accuracy)
              << " +/- " << kv::format_double(outcome.stddev_accuracy)
              << " over " << outcome.repeats.size() << " repeat(s); loss "
              << kv::format_double(outcome.mean_loss) << "\n";
    std::cout << "wrote " << (dir / "model.ihck").string() << ", "
              << paths.summary.string() << ", " << paths.curves_csv.string()
              << ", " << paths.confusion_csv.string() << "\n";
}

// ---------------------------------------------------------------------------
// eval / predict
// ---------------------------------------------------------------------------

// Width reconciliation between a dataset and a checkpoint: full-width rows
// are masked down when the checkpoint carries a mask; kept-width rows pass
// through; anything else is a shape error.
IhardsDataset align_to_checkpoint(const IhardsDataset& data,
                                  const nn::Checkpoint& ckpt) {
    if (data.cols == ckpt.input_features) return data;
    if (!ckpt.mask.keep.empty() && data.cols == ckpt.mask.columns()) {
        std::cout << "applying stored feature mask ("
                  << ckpt.mask.kept_count() << " of " << ckpt.mask.columns()
                  << " columns)\n";
        return correlation::apply_feature_mask(data, ckpt.mask);
    }
    throw ShapeError("input has " + std::to_string(data.cols) +
                     " columns; checkpoint expects " +
                     std::to_string(ckpt.input_features) +
                     (ckpt.mask.keep.empty()
                          ? std::string()
                          : " (or " + std::to_string(ckpt.mask.columns()) +
                                " pre-mask)"));
}

struct EvalOpts {
    std::string config;
    std::string model;
    std::string input;
    std::string out_dir;
};

void run_eval(const EvalOpts& o) {
    const auto ckpt = nn::checkpoint_load(o.model);
    const IhardsDataset raw = io::load_ihds(o.input);
    if (!raw.has_labels() || raw.labels.empty()) {
        throw StructuralError("input has no labels to score against; use "
                              "the predict subcommand instead");
    }
    const IhardsDataset data = align_to_checkpoint(raw, ckpt);

    const auto eval = nn::evaluate_model(ckpt, data);
    auto report = metrics::derive_scores(
        metrics::confusion_matrix(data.labels, eval.predictions));
    report.loss = eval.loss;

    fs::create_directories(o.out_dir);
    const fs::path dir(o.out_dir);
    metrics::summary_document(report).save(dir / "summary.txt");
    // No training curve here; emit summary + confusion only.
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
    metrics::write_text(dir / "confusion.csv", conf);

    kv::Document manifest;
    manifest.add("model", o.model);
    manifest.add("input", o.input);
    manifest.add("out-dir", o.out_dir);
    echo_and_save_manifest(manifest, dir / "manifest.txt");

    std::cout << "accuracy " << kv::format_double(report.accuracy)
              << ", loss " << kv::format_double(report.loss) << " over "
              << report.cm.total << " samples\n";
}

struct PredictOpts {
    std::string config;
    std::string model;
    std::string input;
    std::string out;
    bool probabilities = false;
};

void run_predict(const PredictOpts& o) {
    const auto ckpt = nn::checkpoint_load(o.model);
    const IhardsDataset raw = io::load_ihds(o.input);
    const IhardsDataset data = align_to_checkpoint(raw, ckpt);

    const auto eval =
        nn::evaluate_model(ckpt, data, o.probabilities);

    ensure_parent_dir(o.out);
    std::string csv = "row,predicted,predicted_name";
    const bool labelled = !data.labels.empty();
    if (labelled) csv += ",label";
    if (o.probabilities) {
        for (std::size_t c = 0; c < kClassCount; ++c) {
            csv += ",p" + std::to_string(c);
        }
    }
    csv += "\n";
    for (std::size_t r = 0; r < data.rows; ++r) {
        const auto pred = eval.predictions[r];
        csv += std::to_string(r);
        csv += ",";
        csv += std::to_string(pred);
        csv += ",";
        csv += std::string(
            activity_name(static_cast<ActivityClass>(pred)));
        if (labelled) {
            csv += ",";
            csv += std::to_string(data.labels[r]);
        }
        if (o.probabilities) {
            for (std::size_t c = 0; c < kClassCount; ++c) {
                csv += ",";
                csv += format_float(
                    eval.probabilities[r * kClassCount + c]);
            }
        }
        csv += "\n";
    }
    metrics::write_text(o.out, csv);

    kv::Document manifest;
    manifest.add("model", o.model);
    manifest.add("input", o.input);
    manifest.add("out", o.out);
    manifest.add("probabilities", o.probabilities ? "true" : "false");
    echo_and_save_manifest(manifest, o.out + ".manifest");

    std::cout << "wrote " << data.rows << " predictions to " << o.out
              << "\n";
}

// ---------------------------------------------------------------------------
// synth: native-format synthetic source files (exercises the real parsers).
// ---------------------------------------------------------------------------

struct SynthOpts {
    std::string config;
    std::uint64_t per_class = 0;
    double sigma = 0.5;
    std::uint64_t seed = 0;
    std::string out_dir;
};

void write_uci_tree(const fs::path& root, const CanonicalFrame& frame) {
    // Raw ids/names follow the public release; activities the pipeline
    // ignores (LAYING here) simply never occur in generated data.
    fs::create_directories(root / "train");
    fs::create_directories(root / "test");
    metrics::write_text(root / "activity_labels.txt",
                        "1 WALKING\n2 WALKING_UPSTAIRS\n3 "
                        "WALKING_DOWNSTAIRS\n4 SITTING\n5 STANDING\n6 "
                        "LAYING\n");
    const char* id_for_class[kClassCount] = {"5", "4", "1", "3", "2"};

    std::string x[2], y[2];
    for (std::size_t r = 0; r < frame.rows; ++r) {
        const std::size_t part = r % 2;  // even rows train, odd rows test
        auto row = frame.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) x[part] += ' ';
            x[part] += format_float(row[c]);
        }
        x[part] += '\n';
        y[part] += id_for_class[frame.labels[r]];
        y[part] += '\n';
    }
    metrics::write_text(root / "train" / "X_train.txt", x[0]);
    metrics::write_text(root / "train" / "y_train.txt", y[0]);
    metrics::write_text(root / "test" / "X_test.txt", x[1]);
    metrics::write_text(root / "test" / "y_test.txt", y[1]);
}

void write_wisdm_file(const fs::path& path, const CanonicalFrame& frame) {
    const char* name_for_class[kClassCount] = {"Standing", "Sitting",
                                               "Walking", "Downstairs",
                                               "Upstairs"};
    std::string text;
    for (std::size_t r = 0; r < frame.rows; ++r) {
        auto row = frame.row(r);
        text += "1,";
        text += name_for_class[frame.labels[r]];
        text += ",";
        text += std::to_string(1000000 + r * 50);
        for (float v : row) {
            text += ",";
            text += format_float(v);
        }
        text += ";\n";
    }
    metrics::write_text(path, text);
}

void write_kuhar_file(const fs::path& path, const CanonicalFrame& frame) {
    std::string text;
    for (std::size_t r = 0; r < frame.rows; ++r) {
        auto row = frame.row(r);
        for (float v : row) {
            text += format_float(v);
            text += ",";
        }
        text += std::to_string(frame.labels[r]);
        text += "\n";
    }
    metrics::write_text(path, text);
}

void run_synth(const SynthOpts& o) {
    SeededRng rng = SeededRng(o.seed).derive(streams::kSynthetic);
    const auto sources =
        integrate::generate_synthetic(kIhardsCols, o.per_class, o.sigma,
                                      rng);

    const fs::path dir(o.out_dir);
    fs::create_directories(dir);
    write_uci_tree(dir / "uci_har", sources.uci);
    write_wisdm_file(dir / "wisdm.txt", sources.wisdm);
    write_kuhar_file(dir / "kuhar.csv", sources.kuhar);

    kv::Document manifest;
    manifest.add("per-class", std::to_string(o.per_class));
    manifest.add("sigma", kv::format_double(o.sigma));
    manifest.add("seed", std::to_string(o.seed));
    manifest.add("out-dir", o.out_dir);
    echo_and_save_manifest(manifest, dir / "manifest.txt");

    std::cout << "wrote " << (dir / "uci_har").string() << ", "
              << (dir / "wisdm.txt").string() << ", "
              << (dir / "kuhar.csv").string() << " (" << o.per_class
              << " rows per class per source)\n";
}

// ---------------------------------------------------------------------------
// benchmark
// ---------------------------------------------------------------------------

struct BenchmarkOpts {
    std::string config;
    std::uint64_t seed = 0;
    std::uint64_t trials = 5;
    std::string out;
};

void run_benchmark(const BenchmarkOpts& o) {
    const auto report = benchmark::run_scaling_benchmark(o.seed, o.trials);
    for (const auto& row : report.rows) {
        std::cout << row.factor << ": " << row.base << " -> " << row.doubled
                  << ", " << kv::format_double(row.base_ms) << " ms -> "
                  << kv::format_double(row.doubled_ms) << " ms, ratio "
                  << kv::format_double(row.ratio)
                  << (row.linear ? " (linear)" : " (outside band)") << "\n";
    }
    std::cout << "edge case k == n: "
              << (report.edge_completed ? "completed" : "FAILED") << " in "
              << kv::format_double(report.edge_ms) << " ms\n";
    std::cout << "verdict: "
              << (report.all_linear
                      ? "runtime scales linearly in every measured factor"
                      : "some factors fell outside the linear band")
              << "\n";
    if (!o.out.empty()) {
        ensure_parent_dir(o.out);
        benchmark::scaling_report_document(report).save(o.out);

        kv::Document manifest;
        manifest.add("seed", std::to_string(o.seed));
        manifest.add("trials", std::to_string(o.trials));
        manifest.add("out", o.out);
        echo_and_save_manifest(manifest, o.out + ".manifest");
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Integrated HAR dataset pipeline: ingestion, integration, "
                 "correlation pruning, 1D-CNN training and evaluation"};
    app.require_subcommand(1);

    IntegrateOpts integrate_opts;
    auto* cmd_integrate = app.add_subcommand(
        "integrate", "Build an integrated dataset container from the three "
                     "sources (or synthetic data)");
    cmd_integrate->add_option("--config", integrate_opts.config,
                              "key=value config file (flags win)");
    cmd_integrate->add_option("--uci", integrate_opts.uci,
                              "UCI-HAR dataset directory (default: "
                              "$IHARDS_DATA_DIR/uci_har)");
    cmd_integrate->add_option("--wisdm", integrate_opts.wisdm,
                              "WISDM raw accelerometer file (default: "
                              "$IHARDS_DATA_DIR/wisdm.txt)");
    cmd_integrate->add_option("--kuhar", integrate_opts.kuhar,
                              "KU-HAR CSV file (default: "
                              "$IHARDS_DATA_DIR/kuhar.csv)");
    cmd_integrate->add_option("--uci-map", integrate_opts.uci_map,
                              "label map file for UCI-HAR");
    cmd_integrate->add_option("--wisdm-map", integrate_opts.wisdm_map,
                              "label map file for WISDM");
    cmd_integrate->add_option("--kuhar-map", integrate_opts.kuhar_map,
                              "label map file for KU-HAR");
    cmd_integrate->add_flag("--synthetic", integrate_opts.synthetic,
                            "generate synthetic sources instead of reading "
                            "datasets");
    cmd_integrate->add_option("--sigma", integrate_opts.sigma,
                              "synthetic noise level (default 0.5)");
    cmd_integrate->add_option("--per-class", integrate_opts.per_class,
                              "rows drawn per class from each source");
    cmd_integrate->add_option("--seed", integrate_opts.seed,
                              "root RNG seed (default 0)");
    cmd_integrate->add_option("--policy", integrate_opts.policy,
                              "short-pool policy: replace | error (default "
                              "replace)");
    cmd_integrate->add_option("--kuhar-label-col",
                              integrate_opts.kuhar_label_col,
                              "KU-HAR label column index (default: last)");
    cmd_integrate->add_option("--kuhar-feature-cols",
                              integrate_opts.kuhar_feature_cols,
                              "comma-separated KU-HAR feature column "
                              "indices (default: the 7 before the label)");
    cmd_integrate->add_option("--out", integrate_opts.out,
                              "output container path");
    cmd_integrate->add_option("--csv", integrate_opts.csv,
                              "also export rows as CSV (max 100000 rows)");
    cmd_integrate->callback([&] {
        auto& o = integrate_opts;
        Bindings b;
        b.emplace_back("synthetic", [&](const std::string& v) {
            o.synthetic = kv::parse_bool(v, "synthetic");
        });
        b.emplace_back("sigma", [&](const std::string& v) {
            o.sigma = kv::parse_double(v, "sigma");
        });
        b.emplace_back("uci", [&](const std::string& v) { o.uci = v; });
        b.emplace_back("wisdm", [&](const std::string& v) { o.wisdm = v; });
        b.emplace_back("kuhar", [&](const std::string& v) { o.kuhar = v; });
        b.emplace_back("uci-map",
                       [&](const std::string& v) { o.uci_map = v; });
        b.emplace_back("wisdm-map",
                       [&](const std::string& v) { o.wisdm_map = v; });
        b.emplace_back("kuhar-map",
                       [&](const std::string& v) { o.kuhar_map = v; });
        b.emplace_back("kuhar-label-col", [&](const std::string& v) {
            o.kuhar_label_col = static_cast<std::int64_t>(
                kv::parse_u64(v, "kuhar-label-col"));
        });
        b.emplace_back("kuhar-feature-cols", [&](const std::string& v) {
            o.kuhar_feature_cols = v;
        });
        b.emplace_back("per-class", [&](const std::string& v) {
            o.per_class = kv::parse_u64(v, "per-class");
        });
        b.emplace_back("seed", [&](const std::string& v) {
            o.seed = kv::parse_u64(v, "seed");
        });
        b.emplace_back("policy",
                       [&](const std::string& v) { o.policy = v; });
        b.emplace_back("out", [&](const std::string& v) { o.out = v; });
        b.emplace_back("csv", [&](const std::string& v) { o.csv = v; });
        apply_config(*cmd_integrate, o.config, b);
        require_opt(*cmd_integrate, o.per_class > 0, "--per-class");
        require_opt(*cmd_integrate, !o.out.empty(), "--out");
        run_integrate(o);
    });

    AnalyzeOpts analyze_opts;
    auto* cmd_analyze = app.add_subcommand(
        "analyze", "Compute column correlations and write a feature mask");
    cmd_analyze->add_option("--config", analyze_opts.config,
                            "key=value config file (flags win)");
    cmd_analyze->add_option("--input", analyze_opts.input,
                            "input container path");
    cmd_analyze->add_option("--threshold", analyze_opts.threshold,
                            "correlation threshold in (0,1) (default 0.5)");
    cmd_analyze->add_flag("--fit-on-all", analyze_opts.fit_on_all,
                          "fit correlations on all rows instead of the "
                          "training split");
    cmd_analyze->add_option("--test-fraction", analyze_opts.test_fraction,
                            "held-out fraction when fitting on the training "
                            "split (default 0.5)");
    cmd_analyze->add_option("--seed", analyze_opts.seed,
                            "root RNG seed (default 0)");
    cmd_analyze->add_option("--out", analyze_opts.out, "output mask path");
    cmd_analyze->callback([&] {
        auto& o = analyze_opts;
        Bindings b;
        b.emplace_back("input", [&](const std::string& v) { o.input = v; });
        b.emplace_back("threshold", [&](const std::string& v) {
            o.threshold = kv::parse_double(v, "threshold");
        });
        b.emplace_back("fit-on-all", [&](const std::string& v) {
            o.fit_on_all = kv::parse_bool(v, "fit-on-all");
        });
        b.emplace_back("test-fraction", [&](const std::string& v) {
            o.test_fraction = kv::parse_double(v, "test-fraction");
        });
        b.emplace_back("seed", [&](const std::string& v) {
            o.seed = kv::parse_u64(v, "seed");
        });
        b.emplace_back("out", [&](const std::string& v) { o.out = v; });
        apply_config(*cmd_analyze, o.config, b);
        require_opt(*cmd_analyze, !o.input.empty(), "--input");
        require_opt(*cmd_analyze, !o.out.empty(), "--out");
        run_analyze(o);
    });

    TrainOpts train_opts;
    auto* cmd_train = app.add_subcommand(
        "train", "Split, standardize, train a 1D-CNN and score the held-out "
                 "half");
    cmd_train->add_option("--config", train_opts.config,
                          "key=value config file (flags win)");
    cmd_train->add_option("--input", train_opts.input,
                          "input container path");
    cmd_train->add_option("--mask", train_opts.mask,
                          "feature mask file to apply");
    cmd_train->add_option("--arch", train_opts.arch,
                          "architecture: arch1..arch5 or a spec file "
                          "(default arch1)");
    cmd_train->add_option("--learning-rate", train_opts.learning_rate,
                          "Adam learning rate (default 0.001)");
    cmd_train->add_option("--batch-size", train_opts.batch_size,
                          "minibatch size (default 500)");
    cmd_train->add_option("--epochs", train_opts.epochs,
                          "training epochs (default 10)");
    cmd_train->add_option("--repeats", train_opts.repeats,
                          "independently seeded training repeats (default "
                          "10)");
    cmd_train->add_option("--beta1", train_opts.beta1,
                          "Adam beta1 (default 0.9)");
    cmd_train->add_option("--beta2", train_opts.beta2,
                          "Adam beta2 (default 0.999)");
    cmd_train->add_option("--epsilon", train_opts.epsilon,
                          "Adam epsilon (default 1e-7)");
    cmd_train->add_option("--test-fraction", train_opts.test_fraction,
                          "held-out fraction (default 0.5)");
    cmd_train->add_option("--seed", train_opts.seed,
                          "root RNG seed (default 0)");
    cmd_train->add_option("--out-dir", train_opts.out_dir,
                          "output directory for model and reports");
    cmd_train->callback([&] {
        auto& o = train_opts;
        Bindings b;
        b.emplace_back("input", [&](const std::string& v) { o.input = v; });
        b.emplace_back("mask", [&](const std::string& v) { o.mask = v; });
        b.emplace_back("arch", [&](const std::string& v) { o.arch = v; });
        b.emplace_back("learning-rate", [&](const std::string& v) {
            o.learning_rate = kv::parse_double(v, "learning-rate");
        });
        b.emplace_back("batch-size", [&](const std::string& v) {
            o.batch_size = kv::parse_u64(v, "batch-size");
        });
        b.emplace_back("epochs", [&](const std::string& v) {
            o.epochs = kv::parse_u64(v, "epochs");
        });
        b.emplace_back("repeats", [&](const std::string& v) {
            o.repeats = kv::parse_u64(v, "repeats");
        });
        b.emplace_back("beta1", [&](const std::string& v) {
            o.beta1 = kv::parse_double(v, "beta1");
        });
        b.emplace_back("beta2", [&](const std::string& v) {
            o.beta2 = kv::parse_double(v, "beta2");
        });
        b.emplace_back("epsilon", [&](const std::string& v) {
            o.epsilon = kv::parse_double(v, "epsilon");
        });
        b.emplace_back("test-fraction", [&](const std::string& v) {
            o.test_fraction = kv::parse_double(v, "test-fraction");
        });
        b.emplace_back("seed", [&](const std::string& v) {
            o.seed = kv::parse_u64(v, "seed");
        });
        b.emplace_back("out-dir",
                       [&](const std::string& v) { o.out_dir = v; });
        apply_config(*cmd_train, o.config, b);
        require_opt(*cmd_train, !o.input.empty(), "--input");
        require_opt(*cmd_train, !o.out_dir.empty(), "--out-dir");
        run_train(o);
    });

    EvalOpts eval_opts;
    auto* cmd_eval = app.add_subcommand(
        "eval", "Score a trained model against a labelled container");
    cmd_eval->add_option("--config", eval_opts.config,
                         "key=value config file (flags win)");
    cmd_eval->add_option("--model", eval_opts.model, "checkpoint path");
    cmd_eval->add_option("--input", eval_opts.input,
                         "input container path");
    cmd_eval->add_option("--out-dir", eval_opts.out_dir,
                         "output directory for reports");
    cmd_eval->callback([&] {
        auto& o = eval_opts;
        Bindings b;
        b.emplace_back("model", [&](const std::string& v) { o.model = v; });
        b.emplace_back("input", [&](const std::string& v) { o.input = v; });
        b.emplace_back("out-dir",
                       [&](const std::string& v) { o.out_dir = v; });
        apply_config(*cmd_eval, o.config, b);
        require_opt(*cmd_eval, !o.model.empty(), "--model");
        require_opt(*cmd_eval, !o.input.empty(), "--input");
        require_opt(*cmd_eval, !o.out_dir.empty(), "--out-dir");
        run_eval(o);
    });

    PredictOpts predict_opts;
    auto* cmd_predict = app.add_subcommand(
        "predict", "Emit per-row class predictions from a trained model");
    cmd_predict->add_option("--config", predict_opts.config,
                            "key=value config file (flags win)");
    cmd_predict->add_option("--model", predict_opts.model,
                            "checkpoint path");
    cmd_predict->add_option("--input", predict_opts.input,
                            "input container path");
    cmd_predict->add_option("--out", predict_opts.out,
                            "predictions CSV path");
    cmd_predict->add_flag("--probabilities", predict_opts.probabilities,
                          "include per-class probabilities");
    cmd_predict->callback([&] {
        auto& o = predict_opts;
        Bindings b;
        b.emplace_back("model", [&](const std::string& v) { o.model = v; });
        b.emplace_back("input", [&](const std::string& v) { o.input = v; });
        b.emplace_back("out", [&](const std::string& v) { o.out = v; });
        b.emplace_back("probabilities", [&](const std::string& v) {
            o.probabilities = kv::parse_bool(v, "probabilities");
        });
        apply_config(*cmd_predict, o.config, b);
        require_opt(*cmd_predict, !o.model.empty(), "--model");
        require_opt(*cmd_predict, !o.input.empty(), "--input");
        require_opt(*cmd_predict, !o.out.empty(), "--out");
        run_predict(o);
    });

    SynthOpts synth_opts;
    auto* cmd_synth = app.add_subcommand(
        "synth", "Write synthetic source datasets in their native file "
                 "formats");
    cmd_synth->add_option("--config", synth_opts.config,
                          "key=value config file (flags win)");
    cmd_synth->add_option("--per-class", synth_opts.per_class,
                          "rows per class per source");
    cmd_synth->add_option("--sigma", synth_opts.sigma,
                          "noise level (default 0.5)");
    cmd_synth->add_option("--seed", synth_opts.seed,
                          "root RNG seed (default 0)");
    cmd_synth->add_option("--out-dir", synth_opts.out_dir,
                          "output directory");
    cmd_synth->callback([&] {
        auto& o = synth_opts;
        Bindings b;
        b.emplace_back("per-class", [&](const std::string& v) {
            o.per_class = kv::parse_u64(v, "per-class");
        });
        b.emplace_back("sigma", [&](const std::string& v) {
            o.sigma = kv::parse_double(v, "sigma");
        });
        b.emplace_back("seed", [&](const std::string& v) {
            o.seed = kv::parse_u64(v, "seed");
        });
        b.emplace_back("out-dir",
                       [&](const std::string& v) { o.out_dir = v; });
        apply_config(*cmd_synth, o.config, b);
        require_opt(*cmd_synth, o.per_class > 0, "--per-class");
        require_opt(*cmd_synth, !o.out_dir.empty(), "--out-dir");
        run_synth(o);
    });

    BenchmarkOpts benchmark_opts;
    auto* cmd_benchmark = app.add_subcommand(
        "benchmark", "Time conv/dense kernels while doubling each size "
                     "factor and report scaling ratios");
    cmd_benchmark->add_option("--config", benchmark_opts.config,
                              "key=value config file (flags win)");
    cmd_benchmark->add_option("--seed", benchmark_opts.seed,
                              "root RNG seed (default 0)");
    cmd_benchmark->add_option("--trials", benchmark_opts.trials,
                              "timing trials per point, median taken "
                              "(default 5)");
    cmd_benchmark->add_option("--out", benchmark_opts.out,
                              "write the scaling report to this path");
    cmd_benchmark->callback([&] {
        auto& o = benchmark_opts;
        Bindings b;
        b.emplace_back("seed", [&](const std::string& v) {
            o.seed = kv::parse_u64(v, "seed");
        });
        b.emplace_back("trials", [&](const std::string& v) {
            o.trials = kv::parse_u64(v, "trials");
        });
        b.emplace_back("out", [&](const std::string& v) { o.out = v; });
        apply_config(*cmd_benchmark, o.config, b);
        run_benchmark(o);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
