#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = IHARDS_CLI_PATH;
const fs::path kSourceDir = IHARDS_SOURCE_DIR;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct CmdResult {
    int code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path capture =
        fs::temp_directory_path() /
        ("ihards-cli-capture-" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        kCli + " " + args + " >" + capture.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    CmdResult result;
    result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(capture, std::ios::binary);
    result.output.assign(std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>());
    fs::remove(capture);
    return result;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

const std::vector<std::string> kSubcommands = {
    "integrate", "analyze", "train", "eval", "predict", "synth", "benchmark"};

} // namespace

// ---------------------------------------------------------------------------
// Help and argument validation
// ---------------------------------------------------------------------------

TEST_CASE("help exits cleanly at every level") {
    const auto top = run_cli("--help");
    REQUIRE(top.code == 0);
    for (const auto& sub : kSubcommands) {
        REQUIRE(top.output.find(sub) != std::string::npos);
        const auto r = run_cli(sub + " --help");
        REQUIRE(r.code == 0);
        REQUIRE(r.output.find("--help") != std::string::npos);
    }
}

TEST_CASE("unknown subcommands and flags exit with the usage code") {
    REQUIRE(run_cli("frobnicate").code == 2);
    REQUIRE(run_cli("train --no-such-flag 1").code == 2);
    REQUIRE(run_cli("").code == 2);  // a subcommand is required
}

TEST_CASE("missing required options exit with the usage code") {
    TempDir tmp("ihards-cli-missing");
    const auto r = run_cli("train");
    REQUIRE(r.code == 2);
    REQUIRE(r.output.find("--input") != std::string::npos);

    const auto integ = run_cli("integrate --synthetic --per-class 10");
    REQUIRE(integ.code == 2);
    REQUIRE(integ.output.find("--out") != std::string::npos);
}

TEST_CASE("an unknown architecture name lists the valid ones") {
    TempDir tmp("ihards-cli-arch9");
    const auto d = (tmp.path / "d.ihds").string();
    REQUIRE(run_cli("integrate --synthetic --per-class 6 --seed 1 --out " +
                    d)
                .code == 0);
    const auto r = run_cli("train --input " + d +
                           " --arch arch9 --epochs 1 --repeats 1 "
                           "--batch-size 15 --out-dir " +
                           (tmp.path / "run").string());
    REQUIRE(r.code == 2);
    for (const auto& name :
         {"arch1", "arch2", "arch3", "arch4", "arch5"}) {
        REQUIRE(r.output.find(name) != std::string::npos);
    }
}

TEST_CASE("data errors exit with the data code") {
    TempDir tmp("ihards-cli-data-err");
    const auto missing = run_cli("analyze --input " +
                                 (tmp.path / "nope.ihds").string() +
                                 " --threshold 0.9 --out " +
                                 (tmp.path / "mask.txt").string());
    REQUIRE(missing.code == 3);

    write_file(tmp.path / "garbage.ihds", "this is not a dataset");
    const auto corrupt = run_cli("analyze --input " +
                                 (tmp.path / "garbage.ihds").string() +
                                 " --threshold 0.9 --out " +
                                 (tmp.path / "mask.txt").string());
    REQUIRE(corrupt.code == 3);
    REQUIRE(corrupt.output.find("error:") != std::string::npos);
}

// ---------------------------------------------------------------------------
// The full workflow
// ---------------------------------------------------------------------------

TEST_CASE("integrate, analyze, train, eval and predict chain together") {
    TempDir tmp("ihards-cli-workflow");
    const auto d = (tmp.path / "d.ihds").string();
    const auto mask = (tmp.path / "mask.txt").string();
    const auto run_dir = tmp.path / "run";

    const auto integ = run_cli(
        "integrate --synthetic --per-class 30 --sigma 0.5 --seed 11 --out " +
        d);
    REQUIRE(integ.code == 0);
    REQUIRE(fs::exists(d));
    REQUIRE(fs::exists(d + ".manifest"));
    REQUIRE(integ.output.find("effective configuration") !=
            std::string::npos);

    const auto analyze = run_cli("analyze --input " + d +
                                 " --threshold 0.95 --seed 11 --out " + mask);
    REQUIRE(analyze.code == 0);
    REQUIRE(fs::exists(mask));
    REQUIRE(fs::exists(mask + ".summary"));
    REQUIRE(slurp(mask).find("keep=") != std::string::npos);

    const auto train = run_cli(
        "train --input " + d + " --mask " + mask +
        " --arch arch5 --epochs 2 --repeats 2 --batch-size 25 --seed 11 "
        "--out-dir " +
        run_dir.string());
    REQUIRE(train.code == 0);
    for (const char* f :
         {"model.ihck", "summary.txt", "curves.csv", "confusion.csv",
          "manifest.txt"}) {
        REQUIRE(fs::exists(run_dir / f));
    }
    REQUIRE(train.output.find("repeat 1/2 epoch 1/2") != std::string::npos);
    REQUIRE(train.output.find("repeat 2/2 epoch 2/2") != std::string::npos);
    const auto summary = slurp(run_dir / "summary.txt");
    REQUIRE(summary.find("accuracy=") != std::string::npos);
    REQUIRE(summary.find("repeats=2") != std::string::npos);
    REQUIRE(summary.find("repeat.1.accuracy=") != std::string::npos);

    const auto eval_dir = tmp.path / "eval";
    const auto eval = run_cli("eval --model " +
                              (run_dir / "model.ihck").string() +
                              " --input " + d + " --out-dir " +
                              eval_dir.string());
    REQUIRE(eval.code == 0);
    REQUIRE(fs::exists(eval_dir / "summary.txt"));
    REQUIRE(fs::exists(eval_dir / "confusion.csv"));

    const auto preds = (tmp.path / "preds.csv").string();
    const auto predict = run_cli("predict --model " +
                                 (run_dir / "model.ihck").string() +
                                 " --input " + d + " --probabilities --out " +
                                 preds);
    REQUIRE(predict.code == 0);
    const auto csv = slurp(preds);
    REQUIRE(csv.rfind("row,predicted,predicted_name,label,p0,p1,p2,p3,p4\n",
                      0) == 0);
    // 150 data rows + header.
    std::size_t lines = 0;
    for (char c : csv) {
        if (c == '\n') ++lines;
    }
    REQUIRE(lines == 151);
}

TEST_CASE("integration output is byte-stable across runs") {
    TempDir tmp("ihards-cli-det");
    const auto a = (tmp.path / "a.ihds").string();
    const auto b = (tmp.path / "b.ihds").string();
    const std::string args =
        "integrate --synthetic --per-class 12 --sigma 0.25 --seed 42 --out ";
    REQUIRE(run_cli(args + a).code == 0);
    REQUIRE(run_cli(args + b).code == 0);
    REQUIRE(slurp(a) == slurp(b));
}

TEST_CASE("a saved manifest reruns the training byte-identically") {
    TempDir tmp("ihards-cli-manifest");
    const auto d = (tmp.path / "d.ihds").string();
    REQUIRE(run_cli("integrate --synthetic --per-class 16 --seed 9 --out " +
                    d)
                .code == 0);

    const auto dir_a = tmp.path / "a";
    REQUIRE(run_cli("train --input " + d +
                    " --arch arch4 --epochs 2 --repeats 1 --batch-size 20 "
                    "--seed 3 --out-dir " +
                    dir_a.string())
                .code == 0);

    // Rerun purely from the recorded configuration, into a fresh directory.
    const auto dir_b = tmp.path / "b";
    REQUIRE(run_cli("train --config " +
                    (dir_a / "manifest.txt").string() + " --out-dir " +
                    dir_b.string())
                .code == 0);

    for (const char* f :
         {"model.ihck", "summary.txt", "curves.csv", "confusion.csv"}) {
        INFO(f);
        REQUIRE(slurp(dir_a / f) == slurp(dir_b / f));
    }
}

TEST_CASE("explicit flags override config values") {
    TempDir tmp("ihards-cli-override");
    const auto d = (tmp.path / "d.ihds").string();
    REQUIRE(run_cli("integrate --synthetic --per-class 10 --seed 4 --out " +
                    d)
                .code == 0);
    const auto dir_a = tmp.path / "a";
    REQUIRE(run_cli("train --input " + d +
                    " --arch arch5 --epochs 1 --repeats 1 --batch-size 25 "
                    "--seed 5 --out-dir " +
                    dir_a.string())
                .code == 0);

    const auto dir_b = tmp.path / "b";
    const auto r = run_cli("train --config " +
                           (dir_a / "manifest.txt").string() +
                           " --seed 99 --out-dir " + dir_b.string());
    REQUIRE(r.code == 0);
    REQUIRE(slurp(dir_b / "manifest.txt").find("seed=99") !=
            std::string::npos);
    // A different seed must produce a different model.
    REQUIRE(slurp(dir_a / "model.ihck") != slurp(dir_b / "model.ihck"));
}

TEST_CASE("config files reject unknown keys") {
    TempDir tmp("ihards-cli-badcfg");
    write_file(tmp.path / "bad.cfg", "nonsense=1\n");
    const auto r = run_cli("benchmark --config " +
                           (tmp.path / "bad.cfg").string());
    REQUIRE(r.code == 2);
    REQUIRE(r.output.find("nonsense") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Native-format synthesis and ingestion
// ---------------------------------------------------------------------------

TEST_CASE("synthesized source trees feed the native loaders") {
    TempDir tmp("ihards-cli-synth");
    const auto src_dir = tmp.path / "srcs";
    REQUIRE(run_cli("synth --per-class 8 --sigma 0.5 --seed 21 --out-dir " +
                    src_dir.string())
                .code == 0);
    REQUIRE(fs::exists(src_dir / "uci_har" / "activity_labels.txt"));
    REQUIRE(fs::exists(src_dir / "uci_har" / "train" / "X_train.txt"));
    REQUIRE(fs::exists(src_dir / "wisdm.txt"));
    REQUIRE(fs::exists(src_dir / "kuhar.csv"));

    const auto native = (tmp.path / "native.ihds").string();
    const auto integ = run_cli(
        "integrate --uci " + (src_dir / "uci_har").string() + " --wisdm " +
        (src_dir / "wisdm.txt").string() + " --kuhar " +
        (src_dir / "kuhar.csv").string() +
        " --per-class 8 --seed 21 --out " + native);
    REQUIRE(integ.code == 0);
    REQUIRE(integ.output.find("rows read") != std::string::npos);

    // The environment variable supplies the same defaults as the flags.
    const auto via_env = (tmp.path / "env.ihds").string();
    const std::string cmd = "IHARDS_DATA_DIR=" + src_dir.string() + " " +
                            kCli + " integrate --per-class 8 --seed 21 "
                                   "--out " +
                            via_env + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    REQUIRE(WEXITSTATUS(raw) == 0);
    REQUIRE(slurp(native) == slurp(via_env));
}

TEST_CASE("shipped label map files reproduce the built-in defaults") {
    TempDir tmp("ihards-cli-maps");
    const auto src_dir = tmp.path / "srcs";
    REQUIRE(run_cli("synth --per-class 6 --sigma 0.5 --seed 33 --out-dir " +
                    src_dir.string())
                .code == 0);
    const std::string sources = " --uci " + (src_dir / "uci_har").string() +
                                " --wisdm " + (src_dir / "wisdm.txt").string() +
                                " --kuhar " + (src_dir / "kuhar.csv").string();

    const auto builtin = (tmp.path / "builtin.ihds").string();
    REQUIRE(run_cli("integrate" + sources + " --per-class 6 --seed 33 --out " +
                    builtin)
                .code == 0);

    const auto maps = kSourceDir / "data" / "labelmaps";
    const auto from_files = (tmp.path / "files.ihds").string();
    REQUIRE(run_cli("integrate" + sources + " --uci-map " +
                    (maps / "uci_har.map").string() + " --wisdm-map " +
                    (maps / "wisdm.map").string() + " --kuhar-map " +
                    (maps / "kuhar.map").string() +
                    " --per-class 6 --seed 33 --out " + from_files)
                .code == 0);
    REQUIRE(slurp(builtin) == slurp(from_files));
}

TEST_CASE("integrate without sources or environment fails with usage code") {
    TempDir tmp("ihards-cli-nosrc");
    const std::string cmd = "env -u IHARDS_DATA_DIR " + kCli +
                            " integrate --per-class 4 --out " +
                            (tmp.path / "x.ihds").string() +
                            " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    REQUIRE(WEXITSTATUS(raw) == 2);
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

TEST_CASE("the scaling benchmark reports ratios and a verdict") {
    TempDir tmp("ihards-cli-bench");
    const auto out = (tmp.path / "bench.txt").string();
    const auto r = run_cli("benchmark --trials 1 --seed 2 --out " + out);
    REQUIRE(r.code == 0);
    REQUIRE(r.output.find("ratio") != std::string::npos);
    REQUIRE(fs::exists(out));
    const auto doc = slurp(out);
    REQUIRE(doc.find("all_linear=") != std::string::npos);
    REQUIRE(doc.find("edge.completed=") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Documentation parity
// ---------------------------------------------------------------------------

TEST_CASE("every advertised flag is documented in the README") {
    const auto readme = slurp(kSourceDir / "README.md");
    const std::regex flag_re("--[a-z][a-z0-9-]*");
    for (const auto& sub : kSubcommands) {
        const auto help = run_cli(sub + " --help");
        REQUIRE(help.code == 0);
        std::set<std::string> flags;
        for (std::sregex_iterator it(help.output.begin(), help.output.end(),
                                     flag_re),
             end;
             it != end; ++it) {
            flags.insert(it->str());
        }
        REQUIRE_FALSE(flags.empty());
        for (const auto& flag : flags) {
            if (flag == "--help") continue;
            INFO(sub << " " << flag);
            REQUIRE(readme.find(flag) != std::string::npos);
        }
    }
}
