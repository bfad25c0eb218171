// Drives the built command-line tool as a subprocess.
#include "sloshlab/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

namespace fs = std::filesystem;
using namespace sloshlab;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("sloshlab_cli_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path &p) { return fs::exists(p) ? io::read_text(p.string()) : std::string(); }

Result run(const std::string &args, const std::string &env = "") {
    const auto out = work_dir() / "stdout.txt";
    const auto err = work_dir() / "stderr.txt";
    const std::string cmd = "cd '" + work_dir().string() + "' && " + (env.empty() ? "" : env + " ") + "'" +
                            SLOSHLAB_CLI + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

bool contains(const std::string &hay, const std::string &needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST(Cli, BudgetTable) {
    const auto r = run("budget --mode as-published");
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char *s : {"8000", "38400", "46400", "257", "126.75", "22.75", "9633", "3481", "13114", " 2.9 "})
        EXPECT_TRUE(contains(r.out, s)) << s << "\n" << r.out;
    EXPECT_TRUE(r.err.empty());
}

TEST(Cli, BudgetJson) {
    ASSERT_EQ(run("budget --json budget.json").code, 0);
    const auto j = io::read_json((work_dir() / "budget.json").string());
    EXPECT_EQ(j["mss_rate_bps"]["total"], 46400.0);
    EXPECT_EQ(j["campaign"]["total_mb"], 13114);
}

TEST(Cli, UsageErrors) {
    auto r = run("budget --bogus");
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(contains(r.err + r.out, "Usage")) << r.err;
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("fly").code, 1);
    EXPECT_EQ(run("budget --mode loud").code, 1);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, ZeroFrameIs257Bytes) {
    ASSERT_EQ(run("frames encode --zero 1 --output zero.bin").code, 0);
    EXPECT_EQ(fs::file_size(work_dir() / "zero.bin"), 257u);
    const auto r = run("frames decode --input zero.bin");
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), ','), 127);
}

TEST(Cli, FramesRoundTrip) {
    std::string csv;
    for (int f = 0; f < 3; ++f) {
        for (int i = 0; i < 128; ++i) csv += (i ? "," : "") + std::to_string((f * 1000 + i * 31) % 4096);
        csv += "\n";
    }
    io::write_text((work_dir() / "frames.csv").string(), csv);
    ASSERT_EQ(run("frames encode --input frames.csv --output frames.bin").code, 0);
    EXPECT_EQ(fs::file_size(work_dir() / "frames.bin"), 3u * 257u);
    ASSERT_EQ(run("frames decode --input frames.bin --output back.csv").code, 0);
    EXPECT_EQ(slurp(work_dir() / "back.csv"), csv);
}

TEST(Cli, MalformedFramesAreValidationErrors) {
    io::write_text((work_dir() / "short.bin").string(), "abc");
    auto r = run("frames decode --input short.bin");
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(contains(r.err, "frame length"));
    EXPECT_TRUE(r.out.empty());
    std::string big = "5000";
    for (int i = 0; i < 127; ++i) big += ",0";
    io::write_text((work_dir() / "big.csv").string(), big + "\n");
    r = run("frames encode --input big.csv --output big.bin");
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(contains(r.err, "12 bits")) << r.err;
}

TEST(Cli, MissingFileIsRuntimeError) {
    const auto r = run("train --dataset nowhere.json");
    EXPECT_EQ(r.code, 3);
    EXPECT_TRUE(contains(r.err, "nowhere.json"));
}

TEST(Cli, DetectReportIdentity) {
    const auto r = run("detect");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string label;
        double g = 0, od = 0, o = 0, margin = 0;
        if (!(ls >> label >> g >> od >> o >> margin)) continue;
        ++rows;
        // Printed values keep nine digits; the rate is the acceleration times the window.
        EXPECT_NEAR(o, od * 0.05, 1e-8 * o) << line;
        EXPECT_GT(margin, 1.0);
    }
    EXPECT_EQ(rows, 4);
}

TEST(Cli, SimulateConfigRoundTrip) {
    auto r = run("simulate --dump-config --controller adaptive --excitation xy --seed 11 --out sim_a");
    ASSERT_EQ(r.code, 0) << r.err;
    io::write_text((work_dir() / "sim.json").string(), r.out);
    const auto cfg = io::load_run_config((work_dir() / "sim.json").string());
    EXPECT_EQ(cfg.controller, "adaptive");
    EXPECT_EQ(cfg.seed, 11u);

    ASSERT_EQ(run("simulate --controller adaptive --excitation xy --seed 11 --out sim_a").code, 0);
    ASSERT_EQ(run("simulate --config sim.json --out sim_b").code, 0);
    const auto a = slurp(work_dir() / "sim_a" / "record.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(work_dir() / "sim_b" / "record.csv"));
    EXPECT_EQ(slurp(work_dir() / "sim_a" / "metrics.json"), slurp(work_dir() / "sim_b" / "metrics.json"));
    EXPECT_EQ(slurp(work_dir() / "sim_a" / "mss.csv"), slurp(work_dir() / "sim_b" / "mss.csv"));
}

TEST(Cli, SeedControlsNoise) {
    ASSERT_EQ(run("simulate --seed 1 --out seed1").code, 0);
    ASSERT_EQ(run("simulate --out seed1_env", "SLOSHLAB_SEED=1").code, 0);
    ASSERT_EQ(run("simulate --seed 2 --out seed2").code, 0);
    const auto a = slurp(work_dir() / "seed1" / "mss.csv");
    EXPECT_EQ(a, slurp(work_dir() / "seed1_env" / "mss.csv"));
    EXPECT_NE(a, slurp(work_dir() / "seed2" / "mss.csv"));
}

TEST(Cli, BadConfigIsValidationError) {
    io::write_text((work_dir() / "bad.json").string(), R"({"plant": {"a_s": 1.0, "typo": 2}})");
    const auto r = run("simulate --config bad.json");
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(contains(r.err, "typo"));
}

TEST(Cli, PredictorPipeline) {
    io::write_text((work_dir() / "grid.json").string(),
                   R"({"torques": [0.004], "durations": [5.0, 15.0], "dwells": [32.5]})");
    ASSERT_EQ(run("dataset --grid grid.json --out train.json --seed 1").code, 0);
    ASSERT_EQ(run("dataset --grid grid.json --out test.json --seed 2 --snr 30").code, 0);
    ASSERT_EQ(run("train --dataset train.json --epochs 3 --out narx.json --seed 1").code, 0);
    const auto first = slurp(work_dir() / "narx.json");
    ASSERT_EQ(run("train --dataset train.json --epochs 3 --out narx.json --seed 1").code, 0);
    EXPECT_EQ(first, slurp(work_dir() / "narx.json"));
    ASSERT_EQ(run("train --dataset train.json --kind feedforward --epochs 3 --out ff.json").code, 0);
    const auto r = run("evaluate --dataset test.json --model narx=narx.json --model ff=ff.json --snr inf 10");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(contains(r.out, "narx"));
    EXPECT_TRUE(contains(r.out, "ff"));
    // training data is refused as test data
    EXPECT_EQ(run("evaluate --dataset train.json --model narx.json").code, 2);
}

TEST(Cli, ComparePairedTable) {
    const auto r = run("compare --candidate ml --oracle --csv cmp.csv");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(contains(r.out, "median ratio"));
    const auto csv = slurp(work_dir() / "cmp.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 28);
}

TEST(Cli, PlanCounts) {
    const auto r = run("plan --out manifests.json");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(contains(r.out, "229"));
    const auto j = io::read_json((work_dir() / "manifests.json").string());
    EXPECT_EQ(j["count"], 229);
    EXPECT_EQ(j["camera"], 76);
}

TEST(Cli, CampaignJobsDoNotChangeReport) {
    ASSERT_EQ(run("campaign --jobs 1 --out c1.json").code, 0);
    ASSERT_EQ(run("campaign --jobs 3 --out c3.json").code, 0);
    const auto a = slurp(work_dir() / "c1.json");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(work_dir() / "c3.json"));
}
