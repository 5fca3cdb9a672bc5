#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include "camnet/config.hpp"
#include "camnet/log_io.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using testing_support::slurp;
using testing_support::temp_dir;

namespace {

struct CliResult {
    int status = -1;
    std::string output; // stdout and stderr
};

CliResult cli(const std::string& args, const std::string& env = "") {
    std::string cmd = env + (env.empty() ? "" : " ") + CAMNET_BIN + std::string(" ") + args + " 2>&1";
    CliResult r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
    const int raw = pclose(p);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

/// Lines of a CSV file without its header.
std::vector<std::string> rows(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

} // namespace

TEST(CliTest, HelpAndUsageErrors) {
    EXPECT_EQ(cli("--help").status, 0);
    EXPECT_EQ(cli("").status, 1);
    EXPECT_EQ(cli("simulate --preset nowhere").status, 1);
    EXPECT_EQ(cli("simulate").status, 1);
    EXPECT_EQ(cli("simulate --preset v2i-solo --duration -3").status, 1);
    EXPECT_EQ(cli("analyze /tmp").status, 1); // --kpi is required
}

TEST(CliTest, SimulateWritesLogsSummaryAndConfig) {
    const auto out = temp_dir("cli_sim");
    const auto r = cli("simulate --preset v2i-interferer --duration 5 --seed 3 --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("generated:"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "summary.txt"));
    EXPECT_TRUE(fs::exists(out / "config.json"));
    EXPECT_TRUE(fs::exists(out / "vehicle1_HP_tx.log"));
    EXPECT_TRUE(fs::exists(out / "hydrogen_LP_rx.log"));
    EXPECT_EQ(slurp(out / "vehicle1_HP_tx.log").rfind(std::string(camnet::kTxLogHeader), 0), 0u);
}

TEST(CliTest, SeedFromEnvironmentAndFlagPrecedence) {
    const auto a = temp_dir("cli_seed_a"), b = temp_dir("cli_seed_b"), c = temp_dir("cli_seed_c");
    ASSERT_EQ(cli("simulate --preset v2i-solo --duration 3 --out " + q(a), "CAMNET_SEED=42").status, 0);
    ASSERT_EQ(cli("simulate --preset v2i-solo --duration 3 --seed 42 --out " + q(b), "CAMNET_SEED=7").status, 0);
    ASSERT_EQ(cli("simulate --preset v2i-solo --duration 3 --seed 7 --out " + q(c)).status, 0);
    EXPECT_EQ(testing_support::hash_dir(a), testing_support::hash_dir(b));
    EXPECT_NE(testing_support::hash_dir(a), testing_support::hash_dir(c));
    EXPECT_NE(slurp(a / "summary.txt").find("seed: 42"), std::string::npos);
    EXPECT_EQ(cli("simulate --preset v2i-solo --duration 1 --out " + q(c), "CAMNET_SEED=abc").status, 1);
}

TEST(CliTest, PrintConfigRoundTrips) {
    const auto dir = temp_dir("cli_print");
    const auto r = cli("simulate --preset v2v-highway --duration 4 --seed 9 --print-config");
    ASSERT_EQ(r.status, 0) << r.output;
    {
        std::ofstream(dir / "printed.json") << r.output;
    }
    const auto s = camnet::load_scenario(dir / "printed.json");
    EXPECT_EQ(s.seed, 9u);
    EXPECT_EQ(s.duration_us, 4'000'000);
    EXPECT_FALSE(fs::exists(dir / "summary.txt"));

    // running the printed file matches running the preset
    const auto a = temp_dir("cli_print_a"), b = temp_dir("cli_print_b");
    ASSERT_EQ(cli("simulate --config " + q(dir / "printed.json") + " --out " + q(a)).status, 0);
    ASSERT_EQ(cli("simulate --preset v2v-highway --duration 4 --seed 9 --out " + q(b)).status, 0);
    std::filesystem::remove(a / "config.json");
    std::filesystem::remove(b / "config.json");
    EXPECT_EQ(testing_support::hash_dir(a), testing_support::hash_dir(b));
}

TEST(CliTest, MissingTraceFileFails) {
    const auto dir = temp_dir("cli_missing_trace");
    std::ofstream(dir / "s.json") << R"({"nodes": [{"id": "car", "kind": "OBU", "trace_file": "gone.csv",
                                         "nics": [{"profile": "HP-OBU"}]}]})";
    const auto r = cli("simulate --config " + q(dir / "s.json") + " --out " + q(dir / "out"));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("gone.csv"), std::string::npos) << r.output;
}

TEST(CliTest, AnalyzeProducesEveryKpi) {
    const auto logs = temp_dir("cli_an_logs");
    ASSERT_EQ(cli("simulate --preset v2i-interferer --duration 30 --seed 1 --out " + q(logs)).status, 0);
    const auto out = temp_dir("cli_an_out");

    auto r = cli("analyze " + q(logs) + " --kpi pdr-heatmap --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.output;
    const auto heat = out / "heatmap_hydrogen_HP_to_vehicle1.csv";
    ASSERT_TRUE(fs::exists(heat)) << r.output;
    const auto lines = rows(heat);
    ASSERT_FALSE(lines.empty());
    for (const auto& line : lines) {
        const auto cols = camnet::detail::split_csv(line);
        const double pdr = std::stod(std::string(cols.back()));
        EXPECT_GE(pdr, 0.0);
        EXPECT_LE(pdr, 1.0);
    }

    r = cli("analyze " + q(logs) + " --kpi intervals --nic HP --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_TRUE(fs::exists(out / "intervals_helium_HP.csv"));
    EXPECT_FALSE(fs::exists(out / "intervals_helium_LP.csv"));

    r = cli("analyze " + q(logs) + " --kpi uplink --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("uplink overlap"), std::string::npos) << r.output;
    EXPECT_TRUE(fs::exists(out / "uplink_vehicle1_HP_to_hydrogen.csv"));

    r = cli("analyze " + q(logs) + " --kpi horizon --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_TRUE(fs::exists(out / "horizon_vehicle1_LP_to_vehicle2.csv"));

    EXPECT_EQ(cli("analyze " + q(out / "nope") + " --kpi intervals").status, 1);
}

TEST(CliTest, ReplayNormalizesHeaderlessLogs) {
    const auto run_dir = temp_dir("cli_replay_src");
    ASSERT_EQ(cli("simulate --preset v2i-solo --duration 2 --seed 4 --out " + q(run_dir)).status, 0);
    const auto data = temp_dir("cli_replay_data");
    fs::create_directories(data / "day1");
    // strip the header and rename the way a field dataset might
    const std::string tx = slurp(run_dir / "vehicle1_HP_tx.log");
    std::ofstream(data / "day1" / "vehicle1_HP_tx.csv") << tx.substr(tx.find('\n') + 1);
    fs::copy_file(run_dir / "hydrogen_HP_rx.log", data / "hydrogen_HP_rx.txt");

    const auto out = temp_dir("cli_replay_out");
    const auto r = cli("replay " + q(data) + " --out " + q(out));
    ASSERT_EQ(r.status, 0) << r.output;
    EXPECT_EQ(slurp(out / "vehicle1_HP_tx.log"), tx);
    EXPECT_EQ(slurp(out / "hydrogen_HP_rx.log"), slurp(run_dir / "hydrogen_HP_rx.log"));
}

TEST(CliTest, ReplayRejectsEmptyAndUnknownInput) {
    const auto empty = temp_dir("cli_replay_empty");
    EXPECT_EQ(cli("replay " + q(empty) + " --out " + q(empty / "o")).status, 1);
    EXPECT_NE(cli("replay " + q(empty / "missing") + " --out " + q(empty / "o")).status, 0);

    const auto junk = temp_dir("cli_replay_junk");
    std::ofstream(junk / "notes.txt") << "\n\nhello,world\n";
    const auto r = cli("replay " + q(junk) + " --out " + q(junk / "o"));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("notes.txt:3"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("hello,world"), std::string::npos) << r.output;
}
