#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <string>

#include "polaron/runner/io.hpp"

using namespace polaron;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    static const fs::path p = [] {
        const fs::path d = fs::temp_directory_path() / ("polaron_test_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return p;
}

Result run(const std::string& args, const std::string& env = "") {
    const char* exe = std::getenv("POLARON_CLI_PATH");
    if (!exe) throw std::runtime_error("POLARON_CLI_PATH not set");
    const fs::path out = work_dir() / "stdout.txt";
    const fs::path err = work_dir() / "stderr.txt";
    const std::string cmd = "cd '" + work_dir().string() + "' && " + (env.empty() ? "" : "env " + env + " ") + "'" + exe + "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

std::string write_config(const std::string& name, const std::string& text) {
    const fs::path p = work_dir() / name;
    atomic_write(p, text);
    return p.string();
}

const char* kSmall =
    "[system]\nn_bath = 10\ng_bi_final = 0.5\n[grid]\nn_points = 128\nx_max = 10\n"
    "[time]\ndt = 1e-3\nt_max = 2\nrecord_every = 20\n[solver]\ntier = effpot\n";

}  // namespace

TEST(Cli, ValidateEchoesDefaults) {
    const auto r = run("validate --config " + write_config("min.ini", "[system]\ng_bi_final = 0.3\n"));
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("n_points = 450"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("g_bi_final = 0.3"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitTwoWithLines) {
    const auto r = run("validate --config " + write_config("bad.ini", "[system]\nalpha = 0.8\nbeta = 0.8\ng_bb = -1\n"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("bad.ini:3:"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("bad.ini:4:"), std::string::npos) << r.err;
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run("quench").code, 2);                                  // no --config
    EXPECT_EQ(run("frobnicate").code, 2);                              // unknown subcommand
    EXPECT_EQ(run("quench --config /nonexistent.ini").code, 2);
    EXPECT_EQ(run("quench --config " + write_config("t.ini", kSmall) + " --tier quantum").code, 2);
    EXPECT_EQ(run("sweep --config " + write_config("t.ini", kSmall) + " --jobs 0").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, QuenchWritesManifest) {
    const fs::path out = work_dir() / "quench_out";
    const auto r = run("quench --config " + write_config("q.ini", kSmall) + " --output " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const json m = json::parse(read_file(out / "manifest.json"));
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["command"], "quench");
    EXPECT_EQ(m["outputs"].size(), 5u);
    for (const auto& o : m["outputs"]) EXPECT_EQ(o["sha256"], sha256_file(out / o["file"].get<std::string>()));
}

TEST(Cli, OutputDirectoryPrecedence) {
    const std::string cfg = write_config("p.ini", std::string(kSmall) + "[output]\ndirectory = from_config\n");
    ASSERT_EQ(run("relax --config " + cfg).code, 0);
    EXPECT_TRUE(fs::exists(work_dir() / "from_config" / "manifest.json"));
    ASSERT_EQ(run("relax --config " + cfg, "OUTPUT_DIR=from_env").code, 0);
    EXPECT_TRUE(fs::exists(work_dir() / "from_env" / "manifest.json"));
    ASSERT_EQ(run("relax --config " + cfg + " --output from_flag", "OUTPUT_DIR=from_env2").code, 0);
    EXPECT_TRUE(fs::exists(work_dir() / "from_flag" / "manifest.json"));
    EXPECT_FALSE(fs::exists(work_dir() / "from_env2"));
}

TEST(Cli, TierOverride) {
    const fs::path out = work_dir() / "tier_out";
    const auto r = run("quench --config " + write_config("o.ini", kSmall) + " --tier meanfield --output " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(json::parse(read_file(out / "summary.json"))["tier"], "meanfield");
}

TEST(Cli, SolverFailureExitsThreeWithFailedManifest) {
    // One eigenstate cannot hold a strongly quenched initial state.
    const std::string cfg = write_config("s.ini", std::string(kSmall) + "[solver.effpot]\nn_eig = 1\n");
    const fs::path out = work_dir() / "solver_fail";
    const auto r = run("quench --config " + cfg + " --output " + out.string());
    EXPECT_EQ(r.code, 3) << r.err;
    const json m = json::parse(read_file(out / "manifest.json"));
    EXPECT_EQ(m["status"], "failed");
    EXPECT_EQ(m["exit_code"], 3);
    EXPECT_NE(m["error"].get<std::string>().find("n_eig"), std::string::npos);
}

TEST(Cli, AnalyzeRoundTripAndFailure) {
    const fs::path src = work_dir() / "an_src";
    ASSERT_EQ(run("quench --config " + write_config("a.ini", kSmall) + " --output " + src.string()).code, 0);
    const fs::path out = work_dir() / "an_out";
    const auto ok = run("analyze " + (src / "contrast.csv").string() + " --output " + out.string());
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_EQ(read_file(out / "spectrum.csv"), read_file(src / "spectrum.csv"));
    atomic_write(work_dir() / "junk.csv", "t,re_s\n0,zero\n");
    EXPECT_EQ(run("analyze junk.csv --output an_bad").code, 4);
    EXPECT_EQ(run("analyze missing.csv --output an_bad2").code, 4);
}

TEST(Cli, SweepAggregates) {
    const std::string cfg = write_config("sw.ini", std::string(kSmall) + "[sweep]\nvalues = 0.2, 0.4\n");
    const fs::path out = work_dir() / "sweep_out";
    const auto r = run("sweep --config " + cfg + " --jobs 2 --output " + out.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string agg = read_file(out / "aggregate.csv");
    EXPECT_EQ(agg.substr(0, agg.find('\n')),
              "index,value,dir,status,region,min_contrast,final_contrast,peak_1,peak_2,peak_3,entropy_mean,bath_gain,virial_relative,error");
    EXPECT_NE(agg.find("\n0,0.20000000000000001,point_000,ok,"), std::string::npos) << agg;
    EXPECT_NE(agg.find("\n1,0.40000000000000002,point_001,ok,"), std::string::npos) << agg;
    EXPECT_TRUE(fs::exists(out / "point_001" / "manifest.json"));
    EXPECT_EQ(run("sweep --config " + write_config("sw0.ini", kSmall) + " --output sweep_empty").code, 2);
}
