#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <unistd.h>

#include "polaron/runner.hpp"

using namespace polaron;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("polaron_test_runner_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string expect_config_error(const std::string& text) {
    try {
        parse_config(text, "cfg.ini");
    } catch (const ConfigErrors& e) {
        return e.what();
    }
    ADD_FAILURE() << "no ConfigErrors for:\n" << text;
    return {};
}

// Small enough for a unit test, same code paths as the full-size runs.
const char* kSmallMeanField =
    "[system]\nn_bath = 10\ng_bi_final = 0.5\n[grid]\nn_points = 128\nx_max = 10\n"
    "[time]\ndt = 1e-3\nt_max = 2\nrecord_every = 20\n";
const char* kSmallEffpot =
    "[system]\nn_bath = 10\ng_bi_final = 0.5\n[grid]\nn_points = 128\nx_max = 10\n"
    "[time]\ndt = 1e-3\nt_max = 2\nrecord_every = 20\n[solver]\ntier = effpot\n";
const char* kSmallED =
    "[system]\nn_bath = 2\ng_bi_final = 0.5\n[grid]\nn_points = 128\nx_max = 10\n"
    "[time]\ndt = 0.05\nt_max = 2\n[solver]\ntier = ed\n[solver.ed]\nn_modes = 5\n";

json run_in(const fs::path& dir, const ExperimentConfig& c, const std::string& command = "quench") {
    Manifest m(dir, command, c);
    json s = command == "breathing" ? run_breathing(c, m) : command == "relax" ? run_relax(c, m) : run_quench(c, m);
    m.finish("ok");
    return s;
}

std::set<std::string> keys(const json& j) {
    std::set<std::string> k;
    for (auto it = j.begin(); it != j.end(); ++it) k.insert(it.key());
    return k;
}

}  // namespace

TEST(Config, MinimalFileTakesDefaults) {
    const auto c = parse_config("[system]\ng_bi_final = 0.25\n");
    EXPECT_EQ(c.grid.n_points, 450u);
    EXPECT_DOUBLE_EQ(c.grid.x_max, 40.0);
    EXPECT_DOUBLE_EQ(c.time.dt, 5e-4);
    EXPECT_DOUBLE_EQ(c.time.t_max, 100.0);
    EXPECT_EQ(c.solver.tier, Tier::MeanField);
    EXPECT_DOUBLE_EQ(c.system.n_bath, 100.0);
    EXPECT_NEAR(c.system.alpha * c.system.alpha + c.system.beta * c.system.beta, 1.0, 1e-15);
    EXPECT_TRUE(c.output.wants("csv"));
    EXPECT_TRUE(c.output.wants("json"));
}

TEST(Config, EmptyFileIsValid) { EXPECT_NO_THROW(parse_config("")); }

TEST(Config, CommentsAndWhitespace) {
    const auto c = parse_config("# header\n\n[ system ]\n  g_bb=0.7   ; trailing\n[time]\nt_max = 5 # end\n");
    EXPECT_DOUBLE_EQ(c.system.g_bb, 0.7);
    EXPECT_DOUBLE_EQ(c.time.t_max, 5.0);
}

TEST(Config, WeightNormalization) {
    const auto msg = expect_config_error("[system]\nalpha = 0.8\nbeta = 0.8\n");
    EXPECT_NE(msg.find("cfg.ini:3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("not normalized"), std::string::npos) << msg;
    EXPECT_NO_THROW(parse_config("[system]\nalpha = 0.6\nbeta = 0.8\n"));
}

TEST(Config, NegativeCouplingRejected) {
    const auto msg = expect_config_error("[system]\n\ng_bb = -0.5\n");
    EXPECT_NE(msg.find("cfg.ini:3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("g_bb"), std::string::npos);
    expect_config_error("[system]\ng_bi_final = -1\n");
    expect_config_error("[system]\nomega_i_final = 0\n");
}

TEST(Config, AllProblemsReportedWithLines) {
    const std::string text =
        "[system]\n"
        "g_bb = 0.5\n"
        "g_bb = 0.6\n"
        "colour = blue\n"
        "[grid]\n"
        "n_points = lots\n"
        "[nowhere]\n"
        "x = 1\n"
        "[time]\n"
        "dt = -1\n"
        "just words\n";
    try {
        parse_config(text, "cfg.ini");
        FAIL() << "expected ConfigErrors";
    } catch (const ConfigErrors& e) {
        const auto& items = e.items();
        auto has = [&](const std::string& needle) {
            for (const auto& i : items)
                if (i.find(needle) != std::string::npos) return true;
            return false;
        };
        EXPECT_TRUE(has("cfg.ini:3: duplicate key system.g_bb (first set on line 2)"));
        EXPECT_TRUE(has("cfg.ini:4: unknown key system.colour"));
        EXPECT_TRUE(has("cfg.ini:6: grid.n_points"));
        EXPECT_TRUE(has("cfg.ini:7: unknown section [nowhere]"));
        EXPECT_TRUE(has("cfg.ini:10: time.dt must be > 0"));
        EXPECT_TRUE(has("cfg.ini:11: expected 'key = value'"));
        EXPECT_EQ(items.size(), 6u);
    }
}

TEST(Config, ErrorsAreConfigErrors) { EXPECT_THROW(parse_config("[solver]\ntier = quantum\n"), ConfigError); }

TEST(Config, EdTierDefaultsOnlyFillUnsetKeys) {
    const auto c = parse_config("[solver]\ntier = ed\n[time]\nt_max = 7\n");
    EXPECT_DOUBLE_EQ(c.system.n_bath, 4.0);
    EXPECT_DOUBLE_EQ(c.time.dt, 1e-2);
    EXPECT_DOUBLE_EQ(c.time.t_max, 7.0);
    EXPECT_EQ(c.time.record_every, 1u);
    expect_config_error("[solver]\ntier = ed\n[system]\nn_bath = 2.5\n");
    expect_config_error("[solver]\ntier = ed\n[solver.ed]\nn_modes = 0\n");
}

TEST(Config, EchoRoundTrips) {
    const auto c = parse_config("[system]\ng_bi_final = 0.1\nalpha = 0.6\nbeta = 0.8\n[solver]\ntier = effpot\n[sweep]\nvalues = 0.1, 0.2\n");
    const std::string text = to_text(c);
    const auto again = parse_config(text);
    EXPECT_EQ(to_text(again), text);
    EXPECT_DOUBLE_EQ(again.system.alpha, 0.6);
    EXPECT_EQ(again.sweep.values.size(), 2u);
    EXPECT_NE(text.find("n_points = 450"), std::string::npos);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_config("/nonexistent/cfg.ini"), ConfigError); }

TEST(Io, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, CsvRoundTripIsExact) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Table t{{"a", "b"}, {{}, {}}};
    for (int i = 0; i < 500; ++i) {
        t.columns[0].push_back(u(rng) * std::pow(10.0, 40.0 * u(rng)));
        t.columns[1].push_back(std::nextafter(1.0, 2.0) + i);
    }
    t.columns[0].push_back(std::numeric_limits<double>::denorm_min());
    t.columns[1].push_back(-0.0);
    const fs::path p = scratch("csv") / "t.csv";
    atomic_write(p, t.to_csv());
    const Table back = read_csv(p);
    ASSERT_EQ(back.header, t.header);
    ASSERT_EQ(back.rows(), t.rows());
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t r = 0; r < t.rows(); ++r) EXPECT_EQ(back.columns[k][r], t.columns[k][r]);
}

TEST(Io, CsvErrorsNameTheLine) {
    const fs::path p = scratch("csvbad") / "bad.csv";
    atomic_write(p, "t,x\n0,1\n1,oops\n");
    try {
        read_csv(p);
        FAIL();
    } catch (const AnalysisError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv:3:"), std::string::npos) << e.what();
    }
    atomic_write(p, "t,x\n0,1,2\n");
    EXPECT_THROW(read_csv(p), AnalysisError);
}

TEST(Io, AtomicWriteReplacesAndLeavesNoTemporaries) {
    const fs::path dir = scratch("atomic");
    atomic_write(dir / "f.txt", "first");
    atomic_write(dir / "f.txt", "second");
    EXPECT_EQ(read_file(dir / "f.txt"), "second");
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
    EXPECT_EQ(n, 1u);
}

TEST(Io, ManifestListsEveryOutputWithChecksum) {
    const fs::path dir = scratch("manifest");
    const auto c = parse_config("");
    Manifest m(dir, "quench", c);
    m.emit("a.txt", "hello\n");
    m.emit_json("b.json", {{"x", 1}});
    m.diagnostics() = {{"virial_relative", 1e-9}};
    m.finish("ok");
    const json j = json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(j["schema_version"], kSchemaVersion);
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["config"], to_text(c));
    ASSERT_EQ(j["outputs"].size(), 2u);
    for (const auto& o : j["outputs"]) EXPECT_EQ(o["sha256"], sha256_file(dir / o["file"].get<std::string>()));
    EXPECT_TRUE(j.contains("started_utc"));
    EXPECT_TRUE(j.contains("finished_utc"));
}

TEST(Scenario, UnquenchedMeanFieldContrastIsOne) {
    auto c = parse_config(kSmallMeanField);
    c.system.g_bi_final = 0.0;
    const fs::path dir = scratch("unquenched");
    run_in(dir, c);
    const Table t = read_csv(dir / "contrast.csv");
    for (double v : t.column("abs_s")) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Scenario, QuenchEveryTierSameSchema) {
    std::vector<json> sums;
    for (const char* text : {kSmallMeanField, kSmallEffpot, kSmallED}) {
        const auto c = parse_config(text);
        const fs::path dir = scratch("tier_" + to_string(c.solver.tier));
        const json s = run_in(dir, c);
        for (const char* f : {"contrast.csv", "spectrum.csv", "densities.csv", "energies.csv", "summary.json", "manifest.json"})
            EXPECT_TRUE(fs::exists(dir / f)) << to_string(c.solver.tier) << " " << f;
        EXPECT_LE(s["contrast"]["max_abs"].get<double>(), 1.0 + 1e-12);
        EXPECT_EQ(s["tier"], to_string(c.solver.tier));
        const Table ct = read_csv(dir / "contrast.csv");
        EXPECT_EQ(ct.header, (std::vector<std::string>{"t", "re_s", "im_s", "abs_s", "phase", "weighted"}));
        EXPECT_NEAR(ct.column("t").back(), 2.0, 1e-9);
        sums.push_back(s);
    }
    EXPECT_EQ(keys(sums[0]), keys(sums[1]));
    EXPECT_EQ(keys(sums[0]), keys(sums[2]));
    EXPECT_TRUE(sums[0]["entanglement"].is_null());
    EXPECT_FALSE(sums[2]["entanglement"].is_null());
    EXPECT_TRUE(sums[0]["region"].is_null());  // span 2 is too short to classify
}

TEST(Scenario, FormatsSelectFiles) {
    auto c = parse_config(kSmallEffpot);
    c.output.formats = {"json"};
    const fs::path dir = scratch("json_only");
    run_in(dir, c);
    EXPECT_FALSE(fs::exists(dir / "contrast.csv"));
    EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Scenario, RelaxWritesDensitiesAndVirial) {
    const auto c = parse_config(kSmallMeanField);
    const fs::path dir = scratch("relax");
    const json s = run_in(dir, c, "relax");
    EXPECT_LT(std::abs(s["diagnostics"]["virial_relative"].get<double>()), 1e-5);
    EXPECT_TRUE(fs::exists(dir / "densities.csv"));
}

TEST(Scenario, BreathingBareTrap) {
    auto c = parse_config(
        "[system]\nn_bath = 10\ng_bi_final = 0\nomega_i_initial = 0.95\n[grid]\nn_points = 128\nx_max = 10\n"
        "[time]\nt_max = 30\n[solver]\ntier = effpot\n");
    const fs::path dir = scratch("breathing");
    const json s = run_in(dir, c, "breathing");
    EXPECT_NEAR(s["omega_br"].get<double>(), 2.0, 0.02);
    EXPECT_TRUE(fs::exists(dir / "variance.csv"));
    EXPECT_TRUE(fs::exists(dir / "omega_br.json"));
}

TEST(Scenario, BreathingPreconditions) {
    auto same = parse_config("[solver]\ntier = effpot\n");
    Manifest m(scratch("breathing_bad"), "breathing", same);
    EXPECT_THROW(run_breathing(same, m), ConfigError);
    auto ed = parse_config("[system]\nomega_i_initial = 0.95\n[solver]\ntier = ed\n");
    EXPECT_THROW(run_breathing(ed, m), ConfigError);
}

TEST(Scenario, AnalyzeReproducesQuenchSpectrum) {
    const auto c = parse_config(kSmallEffpot);
    const fs::path dir = scratch("analyze_src");
    const json q = run_in(dir, c);
    const fs::path out = scratch("analyze_out");
    Manifest m(out, "analyze", c);
    const json a = run_analyze(dir / "contrast.csv", c, m);
    EXPECT_EQ(a["spectrum"]["peaks"], q["spectrum"]["peaks"]);
    EXPECT_EQ(read_file(out / "spectrum.csv"), read_file(dir / "spectrum.csv"));
    EXPECT_NEAR(a["sum_rule"].get<double>(), 1.0, 0.02);

    atomic_write(out / "broken.csv", "t,re_s,im_s\n0,1,0\n0.1,1,0\n0.3,1,0\n");
    EXPECT_THROW(run_analyze(out / "broken.csv", c, m), AnalysisError);
    EXPECT_THROW(run_analyze(out / "missing.csv", c, m), AnalysisError);
}

TEST(Sweep, EmptyValuesRejected) {
    auto c = parse_config(kSmallEffpot);
    Manifest m(scratch("sweep_empty"), "sweep", c);
    EXPECT_THROW(run_sweep(c, 1, m), ConfigError);
}

TEST(Sweep, RepeatedValueGivesIdenticalOutputs) {
    auto c = parse_config(kSmallMeanField);
    c.sweep.values = {0.3, 0.3, 0.6};
    const fs::path dir = scratch("sweep_det");
    Manifest m(dir, "sweep", c);
    const auto pts = run_sweep(c, 2, m);
    m.finish("ok");
    ASSERT_EQ(pts.size(), 3u);
    for (const char* f : {"contrast.csv", "spectrum.csv", "densities.csv", "energies.csv", "summary.json"})
        EXPECT_EQ(sha256_file(dir / "point_000" / f), sha256_file(dir / "point_001" / f)) << f;
    EXPECT_NE(sha256_file(dir / "point_000" / "contrast.csv"), sha256_file(dir / "point_002" / "contrast.csv"));

    // Same aggregate whatever the thread count.
    const fs::path dir1 = scratch("sweep_det_serial");
    Manifest m1(dir1, "sweep", c);
    run_sweep(c, 1, m1);
    EXPECT_EQ(read_file(dir / "aggregate.csv"), read_file(dir1 / "aggregate.csv"));
    EXPECT_EQ(read_file(dir / "aggregate.json"), read_file(dir1 / "aggregate.json"));
}

TEST(Sweep, FailedPointRecordedAndSweepContinues) {
    auto c = parse_config(kSmallED);
    c.sweep.parameter = "n_modes";
    c.sweep.values = {4, 2.5, 5};
    const fs::path dir = scratch("sweep_fail");
    Manifest m(dir, "sweep", c);
    const auto pts = run_sweep(c, 1, m);
    EXPECT_EQ(pts[0].status, RunStatus::Ok);
    EXPECT_EQ(pts[1].status, RunStatus::ConfigError);
    EXPECT_EQ(pts[2].status, RunStatus::Ok);
    const json pm = json::parse(read_file(dir / "point_001" / "manifest.json"));
    EXPECT_EQ(pm["status"], "failed");
    EXPECT_EQ(pm["exit_code"], 2);
    const std::string agg = read_file(dir / "aggregate.csv");
    EXPECT_NE(agg.find("point_001,failed"), std::string::npos);
}

TEST(Sweep, EdMinContrastNonIncreasing) {
    auto c = parse_config(kSmallED);
    c.sweep.values = {0.1, 0.5, 1.0, 2.0};
    Manifest m(scratch("sweep_ed"), "sweep", c);
    const auto pts = run_sweep(c, 1, m);
    double prev = 2.0;
    for (const auto& p : pts) {
        ASSERT_EQ(p.status, RunStatus::Ok) << p.error;
        const double mn = p.summary["contrast"]["min_abs"].get<double>();
        EXPECT_LE(mn, prev);
        prev = mn;
    }
}

TEST(Exit, ErrorClassesMapToCodes) {
    EXPECT_EQ(classify_exception(ConfigError("x")), RunStatus::ConfigError);
    EXPECT_EQ(classify_exception(SolverError("x")), RunStatus::SolverError);
    EXPECT_EQ(classify_exception(AnalysisError("x")), RunStatus::AnalysisError);
    EXPECT_EQ(classify_exception(DomainError("x")), RunStatus::SolverError);
}
