#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

#include "polaron/runner.hpp"

using namespace polaron;

namespace {

struct Args {
    std::string config;
    std::string output;
    std::string tier;
    std::string input;
    std::size_t jobs = 1;
};

ExperimentConfig resolve_config(const Args& a, bool required) {
    ExperimentConfig c;
    if (!a.config.empty()) c = load_config(a.config);
    else if (required) throw ConfigError("--config is required for this command");
    if (!a.tier.empty()) {
        Tier t;
        if (!parse_tier(a.tier, t)) throw ConfigError("--tier: unknown tier '" + a.tier + "' (meanfield, effpot, ed)");
        c.solver.tier = t;
        revalidate(c);
    }
    if (!a.output.empty()) c.output.directory = a.output;
    else if (const char* env = std::getenv("OUTPUT_DIR"); env && *env) c.output.directory = env;
    return c;
}

int report(const std::exception& e, RunStatus s) {
    const char* kind = s == RunStatus::ConfigError ? "config error" : s == RunStatus::AnalysisError ? "analysis error" : "solver error";
    std::cerr << "polaron: " << kind << ": " << e.what() << "\n";
    return static_cast<int>(s);
}

int run(const std::string& command, const Args& a) {
    ExperimentConfig c;
    try {
        c = resolve_config(a, command != "analyze");
    } catch (const std::exception& e) {
        return report(e, RunStatus::ConfigError);
    }
    if (command == "validate") {
        std::cout << to_text(c);
        return 0;
    }
    Manifest m(c.output.directory, command, c);
    try {
        if (command == "relax") run_relax(c, m);
        else if (command == "quench") run_quench(c, m);
        else if (command == "breathing") run_breathing(c, m);
        else if (command == "analyze") run_analyze(a.input, c, m);
        else if (command == "sweep") {
            const auto pts = run_sweep(c, a.jobs, m);
            std::size_t failed = 0;
            for (const auto& p : pts)
                if (p.status != RunStatus::Ok) {
                    ++failed;
                    std::cerr << "polaron: sweep point " << p.dir << " (" << p.value << ") failed: " << p.error << "\n";
                }
            m.diagnostics() = {{"points", pts.size()}, {"failed", failed}};
        }
        m.finish("ok");
        std::cout << c.output.directory << "\n";
        return 0;
    } catch (const std::exception& e) {
        const RunStatus s = classify_exception(e);
        try {
            m.finish("failed", e.what(), static_cast<int>(s));
        } catch (const std::exception& w) {
            std::cerr << "polaron: could not write manifest: " << w.what() << "\n";
        }
        return report(e, s);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polaron: impurity quench dynamics in a trapped Bose gas"};
    app.require_subcommand(1);
    Args a;
    auto common = [&](CLI::App* sub, bool with_jobs) {
        sub->add_option("--config", a.config, "experiment config file");
        sub->add_option("--output", a.output, "output directory (overrides OUTPUT_DIR and the config)");
        sub->add_option("--tier", a.tier, "solver tier override: meanfield, effpot, ed");
        if (with_jobs) sub->add_option("--jobs", a.jobs, "concurrent sweep points")->check(CLI::PositiveNumber);
    };
    common(app.add_subcommand("relax", "relax the pre-quench ground state"), false);
    common(app.add_subcommand("quench", "interaction quench and contrast"), false);
    common(app.add_subcommand("breathing", "trap quench and breathing frequency"), false);
    common(app.add_subcommand("sweep", "sweep one parameter over independent runs"), true);
    common(app.add_subcommand("validate", "check a config and echo it with defaults"), false);
    auto* an = app.add_subcommand("analyze", "recompute observables from a contrast.csv");
    common(an, false);
    an->add_option("contrast", a.input, "contrast.csv from an earlier run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return run(app.get_subcommands().front()->get_name(), a);
}
