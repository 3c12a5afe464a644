#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/ho_basis.hpp"
#include "polaron/effpot/potential.hpp"
#include "polaron/effpot/spectrum.hpp"
#include "polaron/exactdiag/fock.hpp"

namespace polaron {

enum class Tier { MeanField, EffPot, ED };

inline std::string to_string(Tier t) {
    switch (t) {
        case Tier::MeanField: return "meanfield";
        case Tier::EffPot: return "effpot";
        case Tier::ED: return "ed";
    }
    return "?";
}

inline bool parse_tier(const std::string& s, Tier& out) {
    if (s == "meanfield") out = Tier::MeanField;
    else if (s == "effpot") out = Tier::EffPot;
    else if (s == "ed") out = Tier::ED;
    else return false;
    return true;
}

struct SystemConfig {
    double n_bath = 100.0;
    double g_bb = 0.5;
    double g_bi_initial = 0.0;
    double g_bi_final = 0.25;
    double omega_b = 1.0;
    double omega_i_initial = 1.0;
    double omega_i_final = 1.0;
    double alpha = std::numbers::sqrt2 / 2.0;
    double beta = std::numbers::sqrt2 / 2.0;
};

struct GridConfig {
    std::size_t n_points = 450;
    double x_max = 40.0;
};

struct TimeConfig {
    double dt = 5e-4;
    double t_max = 100.0;
    std::size_t record_every = 100;

    double record_dt() const { return dt * static_cast<double>(record_every); }
};

struct EDConfig {
    std::size_t n_modes = 10;
    unsigned long long dim_guard = FockBasis::kDefaultGuard;
};

struct EffpotConfig {
    DensitySource source = DensitySource::RelaxedMeanField;
    std::size_t n_eig = 40;
    std::string density_file;
};

struct SolverConfig {
    Tier tier = Tier::MeanField;
    EDConfig ed;
    EffpotConfig effpot;
};

struct OutputConfig {
    std::string directory = "output";
    std::vector<std::string> formats{"csv", "json"};

    bool wants(const std::string& f) const { return std::find(formats.begin(), formats.end(), f) != formats.end(); }
};

struct SweepConfig {
    std::string parameter = "g_bi_final";
    std::string scenario = "quench";
    std::vector<double> values;
};

struct ExperimentConfig {
    SystemConfig system;
    GridConfig grid;
    TimeConfig time;
    SolverConfig solver;
    OutputConfig output;
    SweepConfig sweep;
    std::string origin;  // file the config came from, for messages
    std::set<std::string> explicit_keys;  // "section.key" present in the file

    bool is_set(const std::string& key) const { return explicit_keys.count(key) != 0; }
};

inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> p{"g_bi_final", "g_bb", "n_bath", "n_modes"};
    return p;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last && std::isfinite(out);
}

inline bool parse_count(const std::string& s, unsigned long long& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Shortest text that reads back to the same double.
inline std::string shortest(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, p) : std::to_string(v);
}

class IssueList {
public:
    explicit IssueList(std::string origin) : origin_(std::move(origin)) {}
    void add(std::size_t line, const std::string& msg) {
        std::ostringstream s;
        s << origin_ << ":";
        if (line > 0) s << line << ":";
        s << " " << msg;
        items_.push_back(s.str());
    }
    bool empty() const { return items_.empty(); }
    std::string joined() const {
        std::string out;
        for (const auto& i : items_) out += i + "\n";
        return out;
    }
    const std::vector<std::string>& items() const { return items_; }

private:
    std::string origin_;
    std::vector<std::string> items_;
};

}  // namespace detail

/// Thrown with every problem found, one per line, each prefixed with the
/// file and line it refers to.
class ConfigErrors : public ConfigError {
public:
    explicit ConfigErrors(std::vector<std::string> items)
        : ConfigError(join(items)), items_(std::move(items)) {}
    const std::vector<std::string>& items() const { return items_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "\n" : "") + v[i];
        return s;
    }
    std::vector<std::string> items_;
};

/// Apply tier defaults for keys the file left out: the exact-diagonalization
/// tier runs a small bath on a coarser time grid.
inline void apply_tier_defaults(ExperimentConfig& c) {
    if (c.solver.tier != Tier::ED) return;
    if (!c.is_set("system.n_bath")) c.system.n_bath = 4.0;
    if (!c.is_set("time.dt")) c.time.dt = 1e-2;
    if (!c.is_set("time.t_max")) c.time.t_max = 20.0;
    if (!c.is_set("time.record_every")) c.time.record_every = 1;
}

/// Cross-field checks; appends to `issues`. Line numbers point at the key
/// when the file set it.
inline void check_config(const ExperimentConfig& c, const std::map<std::string, std::size_t>& lines, detail::IssueList& issues) {
    auto at = [&](const std::string& k) {
        auto it = lines.find(k);
        return it == lines.end() ? std::size_t{0} : it->second;
    };
    const auto& s = c.system;
    if (!(s.n_bath >= 0.0)) issues.add(at("system.n_bath"), "system.n_bath must be >= 0");
    for (auto [key, v] : {std::pair{"g_bb", s.g_bb}, {"g_bi_initial", s.g_bi_initial}, {"g_bi_final", s.g_bi_final}})
        if (v < 0.0) issues.add(at(std::string("system.") + key), std::string("system.") + key + " must be >= 0 (repulsive couplings only), got " + detail::shortest(v));
    for (auto [key, v] : {std::pair{"omega_b", s.omega_b}, {"omega_i_initial", s.omega_i_initial}, {"omega_i_final", s.omega_i_final}})
        if (!(v > 0.0)) issues.add(at(std::string("system.") + key), std::string("system.") + key + " must be > 0");
    if (s.alpha < 0.0 || s.beta < 0.0) issues.add(at(s.alpha < 0.0 ? "system.alpha" : "system.beta"), "system.alpha and system.beta must be >= 0");
    if (std::abs(s.alpha * s.alpha + s.beta * s.beta - 1.0) > 1e-10) {
        std::size_t l = std::max(at("system.alpha"), at("system.beta"));
        issues.add(l, "spin weights not normalized: alpha^2 + beta^2 = " + detail::shortest(s.alpha * s.alpha + s.beta * s.beta) + ", expected 1");
    }
    if (c.grid.n_points < 8) issues.add(at("grid.n_points"), "grid.n_points must be >= 8");
    if (!(c.grid.x_max > 0.0)) issues.add(at("grid.x_max"), "grid.x_max must be > 0");
    if (!(c.time.dt > 0.0)) issues.add(at("time.dt"), "time.dt must be > 0");
    if (!(c.time.t_max > 0.0)) issues.add(at("time.t_max"), "time.t_max must be > 0");
    if (c.time.record_every == 0) issues.add(at("time.record_every"), "time.record_every must be >= 1");
    if (c.time.dt > 0.0 && c.time.t_max > 0.0 && c.time.record_every > 0 && c.time.record_dt() > c.time.t_max)
        issues.add(at("time.record_every"), "record interval dt * record_every exceeds t_max");
    if (c.solver.tier == Tier::ED) {
        if (s.n_bath < 1.0 || std::floor(s.n_bath) != s.n_bath || s.n_bath > 255.0)
            issues.add(at("system.n_bath"), "ed tier needs an integer system.n_bath in [1, 255]");
        if (c.solver.ed.n_modes < 1 || c.solver.ed.n_modes > HOBasis::kMaxModes)
            issues.add(at("solver.ed.n_modes"), "solver.ed.n_modes must be in [1, " + std::to_string(HOBasis::kMaxModes) + "]");
        if (c.solver.ed.dim_guard == 0) issues.add(at("solver.ed.dim_guard"), "solver.ed.dim_guard must be >= 1");
    }
    if (c.solver.tier == Tier::EffPot) {
        if (c.solver.effpot.n_eig < 1 || c.solver.effpot.n_eig > max_effpot_states)
            issues.add(at("solver.effpot.n_eig"), "solver.effpot.n_eig must be in [1, " + std::to_string(max_effpot_states) + "]");
        if (c.solver.effpot.source == DensitySource::External && c.solver.effpot.density_file.empty())
            issues.add(at("solver.effpot.source"), "solver.effpot.source = file needs solver.effpot.density_file");
    }
    for (const auto& f : c.output.formats)
        if (f != "csv" && f != "json") issues.add(at("output.formats"), "unknown output format '" + f + "' (expected csv, json)");
    if (std::find(sweep_parameters().begin(), sweep_parameters().end(), c.sweep.parameter) == sweep_parameters().end())
        issues.add(at("sweep.parameter"), "sweep.parameter must be one of g_bi_final, g_bb, n_bath, n_modes");
    if (c.sweep.scenario != "quench" && c.sweep.scenario != "breathing")
        issues.add(at("sweep.scenario"), "sweep.scenario must be quench or breathing");
}

/// Parse the bracketed-section key = value format. Everything wrong with the
/// text is collected before throwing; nothing is silently skipped.
inline ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>") {
    ExperimentConfig c;
    c.origin = origin;
    detail::IssueList issues(origin);
    std::map<std::string, std::size_t> lines;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;

    const std::set<std::string> sections{"system", "grid", "time", "solver", "solver.ed", "solver.effpot", "output", "sweep"};

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                issues.add(lineno, "malformed section header '" + line + "'");
                continue;
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!sections.count(section)) issues.add(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.add(lineno, "expected 'key = value', got '" + line + "'");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty()) {
            issues.add(lineno, "key '" + key + "' appears before any [section]");
            continue;
        }
        if (!sections.count(section)) continue;  // already reported
        const std::string full = section + "." + key;
        if (lines.count(full)) {
            issues.add(lineno, "duplicate key " + full + " (first set on line " + std::to_string(lines[full]) + ")");
            continue;
        }
        lines[full] = lineno;
        c.explicit_keys.insert(full);

        auto real = [&](double& dst) {
            if (!detail::parse_double(value, dst)) issues.add(lineno, full + ": '" + value + "' is not a finite number");
        };
        auto count = [&](auto& dst) {
            unsigned long long v = 0;
            if (!detail::parse_count(value, v)) issues.add(lineno, full + ": '" + value + "' is not a non-negative integer");
            else dst = static_cast<std::remove_reference_t<decltype(dst)>>(v);
        };

        if (section == "system") {
            static const std::map<std::string, double SystemConfig::*> keys{
                {"n_bath", &SystemConfig::n_bath}, {"g_bb", &SystemConfig::g_bb},
                {"g_bi_initial", &SystemConfig::g_bi_initial}, {"g_bi_final", &SystemConfig::g_bi_final},
                {"omega_b", &SystemConfig::omega_b}, {"omega_i_initial", &SystemConfig::omega_i_initial},
                {"omega_i_final", &SystemConfig::omega_i_final}, {"alpha", &SystemConfig::alpha}, {"beta", &SystemConfig::beta}};
            auto it = keys.find(key);
            if (it == keys.end()) issues.add(lineno, "unknown key " + full);
            else real(c.system.*(it->second));
        } else if (section == "grid") {
            if (key == "n_points") count(c.grid.n_points);
            else if (key == "x_max") real(c.grid.x_max);
            else issues.add(lineno, "unknown key " + full);
        } else if (section == "time") {
            if (key == "dt") real(c.time.dt);
            else if (key == "t_max") real(c.time.t_max);
            else if (key == "record_every") count(c.time.record_every);
            else issues.add(lineno, "unknown key " + full);
        } else if (section == "solver") {
            if (key == "tier") {
                if (!parse_tier(value, c.solver.tier)) issues.add(lineno, "solver.tier: '" + value + "' is not one of meanfield, effpot, ed");
            } else {
                issues.add(lineno, "unknown key " + full);
            }
        } else if (section == "solver.ed") {
            if (key == "n_modes") count(c.solver.ed.n_modes);
            else if (key == "dim_guard") count(c.solver.ed.dim_guard);
            else issues.add(lineno, "unknown key " + full);
        } else if (section == "solver.effpot") {
            if (key == "source") {
                if (value == "tf") c.solver.effpot.source = DensitySource::ThomasFermi;
                else if (value == "relaxed") c.solver.effpot.source = DensitySource::RelaxedMeanField;
                else if (value == "file") c.solver.effpot.source = DensitySource::External;
                else issues.add(lineno, "solver.effpot.source: '" + value + "' is not one of tf, relaxed, file");
            } else if (key == "n_eig") {
                count(c.solver.effpot.n_eig);
            } else if (key == "density_file") {
                c.solver.effpot.density_file = value;
            } else {
                issues.add(lineno, "unknown key " + full);
            }
        } else if (section == "output") {
            if (key == "directory") c.output.directory = value;
            else if (key == "formats") c.output.formats = detail::split_list(value);
            else issues.add(lineno, "unknown key " + full);
        } else if (section == "sweep") {
            if (key == "parameter") c.sweep.parameter = value;
            else if (key == "scenario") c.sweep.scenario = value;
            else if (key == "values") {
                c.sweep.values.clear();
                for (const auto& item : detail::split_list(value)) {
                    double v = 0.0;
                    if (!detail::parse_double(item, v)) issues.add(lineno, "sweep.values: '" + item + "' is not a finite number");
                    else c.sweep.values.push_back(v);
                }
            } else {
                issues.add(lineno, "unknown key " + full);
            }
        }
    }
    apply_tier_defaults(c);
    check_config(c, lines, issues);
    if (!issues.empty()) throw ConfigErrors(issues.items());
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigErrors({path + ": cannot open config file"});
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str(), path);
}

/// Re-check after programmatic edits (tier override, sweep point).
inline void revalidate(ExperimentConfig& c) {
    apply_tier_defaults(c);
    detail::IssueList issues(c.origin.empty() ? "<config>" : c.origin);
    check_config(c, {}, issues);
    if (!issues.empty()) throw ConfigErrors(issues.items());
}

/// Full config with defaults filled in, in the input format.
inline std::string to_text(const ExperimentConfig& c) {
    using detail::shortest;
    std::ostringstream o;
    const auto& s = c.system;
    o << "[system]\n"
      << "n_bath = " << shortest(s.n_bath) << "\n"
      << "g_bb = " << shortest(s.g_bb) << "\n"
      << "g_bi_initial = " << shortest(s.g_bi_initial) << "\n"
      << "g_bi_final = " << shortest(s.g_bi_final) << "\n"
      << "omega_b = " << shortest(s.omega_b) << "\n"
      << "omega_i_initial = " << shortest(s.omega_i_initial) << "\n"
      << "omega_i_final = " << shortest(s.omega_i_final) << "\n"
      << "alpha = " << shortest(s.alpha) << "\n"
      << "beta = " << shortest(s.beta) << "\n\n"
      << "[grid]\n"
      << "n_points = " << c.grid.n_points << "\n"
      << "x_max = " << shortest(c.grid.x_max) << "\n\n"
      << "[time]\n"
      << "dt = " << shortest(c.time.dt) << "\n"
      << "t_max = " << shortest(c.time.t_max) << "\n"
      << "record_every = " << c.time.record_every << "\n\n"
      << "[solver]\n"
      << "tier = " << to_string(c.solver.tier) << "\n\n"
      << "[solver.ed]\n"
      << "n_modes = " << c.solver.ed.n_modes << "\n"
      << "dim_guard = " << c.solver.ed.dim_guard << "\n\n"
      << "[solver.effpot]\n"
      << "source = " << to_string(c.solver.effpot.source) << "\n"
      << "n_eig = " << c.solver.effpot.n_eig << "\n";
    if (!c.solver.effpot.density_file.empty()) o << "density_file = " << c.solver.effpot.density_file << "\n";
    o << "\n[output]\n"
      << "directory = " << c.output.directory << "\n"
      << "formats = ";
    for (std::size_t i = 0; i < c.output.formats.size(); ++i) o << (i ? ", " : "") << c.output.formats[i];
    o << "\n\n[sweep]\n"
      << "parameter = " << c.sweep.parameter << "\n"
      << "scenario = " << c.sweep.scenario << "\n"
      << "values = ";
    for (std::size_t i = 0; i < c.sweep.values.size(); ++i) o << (i ? ", " : "") << shortest(c.sweep.values[i]);
    o << "\n";
    return o.str();
}

}  // namespace polaron
