// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Optional argument: scratch directory for the runner outputs.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "polaron/runner.hpp"

using namespace polaron;
using cd = std::complex<double>;

namespace {

fs::path g_scratch;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int digits = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

ExperimentConfig config(const std::string& text) { return parse_config(text, "<acceptance>"); }

std::string effpot_text(double g_bi, const std::string& source = "relaxed") {
    return "[system]\nn_bath = 100\ng_bb = 0.5\ng_bi_initial = 0\ng_bi_final = " + fmt(g_bi, 17) +
           "\n[time]\nt_max = 100\n[solver]\ntier = effpot\n[solver.effpot]\nsource = " + source + "\n";
}

json quench(const std::string& name, const ExperimentConfig& c) {
    Manifest m(g_scratch / name, "quench", c);
    json s = run_quench(c, m);
    m.finish("ok");
    return s;
}

// Summaries are shared between criteria.
std::map<std::string, json> g_cache;
const json& cached_quench(const std::string& name, const std::string& text) {
    auto it = g_cache.find(name);
    if (it == g_cache.end()) it = g_cache.emplace(name, quench(name, config(text))).first;
    return it->second;
}

std::vector<double> peak_omegas(const json& summary) {
    std::vector<double> out;
    for (const auto& p : summary["spectrum"]["peaks"]) out.push_back(p["omega"].get<double>());
    return out;
}

Verdict polaron_peak() {
    const auto& relaxed = cached_quench("c1_relaxed", effpot_text(0.25));
    const auto& tf = cached_quench("c1_tf", effpot_text(0.25, "tf"));
    const double w = peak_omegas(relaxed).at(0);
    const double w_tf = peak_omegas(tf).at(0);
    return {within(w, 4.435, 0.05), "dominant peak " + fmt(w) + " (relaxed bath), " + fmt(w_tf) + " (TF bath); target 4.435 +-5%"};
}

Verdict doublet() {
    const auto& s = cached_quench("c2", effpot_text(0.5));
    auto w = peak_omegas(s);
    if (w.size() < 2) return {false, "fewer than two peaks"};
    const double lo = std::min(w[0], w[1]), hi = std::max(w[0], w[1]);
    const double res = s["spectrum"]["resolution"].get<double>();
    const bool ok = within(lo, 8.482, 0.05) && within(hi, 8.859, 0.05) && (hi - lo) > 4.0 * res;
    return {ok, "two tallest at " + fmt(lo) + ", " + fmt(hi) + " (targets 8.482, 8.859 +-5%); separation " + fmt(hi - lo) + " vs 4 x resolution " +
                    fmt(4.0 * res)};
}

Verdict multipeak() {
    const auto& s = cached_quench("c3", effpot_text(1.0));
    std::vector<double> in;
    for (double w : peak_omegas(s))
        if (w >= 15.0 && w <= 19.0) in.push_back(w);
    std::string list;
    for (double w : in) list += (list.empty() ? "" : ", ") + fmt(w);
    if (in.size() < 3) return {false, std::to_string(in.size()) + " peaks in [15, 19]: " + list};
    // Tallest three in the window, matched to the targets in frequency order.
    std::vector<double> top(in.begin(), in.begin() + 3);
    std::sort(top.begin(), top.end());
    const double targets[] = {16.15, 17.15, 17.97};
    bool ok = true;
    for (int k = 0; k < 3; ++k) ok = ok && within(top[k], targets[k], 0.10);
    return {ok, std::to_string(in.size()) + " peaks in [15, 19] (" + list + "); tallest three vs 16.15, 17.15, 17.97 +-10%"};
}

Verdict breathing_curve() {
    auto c = config(
        "[system]\nn_bath = 100\ng_bb = 0.5\nomega_i_initial = 0.95\nomega_i_final = 1.0\n[solver]\ntier = effpot\n"
        "[sweep]\nparameter = g_bi_final\nscenario = breathing\nvalues = 0, 0.1, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.8, 0.9, "
        "1.0, 1.1, 1.2\n");
    Manifest m(g_scratch / "c4", "sweep", c);
    const auto pts = run_sweep(c, 1, m);
    m.finish("ok");
    bool ok = true;
    std::string low;
    double best = std::numeric_limits<double>::infinity(), g_min = -1.0;
    for (const auto& p : pts) {
        if (p.status != RunStatus::Ok) return {false, "point g = " + fmt(p.value) + " failed: " + p.error};
        const double w = p.summary["omega_br"].get<double>();
        if (p.value <= 0.25 + 1e-12) {
            const double pred = 2.0 * std::sqrt(1.0 - p.value / 0.5);
            ok = ok && within(w, pred, 0.05);
            low += (low.empty() ? "" : ", ") + fmt(w) + "/" + fmt(pred);
        }
        if (w < best) best = w, g_min = p.value;
    }
    ok = ok && std::abs(g_min - 0.5) <= 0.15;
    return {ok, "omega_br/prediction at g = 0, 0.1, 0.2, 0.25: " + low + "; minimum " + fmt(best) + " at g = " + fmt(g_min) + " (0.5 +- 0.15)"};
}

MeanFieldSystem reference_system(double g_bi) {
    MeanFieldSystem s;
    s.n_bath = 100;
    s.g_bb = 0.5;
    s.g_bi = g_bi;
    return s;
}

const Grid& default_grid() {
    static const Grid g = Grid::build(450, 40.0);
    return g;
}

const MeanFieldGroundState& bath_ground_state() {
    static const MeanFieldGroundState gs = relax_ground_state(reference_system(0.0), default_grid());
    return gs;
}

Verdict virial_suite() {
    bool ok = true;
    std::string list;
    for (double g : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const auto gs = g == 0.0 ? bath_ground_state() : relax_ground_state(reference_system(g), default_grid());
        const double r = std::abs(virial_check(gs.state.energies).relative);
        ok = ok && r < 1e-5;
        list += (list.empty() ? "" : ", ") + fmt(r, 2);
    }
    return {ok, "|E_VT|/E_tot at g = 0, 0.5, 1, 2, 5: " + list + " (< 1e-5)"};
}

Verdict thomas_fermi_checks() {
    const auto& gs = bath_ground_state();
    const auto tf = thomas_fermi(reference_system(0.0));
    const double r = density_drop_radius(RealField(default_grid(), gs.state.bath.density(100)));
    const bool ok = within(gs.state.mu_bath, tf.mu, 0.02) && within(r, 4.2, 0.05);
    return {ok, "relaxed mu " + fmt(gs.state.mu_bath) + " vs closed form " + fmt(tf.mu) + " (+-2%); drop radius " + fmt(r) + " vs 4.2 (+-5%)"};
}

Verdict horizon() {
    const auto& gs = bath_ground_state();
    const auto h = sound_horizon(reference_system(0.0), RealField(default_grid(), gs.state.bath.density(100)), 6.0);
    return {within(h.time, 106.0, 0.15), "T(6) = " + fmt(h.time) + " vs 106 (+-15%)"};
}

// Shared ED sweep for criteria 8 and 10.
const std::vector<SweepPoint>& ed_sweep() {
    static const std::vector<SweepPoint> pts = [] {
        auto c = config(
            "[system]\nn_bath = 4\ng_bb = 0.5\n[time]\ndt = 0.05\nt_max = 50\nrecord_every = 1\n[solver]\ntier = ed\n[solver.ed]\nn_modes = 10\n"
            "[sweep]\nparameter = g_bi_final\nvalues = 0.1, 0.2, 0.25, 0.5, 1.0, 2.0, 3.0\n");
        Manifest m(g_scratch / "c10_ed", "sweep", c);
        auto p = run_sweep(c, 1, m);
        m.finish("ok");
        return p;
    }();
    return pts;
}

Verdict identities() {
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };

    // |S| <= 1 over every run made so far.
    double max_abs = 0.0;
    for (const auto& [name, s] : g_cache) max_abs = std::max(max_abs, s["contrast"]["max_abs"].get<double>());
    for (const auto& p : ed_sweep())
        if (p.status == RunStatus::Ok) max_abs = std::max(max_abs, p.summary["contrast"]["max_abs"].get<double>());
    check(max_abs <= 1.0 + 1e-12, "|S| <= 1 (max " + fmt(max_abs, 17) + ")");

    // g_BI = 0 quench in the mean-field tier.
    auto c0 = config("[system]\ng_bi_final = 0\n[time]\nt_max = 10\n");
    const auto q0 = quench_meanfield(c0);
    double dev0 = 0.0;
    for (const auto& z : q0.s.values) dev0 = std::max(dev0, std::abs(std::abs(z) - 1.0));
    check(dev0 < 1e-8, "g_BI = 0 gives |S| = 1 (deviation " + fmt(dev0, 2) + ")");

    // General weights against the explicit two-branch spin vector.
    auto c1 = config("[system]\ng_bi_final = 1.0\nalpha = 0.6\nbeta = 0.8\n[time]\nt_max = 10\n");
    const auto q1 = quench_meanfield(c1);
    const auto gw = general_weights_contrast(q1.s, 0.6, 0.8);
    double dev_gw = 0.0;
    for (std::size_t k = 0; k < q1.s.size(); ++k)
        dev_gw = std::max(dev_gw, std::abs(gw.values[k] - spin_expectation(0.6, 0.8, q1.s.values[k]).magnitude()));
    check(dev_gw <= 1e-12, "general weights vs two-branch (" + fmt(dev_gw, 2) + ")");

    // Unwindowed sum rule on the polaron quench and an ED quench.
    const auto eff = quench_effpot(config(effpot_text(0.25)));
    const double sr_eff = spectral_function(eff.s, Window::none()).integral();
    check(within(sr_eff, 1.0, 0.02), "sum rule effpot (" + fmt(sr_eff, 6) + ")");
    const auto ed = quench_ed(config("[system]\nn_bath = 3\ng_bb = 0.5\ng_bi_final = 1.0\n[time]\ndt = 0.05\nt_max = 50\n[solver]\ntier = ed\n"
                                     "[solver.ed]\nn_modes = 8\n"));
    const double sr_ed = spectral_function(ed.s, Window::none()).integral();
    check(within(sr_ed, 1.0, 0.02), "sum rule ed (" + fmt(sr_ed, 6) + ")");

    // Lambda in [0, 1] and invariant under rescaling either density.
    const Grid& g = q1.grid;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    bool lam_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(g.size()), b(g.size()), a2(g.size()), b2(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) a[i] = u(rng), b[i] = u(rng) * u(rng);
        const double sa = 0.1 + 10.0 * u(rng), sb = 0.1 + 10.0 * u(rng);
        for (std::size_t i = 0; i < g.size(); ++i) a2[i] = sa * a[i], b2[i] = sb * b[i];
        const double l = miscibility_overlap(g, a, b);
        lam_ok = lam_ok && l >= 0.0 && l <= 1.0 && std::abs(miscibility_overlap(g, a2, b2) - l) < 1e-12;
    }
    for (const auto& q : {std::cref(q1), std::cref(ed)}) {
        const double l0 = miscibility_overlap(g, q.get().bath_initial, q.get().impurity_initial);
        const double l1 = miscibility_overlap(g, q.get().bath_final, q.get().impurity_final);
        lam_ok = lam_ok && l0 >= 0.0 && l0 <= 1.0 && l1 >= 0.0 && l1 <= 1.0;
    }
    check(lam_ok, "Lambda range and rescaling");

    // Schmidt weights and the two reference entropies.
    const double ent_final = ed.entanglement["entropy_final"].get<double>();
    double pop_sum = 0.0;
    for (const auto& p : ed.entanglement["populations_final"]) pop_sum += p.get<double>();
    check(ent_final >= 0.0 && pop_sum <= 1.0 + 1e-12, "final-state populations");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(36);
    std::normal_distribution<double> n01;
    for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = cd(n01(rng), n01(rng));
    v.normalize();
    const double lsum = schmidt(v, 6).lambdas.sum();
    check(std::abs(lsum - 1.0) < 1e-12, "Schmidt weights sum to 1 (" + fmt(lsum - 1.0, 2) + ")");
    Eigen::MatrixXcd prod = Eigen::MatrixXcd::Zero(5, 4);
    prod(2, 1) = 1.0;
    const double s_prod = entropy_and_populations(schmidt(prod)).entropy;
    check(std::abs(s_prod) < 1e-12, "S(product) = " + fmt(s_prod, 2));
    Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    const double s_bell = entropy_and_populations(schmidt(bell, 2)).entropy;
    check(std::abs(s_bell - std::log(2.0)) < 1e-12, "S(Bell) = " + fmt(s_bell, 17));

    std::string detail = "max|S| " + fmt(max_abs, 17) + ", g=0 dev " + fmt(dev0, 2) + ", weights dev " + fmt(dev_gw, 2) + ", sum rules " +
                         fmt(sr_eff, 5) + "/" + fmt(sr_ed, 5) + ", S(Bell) - ln2 " + fmt(s_bell - std::log(2.0), 2);
    for (const auto& f : failed) detail += "; FAILED: " + f;
    return {failed.empty(), detail};
}

Verdict ed_oracles() {
    // 2 bath bosons in 6 modes times 6 impurity modes: dimension 126.
    const auto modes = ho_mode_basis(default_grid(), 6);
    const auto u = contact_tensor(modes);
    const auto basis = build_fock_basis(2, 6);
    const auto h = build_hamiltonian(basis, u, 0.5, 1.5, 0.9);
    const Eigen::MatrixXd dense = h.to_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);

    const auto n = static_cast<Eigen::Index>(h.dim());
    std::mt19937 rng(3);
    std::normal_distribution<double> n01;
    Eigen::VectorXcd v0(n);
    for (Eigen::Index k = 0; k < n; ++k) v0[k] = cd(n01(rng), n01(rng));
    v0.normalize();
    KrylovOptions o;
    o.dt = 0.25;
    o.t_max = 10.0;
    o.keep_states = true;
    const auto traj = propagate_krylov(h, v0, o);
    double dev_t = 0.0;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const double t = traj.records[k].time;
        const Eigen::VectorXcd phase = (es.eigenvalues().cast<cd>() * cd(0.0, -t)).array().exp();
        const Eigen::VectorXcd ref = es.eigenvectors().cast<cd>() * (phase.asDiagonal() * (es.eigenvectors().transpose().cast<cd>() * v0));
        dev_t = std::max(dev_t, (traj.states[k] - ref).norm());
    }

    LanczosOptions lo;
    lo.tol = 1e-11;
    const auto gs = ground_state(h, lo);
    const double dev_e = std::abs(gs.energy - es.eigenvalues()[0]);
    const double dev_v = std::abs(std::abs(gs.vector.dot(es.eigenvectors().col(0))) - 1.0);

    // Two particles (one bath boson and the impurity), strong contact.
    const auto m14 = ho_mode_basis(default_grid(), 14);
    const auto h2 = build_hamiltonian(build_fock_basis(1, 14), contact_tensor(m14), 0.0, 1e3);
    const double e_ed = ground_state(h2).energy;
    const double e_busch = two_body_contact_energy(1e3);
    const double rel = std::abs(e_ed - e_busch) / e_busch;

    const bool ok = dev_t <= 1e-10 && dev_e <= 1e-10 && dev_v <= 1e-10 && rel <= 0.05;
    return {ok, "dim " + std::to_string(h.dim()) + ": Krylov vs dense " + fmt(dev_t, 2) + ", ground energy " + fmt(dev_e, 2) + ", vector " + fmt(dev_v, 2) +
                    "; M = 14, g = 1e3: E = " + fmt(e_ed, 6) + " vs " + fmt(e_busch, 7) + " (" + fmt(100.0 * rel, 3) + "%, limit 5%)"};
}

Verdict many_body_trends() {
    const auto& pts = ed_sweep();
    std::vector<std::string> failed;
    std::map<double, json> by_g;
    for (const auto& p : pts) {
        if (p.status != RunStatus::Ok) return {false, "ED point g = " + fmt(p.value) + " failed: " + p.error};
        by_g[p.value] = p.summary;
    }
    std::string mins, ents;
    double prev_min = 2.0, prev_ent = -1.0;
    bool mono_min = true, mono_ent = true;
    for (const auto& [g, s] : by_g) {
        const double mn = s["contrast"]["min_abs"].get<double>();
        const double en = s["entanglement"]["entropy_mean"].get<double>();
        mono_min = mono_min && mn <= prev_min;
        mono_ent = mono_ent && en >= prev_ent;
        prev_min = mn;
        prev_ent = en;
        mins += (mins.empty() ? "" : ", ") + fmt(mn);
        ents += (ents.empty() ? "" : ", ") + fmt(en);
    }
    if (!mono_min) failed.push_back("(a)");
    if (!mono_ent) failed.push_back("(b)");

    std::string labels;
    const char* want[] = {"R_I", "R_II", "R_III"};
    bool seq = true;
    int k = 0;
    for (double g : {0.2, 1.0, 3.0}) {
        const auto& r = by_g.at(g)["region"];
        const std::string l = r.is_null() ? "none" : r["label"].get<std::string>();
        labels += (labels.empty() ? "" : " -> ") + l;
        seq = seq && l == want[k++];
    }
    if (!seq) failed.push_back("(c)");

    auto mf = config("[system]\ng_bi_final = 1.7\n[time]\nt_max = 50\n");
    const auto q = quench_meanfield(mf);
    const double gain = q.e_final.bath() - q.e_initial.bath();
    if (!(gain > 0.0)) failed.push_back("(d)");

    std::string detail = "g = 0.1..3: (a) min|S| " + mins + "; (b) <S_vn> " + ents + "; (c) g = 0.2, 1, 3: " + labels + "; (d) MF g = 1.7 bath gain " +
                         fmt(q.e_final.bath()) + " - " + fmt(q.e_initial.bath()) + " = " + fmt(gain);
    if (!failed.empty()) {
        detail += "; failing part";
        for (const auto& f : failed) detail += " " + f;
    }
    return {failed.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    g_scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / ("polaron_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(g_scratch);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"polaron peak (R_I)", polaron_peak},
        {"R_II doublet", doublet},
        {"multi-peak structure at g_BI = 1", multipeak},
        {"breathing curve", breathing_curve},
        {"virial suite", virial_suite},
        {"Thomas-Fermi cross-checks", thomas_fermi_checks},
        {"sound horizon", horizon},
        {"exact identities", identities},
        {"ED oracle equivalence", ed_oracles},
        {"many-body trends", many_body_trends},
    };
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += v.pass ? 0 : 1;
        std::cout << (v.pass ? "PASS" : "FAIL") << "  [" << k + 1 << "] " << criteria[k].first << ": " << v.detail << " (" << fmt(secs, 3) << " s)"
                  << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
