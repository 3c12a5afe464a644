#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "polaron/core/grid.hpp"
#include "polaron/effpot.hpp"
#include "polaron/exactdiag.hpp"
#include "polaron/meanfield.hpp"
#include "polaron/observables.hpp"
#include "polaron/runner/config.hpp"
#include "polaron/runner/io.hpp"

namespace polaron {

inline constexpr double kPeakThreshold = 0.05;
inline constexpr std::size_t kMaxReportedPeaks = 10;
inline constexpr std::size_t kMaxEnergyRows = 501;

namespace detail {

inline Grid make_grid(const ExperimentConfig& c) { return Grid::build(c.grid.n_points, c.grid.x_max); }

inline MeanFieldSystem mf_system(const ExperimentConfig& c, double g_bi, double omega_i) {
    MeanFieldSystem s;
    s.n_bath = c.system.n_bath;
    s.g_bb = c.system.g_bb;
    s.g_bi = g_bi;
    s.omega_b = c.system.omega_b;
    s.omega_i = omega_i;
    return s;
}

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json energies_json(const EnergyBreakdown& e) {
    return {{"kinetic_b", e.kinetic_b}, {"potential_b", e.potential_b}, {"kinetic_i", e.kinetic_i}, {"potential_i", e.potential_i},
            {"intra_bb", e.intra_bb},   {"inter_bi", e.inter_bi},       {"total", e.total()},       {"bath", e.bath()}};
}

inline Table energy_table() {
    return Table{{"t", "kinetic_b", "potential_b", "kinetic_i", "potential_i", "intra_bb", "inter_bi", "total"}, std::vector<std::vector<double>>(8)};
}

inline void push_energy(Table& t, double time, const EnergyBreakdown& e) {
    const double row[] = {time, e.kinetic_b, e.potential_b, e.kinetic_i, e.potential_i, e.intra_bb, e.inter_bi, e.total()};
    for (std::size_t k = 0; k < 8; ++k) t.columns[k].push_back(row[k]);
}

inline Table contrast_table(const ComplexSeries& s, double alpha, double beta) {
    Table t{{"t", "re_s", "im_s", "abs_s", "phase", "weighted"}, std::vector<std::vector<double>>(6)};
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto z = s.values[k];
        t.columns[0].push_back(s.time(k));
        t.columns[1].push_back(z.real());
        t.columns[2].push_back(z.imag());
        t.columns[3].push_back(std::abs(z));
        t.columns[4].push_back(std::arg(z));
        t.columns[5].push_back(reweighted_contrast(std::abs(z), alpha, beta));
    }
    return t;
}

inline Table spectrum_table(const SpectralFunction& a) { return Table{{"omega", "A"}, {a.omegas, a.values}}; }

inline Table density_table(const Grid& g, const std::vector<double>& b0, const std::vector<double>& i0, const std::vector<double>& b1,
                           const std::vector<double>& i1) {
    return Table{{"x", "bath_initial", "impurity_initial", "bath_final", "impurity_final"}, {g.points(), b0, i0, b1, i1}};
}

inline json peaks_json(const std::vector<Peak>& peaks) {
    json arr = json::array();
    for (std::size_t k = 0; k < peaks.size() && k < kMaxReportedPeaks; ++k)
        arr.push_back({{"omega", peaks[k].omega}, {"height", peaks[k].height}, {"width", peaks[k].width}});
    return arr;
}

inline json region_json(const RegionResult& r) {
    json cands = json::array();
    for (auto c : r.candidates) cands.push_back(to_string(c));
    const auto& m = r.metrics;
    return {{"label", to_string(r.region)},
            {"candidates", cands},
            {"metrics",
             {{"running_min", m.running_min},
              {"final_value", m.final_value},
              {"early_swing", m.early_swing},
              {"late_swing", m.late_swing},
              {"amplitude_ratio", m.amplitude_ratio},
              {"damped", m.damped},
              {"monotone_envelope", m.monotone_envelope},
              {"decay_rate", m.decay_rate},
              {"decay_exponent", nullable(m.decay_exponent)},
              {"oscillation_amplitude", m.oscillation_amplitude}}}};
}

/// Observables shared by every tier: spectrum, peaks, region, contrast extremes.
inline json contrast_summary(const ComplexSeries& s, const ExperimentConfig& c, SpectralFunction& spec_out) {
    json j;
    double mn = std::numeric_limits<double>::infinity(), mn_w = mn, mx = 0.0;
    for (const auto& z : s.values) {
        mn = std::min(mn, std::abs(z));
        mx = std::max(mx, std::abs(z));
        mn_w = std::min(mn_w, reweighted_contrast(std::min(std::abs(z), 1.0), c.system.alpha, c.system.beta));
    }
    j["contrast"] = {{"min_abs", mn}, {"max_abs", mx}, {"final_abs", std::abs(s.values.back())}, {"min_weighted", mn_w}, {"samples", s.size()}};
    spec_out = spectral_function(s, Window::hann());
    j["spectrum"] = {{"window", spec_out.window},
                     {"pad_factor", 8},
                     {"resolution", spec_out.resolution},
                     {"threshold", kPeakThreshold},
                     {"peaks", peaks_json(peaks_by_height(find_peaks(spec_out, kPeakThreshold)))}};
    const RegionOptions ro;
    if (s.span() >= ro.window - 1e-9) {
        j["region"] = region_json(classify_region(magnitude(s), c.system.g_bi_final, c.system.g_bb, ro));
    } else {
        j["region"] = nullptr;
    }
    return j;
}

inline json parameters_json(const ExperimentConfig& c) {
    return {{"n_bath", c.system.n_bath},
            {"g_bb", c.system.g_bb},
            {"g_bi_initial", c.system.g_bi_initial},
            {"g_bi_final", c.system.g_bi_final},
            {"omega_b", c.system.omega_b},
            {"omega_i_initial", c.system.omega_i_initial},
            {"omega_i_final", c.system.omega_i_final},
            {"alpha", c.system.alpha},
            {"beta", c.system.beta},
            {"n_points", c.grid.n_points},
            {"x_max", c.grid.x_max},
            {"dt", c.time.dt},
            {"t_max", c.time.t_max},
            {"record_dt", c.time.record_dt()},
            {"n_modes", c.solver.tier == Tier::ED ? json(c.solver.ed.n_modes) : json(nullptr)},
            {"density_source", c.solver.tier == Tier::EffPot ? json(to_string(c.solver.effpot.source)) : json(nullptr)}};
}

/// Bath density the effective-potential tier freezes in place.
inline RealField effpot_bath_density(const ExperimentConfig& c, const Grid& g) {
    const auto sys = mf_system(c, 0.0, c.system.omega_i_initial);
    switch (c.solver.effpot.source) {
        case DensitySource::ThomasFermi: return thomas_fermi(sys).sample(g);
        case DensitySource::RelaxedMeanField: {
            const auto gs = relax_ground_state(sys, g);
            return RealField(g, gs.state.bath.density(sys.n_bath));
        }
        case DensitySource::External: return read_density_file(c.solver.effpot.density_file, g);
    }
    throw UsageError("effpot_bath_density: unknown source");
}

inline std::vector<double> zeros_like(const Grid& g) { return std::vector<double>(g.size(), 0.0); }

}  // namespace detail

/// Raw outcome of a quench before anything is written.
struct QuenchData {
    Grid grid;
    ComplexSeries s;
    Table energies = detail::energy_table();
    std::vector<double> bath_initial = {}, impurity_initial = {}, bath_final = {}, impurity_final = {};
    EnergyBreakdown e_initial = {}, e_final = {};
    double virial_relative = std::numeric_limits<double>::quiet_NaN();
    double norm_drift = 0.0;
    double energy_drift = 0.0;
    json extra = json::object();      // tier-specific diagnostics
    json entanglement = nullptr;      // ed tier only
};

inline QuenchData quench_meanfield(const ExperimentConfig& c) {
    const Grid g = detail::make_grid(c);
    const auto pre = detail::mf_system(c, c.system.g_bi_initial, c.system.omega_i_initial);
    const auto post = detail::mf_system(c, c.system.g_bi_final, c.system.omega_i_final);
    auto gs = relax_ground_state(pre, g);
    gs.state.impurity.alpha = c.system.alpha;
    gs.state.impurity.beta = c.system.beta;
    PropagationOptions o;
    o.dt = c.time.dt;
    o.t_max = c.time.t_max;
    o.record_every = c.time.record_every;
    o.keep_fields = false;
    const auto tr = propagate(gs.state, post, o);

    QuenchData q{g, mean_field_contrast(tr, gs.state)};
    for (const auto& r : tr.records) detail::push_energy(q.energies, r.time, r.energies);
    q.bath_initial = gs.state.bath.density(pre.n_bath);
    q.impurity_initial = gs.state.impurity.up.density();
    q.bath_final = tr.final_state.bath.density(post.n_bath);
    q.impurity_final = tr.final_state.impurity.up.density();
    q.e_initial = tr.records.front().energies;
    q.e_final = tr.records.back().energies;
    q.virial_relative = virial_check(gs.state.energies).relative;
    q.norm_drift = tr.max_norm_drift;
    q.energy_drift = tr.max_energy_drift;
    q.extra = {{"mu_bath", gs.state.mu_bath}, {"mu_impurity", gs.state.mu_impurity}, {"relax_steps", gs.report.steps}};
    return q;
}

inline QuenchData quench_effpot(const ExperimentConfig& c) {
    const Grid g = detail::make_grid(c);
    const RealField rho = detail::effpot_bath_density(c, g);
    const auto src = c.solver.effpot.source;
    const auto pot_pre = build_effective_potential(rho, c.system.g_bi_initial, src, 1.0, c.system.omega_i_initial);
    const auto pot_post = build_effective_potential(rho, c.system.g_bi_final, src, 1.0, c.system.omega_i_final);
    const auto spec_pre = eigensolve(pot_pre, 1);
    const auto spec = eigensolve(pot_post, c.solver.effpot.n_eig);
    const Field psi0 = spec_pre.state(0);
    const double e_ref = spec_pre.energy(0);
    const double rdt = c.time.record_dt();
    const auto ec = effpot_contrast(spec, psi0, c.time.t_max, rdt, e_ref);

    QuenchData q{g, ec.s};
    // Six-term split inside the eigenbasis: the bath is frozen, so only the
    // impurity terms move; inter_bi is the g_BI rho part of V_eff.
    const Eigen::MatrixXd& phi = spec.eig.vectors;
    const auto n = static_cast<Eigen::Index>(spec.n_eig);
    Eigen::VectorXd trap(phi.rows()), veff(phi.rows());
    for (Eigen::Index j = 0; j < phi.rows(); ++j) {
        const std::size_t node = static_cast<std::size_t>(j) + 1;
        trap[j] = pot_post.trap(g.x(node));
        veff[j] = pot_post.values[node];
    }
    const Eigen::MatrixXd v_trap = phi.transpose() * trap.asDiagonal() * phi;
    const Eigen::MatrixXd v_bath = phi.transpose() * (veff - trap).asDiagonal() * phi;
    const Eigen::VectorXcd c0 = spec.eig.project(psi0);
    const std::size_t stride = std::max<std::size_t>(1, (ec.s.size() + kMaxEnergyRows - 2) / (kMaxEnergyRows - 1));
    auto energies_at = [&](double t) {
        Eigen::VectorXcd ct(n);
        for (Eigen::Index k = 0; k < n; ++k) ct[k] = c0[k] * std::polar(1.0, -spec.eig.energies[k] * t);
        const double norm = ct.squaredNorm();
        EnergyBreakdown e;
        double total = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) total += std::norm(ct[k]) * spec.eig.energies[k];
        e.potential_i = (ct.adjoint() * v_trap * ct)(0).real() / norm;
        e.inter_bi = (ct.adjoint() * v_bath * ct)(0).real() / norm;
        e.kinetic_i = total / norm - e.potential_i - e.inter_bi;
        return e;
    };
    for (std::size_t k = 0; k < ec.s.size(); k += stride) detail::push_energy(q.energies, ec.s.time(k), energies_at(ec.s.time(k)));
    q.e_initial = energies_at(0.0);
    q.e_final = energies_at(ec.s.t_end());
    q.bath_initial = rho.values;
    q.bath_final = rho.values;
    q.impurity_initial = psi0.density();
    q.impurity_final = spec.eig.evolve(c0, ec.s.t_end()).density();
    q.norm_drift = 1.0 - ec.completeness;
    q.extra = {{"completeness", ec.completeness},
               {"reference_energy", e_ref},
               {"double_well", pot_post.double_well()},
               {"box_contaminated_states", std::count(spec.box_contaminated.begin(), spec.box_contaminated.end(), true)},
               {"bath_particles", pot_post.bath_particles}};
    return q;
}

inline QuenchData quench_ed(const ExperimentConfig& c) {
    const Grid g = detail::make_grid(c);
    const auto n_b = static_cast<std::size_t>(c.system.n_bath);
    const std::size_t m = c.solver.ed.n_modes;
    const auto modes = ho_mode_basis(g, m);
    const auto u = contact_tensor(modes);
    const auto basis = build_fock_basis(n_b, m, c.solver.ed.dim_guard);
    const auto h_pre = build_hamiltonian(basis, u, c.system.g_bb, c.system.g_bi_initial, c.system.omega_i_initial);
    const auto h_post = build_hamiltonian(basis, u, c.system.g_bb, c.system.g_bi_final, c.system.omega_i_final);
    const auto gs = ground_state(h_pre);
    const Eigen::VectorXcd v0 = gs.vector.cast<std::complex<double>>();

    KrylovOptions o;
    o.dt = c.time.dt;
    o.t_max = c.time.t_max;
    o.record_every = c.time.record_every;
    const auto n_rec = static_cast<std::size_t>(std::floor(o.t_max / (o.dt * static_cast<double>(o.record_every)) + 1e-9)) + 1;
    const std::size_t stride = std::max<std::size_t>(1, (n_rec + kMaxEnergyRows - 2) / (kMaxEnergyRows - 1));

    QuenchData q{g, {}};
    std::vector<double> entropy;
    std::size_t k = 0;
    Eigen::VectorXcd last;
    const auto traj = propagate_krylov(h_post, v0, o, [&](double t, const Eigen::VectorXcd& v) {
        entropy.push_back(entropy_and_populations(schmidt(v, m)).entropy);
        if (k % stride == 0 || k + 1 == n_rec) detail::push_energy(q.energies, t, h_post.energy_breakdown(v / v.norm()));
        ++k;
    });
    q.s = ed_contrast(traj, gs.energy);
    const Eigen::VectorXcd& vf = traj.final_state;
    std::tie(q.bath_initial, q.impurity_initial) = ed_densities(v0, h_pre, modes);
    std::tie(q.bath_final, q.impurity_final) = ed_densities(vf, h_post, modes);
    q.e_initial = h_post.energy_breakdown(v0);
    q.e_final = h_post.energy_breakdown(vf / vf.norm());
    q.virial_relative = virial_check(h_pre.energy_breakdown(v0)).relative;
    q.norm_drift = traj.max_norm_drift;
    q.energy_drift = traj.max_energy_drift;

    const auto sd = schmidt(vf, m);
    const auto ent = entropy_and_populations(sd);
    double mean = 0.0;
    for (double s : entropy) mean += s;
    mean /= static_cast<double>(entropy.size());
    json pops = json::array();
    for (std::size_t i = 0; i < ent.populations.size() && i < 6; ++i) pops.push_back(ent.populations[i]);
    const auto ov = schmidt_overlap_expansion(sd, h_post, modes);
    q.entanglement = {{"entropy_mean", mean},
                      {"entropy_final", ent.entropy},
                      {"entropy_max", *std::max_element(entropy.begin(), entropy.end())},
                      {"populations_final", pops},
                      {"overlap_exact", ov.lambda_exact},
                      {"overlap_order1", ov.lambda_order1},
                      {"overlap_leading", ov.lambda_0},
                      {"overlap_truncation_valid", ov.truncation_valid}};
    q.extra = {{"dimension", h_post.dim()},
               {"ground_energy", gs.energy},
               {"lanczos_iterations", gs.iterations},
               {"lanczos_residual", gs.residual},
               {"krylov_steps", traj.steps},
               {"matvecs", traj.matvecs}};
    return q;
}

inline QuenchData quench_data(const ExperimentConfig& c) {
    switch (c.solver.tier) {
        case Tier::MeanField: return quench_meanfield(c);
        case Tier::EffPot: return quench_effpot(c);
        case Tier::ED: return quench_ed(c);
    }
    throw UsageError("quench: unknown tier");
}

/// Quench and write contrast, spectrum, densities, energies and summary.
inline json run_quench(const ExperimentConfig& c, Manifest& out) {
    const QuenchData q = quench_data(c);
    SpectralFunction spec;
    json sum = detail::contrast_summary(q.s, c, spec);
    sum["schema_version"] = kSchemaVersion;
    sum["scenario"] = "quench";
    sum["tier"] = to_string(c.solver.tier);
    sum["parameters"] = detail::parameters_json(c);
    sum["energies"] = {{"initial", detail::energies_json(q.e_initial)},
                       {"final", detail::energies_json(q.e_final)},
                       {"bath_gain", q.e_final.bath() - q.e_initial.bath()}};
    auto overlap = [&](const std::vector<double>& a, const std::vector<double>& b) {
        try {
            return json(miscibility_overlap(q.grid, a, b));
        } catch (const DomainError&) {
            return json(nullptr);
        }
    };
    sum["miscibility"] = {{"initial", overlap(q.bath_initial, q.impurity_initial)}, {"final", overlap(q.bath_final, q.impurity_final)}};
    sum["entanglement"] = q.entanglement;
    json diag = {{"virial_relative", detail::nullable(q.virial_relative)}, {"norm_drift", q.norm_drift}, {"energy_drift", q.energy_drift}};
    diag.update(q.extra);
    sum["diagnostics"] = diag;
    out.diagnostics() = diag;

    if (c.output.wants("csv")) {
        out.emit_table("contrast.csv", detail::contrast_table(q.s, c.system.alpha, c.system.beta));
        out.emit_table("spectrum.csv", detail::spectrum_table(spec));
        out.emit_table("densities.csv", detail::density_table(q.grid, q.bath_initial, q.impurity_initial, q.bath_final, q.impurity_final));
        out.emit_table("energies.csv", q.energies);
    }
    if (c.output.wants("json")) out.emit_json("summary.json", sum);
    return sum;
}

/// Relax only: ground-state densities, energies and the Thomas-Fermi checks.
inline json run_relax(const ExperimentConfig& c, Manifest& out) {
    const Grid g = detail::make_grid(c);
    json sum;
    sum["schema_version"] = kSchemaVersion;
    sum["scenario"] = "relax";
    sum["tier"] = to_string(c.solver.tier);
    sum["parameters"] = detail::parameters_json(c);
    std::vector<double> rb, ri;
    EnergyBreakdown e;
    json diag;
    if (c.solver.tier == Tier::ED) {
        const auto n_b = static_cast<std::size_t>(c.system.n_bath);
        const auto modes = ho_mode_basis(g, c.solver.ed.n_modes);
        const auto basis = build_fock_basis(n_b, c.solver.ed.n_modes, c.solver.ed.dim_guard);
        const auto h = build_hamiltonian(basis, contact_tensor(modes), c.system.g_bb, c.system.g_bi_initial, c.system.omega_i_initial);
        const auto gs = ground_state(h);
        const Eigen::VectorXcd v = gs.vector.cast<std::complex<double>>();
        std::tie(rb, ri) = ed_densities(v, h, modes);
        e = h.energy_breakdown(v);
        const auto ent = entropy_and_populations(schmidt(v, c.solver.ed.n_modes));
        diag = {{"ground_energy", gs.energy}, {"lanczos_iterations", gs.iterations}, {"lanczos_residual", gs.residual}, {"entropy", ent.entropy},
                {"dimension", h.dim()}};
    } else {
        const auto sys = detail::mf_system(c, c.system.g_bi_initial, c.system.omega_i_initial);
        const auto gs = relax_ground_state(sys, g);
        rb = gs.state.bath.density(sys.n_bath);
        ri = gs.state.impurity.up.density();
        e = gs.state.energies;
        diag = {{"mu_bath", gs.state.mu_bath}, {"mu_impurity", gs.state.mu_impurity}, {"relax_steps", gs.report.steps},
                {"density_drop_radius", density_drop_radius(RealField(g, rb))}};
        if (sys.g_bb > 0.0 && sys.n_bath >= 1.0) {
            const auto tf = thomas_fermi(sys);
            diag["thomas_fermi_mu"] = tf.mu;
            diag["thomas_fermi_radius"] = tf.radius;
        }
    }
    const auto vir = virial_check(e);
    diag["virial_residual"] = vir.residual;
    diag["virial_relative"] = vir.relative;
    sum["energies"] = detail::energies_json(e);
    sum["diagnostics"] = diag;
    out.diagnostics() = diag;
    if (c.output.wants("csv")) {
        out.emit_table("densities.csv", Table{{"x", "bath", "impurity"}, {g.points(), rb, ri}});
        Table et = detail::energy_table();
        detail::push_energy(et, 0.0, e);
        out.emit_table("energies.csv", et);
    }
    if (c.output.wants("json")) out.emit_json("summary.json", sum);
    return sum;
}

/// Trap quench omega_i_initial -> omega_i_final of an impurity already
/// coupled at g_bi_final; breathing frequency from the width oscillation.
inline json run_breathing(const ExperimentConfig& c, Manifest& out) {
    if (c.solver.tier == Tier::ED) throw ConfigError("breathing: supported tiers are meanfield and effpot");
    if (c.system.omega_i_initial == c.system.omega_i_final)
        throw ConfigError("breathing: system.omega_i_initial and system.omega_i_final must differ");
    const Grid g = detail::make_grid(c);
    const double g_bi = c.system.g_bi_final;
    RealSeries x_mean, x2, var, p2;
    double x2_0 = 0.0, p2_0 = 0.0;
    json diag;
    if (c.solver.tier == Tier::EffPot) {
        const RealField rho = detail::effpot_bath_density(c, g);
        const auto src = c.solver.effpot.source;
        const auto br = breathing_run([&](double w) { return build_effective_potential(rho, g_bi, src, 1.0, w); }, c.system.omega_i_initial,
                                      c.system.omega_i_final, c.time.t_max, c.time.record_dt());
        x_mean = br.x_mean;
        x2 = br.x2;
        var = br.variance;
        p2 = br.p2;
        x2_0 = br.x2_0;
        p2_0 = br.p2_0;
    } else {
        const auto pre = detail::mf_system(c, g_bi, c.system.omega_i_initial);
        const auto post = detail::mf_system(c, g_bi, c.system.omega_i_final);
        const auto gs = relax_ground_state(pre, g);
        PropagationOptions o;
        o.dt = c.time.dt;
        o.t_max = c.time.t_max;
        o.record_every = c.time.record_every;
        o.keep_fields = false;
        const auto tr = propagate(gs.state, post, o);
        x_mean = tr.series([](const MeanFieldRecord& r) { return r.up.x_mean; }, "<x>");
        x2 = tr.series([](const MeanFieldRecord& r) { return r.up.x2; }, "<x^2>");
        var = tr.series([](const MeanFieldRecord& r) { return r.up.variance(); }, "var x");
        p2 = tr.series([](const MeanFieldRecord& r) { return r.up.p2; }, "<p^2>");
        x2_0 = x2.values.front();
        p2_0 = p2.values.front();
        diag = {{"norm_drift", tr.max_norm_drift}, {"energy_drift", tr.max_energy_drift}, {"virial_relative", virial_check(gs.state.energies).relative}};
    }
    const auto est = dominant_frequency(var);
    json sum;
    sum["schema_version"] = kSchemaVersion;
    sum["scenario"] = "breathing";
    sum["tier"] = to_string(c.solver.tier);
    sum["parameters"] = detail::parameters_json(c);
    sum["omega_br"] = est.omega;
    sum["estimate"] = {{"method", est.method}, {"magnitude", est.magnitude}, {"noise_floor", est.noise_floor}};
    const double ratio = c.system.g_bb > 0.0 ? g_bi / c.system.g_bb : std::numeric_limits<double>::infinity();
    sum["thomas_fermi_prediction"] = ratio < 1.0 ? json(2.0 * std::sqrt(1.0 - ratio) * c.system.omega_i_final) : json(nullptr);
    try {
        const auto fit = fit_effective_mass(x2, p2, x2_0, p2_0);
        sum["effective_mass"] = {{"valid", true}, {"m_eff", fit.m_eff}, {"omega_eff", fit.omega_eff}, {"residual", fit.residual}};
    } catch (const AnalysisError& e) {
        sum["effective_mass"] = {{"valid", false}, {"error", e.what()}};
    }
    sum["diagnostics"] = diag.is_null() ? json::object() : diag;
    out.diagnostics() = sum["diagnostics"];
    if (c.output.wants("csv")) {
        Table t{{"t", "x_mean", "x2", "variance", "p2"}, std::vector<std::vector<double>>(5)};
        for (std::size_t k = 0; k < var.size(); ++k) {
            t.columns[0].push_back(var.time(k));
            t.columns[1].push_back(x_mean.values[k]);
            t.columns[2].push_back(x2.values[k]);
            t.columns[3].push_back(var.values[k]);
            t.columns[4].push_back(p2.values[k]);
        }
        out.emit_table("variance.csv", t);
    }
    if (c.output.wants("json")) out.emit_json("omega_br.json", sum);
    return sum;
}

/// Observables from an existing contrast.csv (columns t, re_s, im_s).
inline json run_analyze(const fs::path& contrast_csv, const ExperimentConfig& c, Manifest& out) {
    const Table t = read_csv(contrast_csv);
    const auto& ts = t.column("t");
    const auto& re = t.column("re_s");
    const auto& im = t.column("im_s");
    if (ts.size() < 2) throw AnalysisError(contrast_csv.string() + ": need at least two samples");
    const double dt = ts[1] - ts[0];
    if (!(dt > 0.0)) throw AnalysisError(contrast_csv.string() + ": time column must increase");
    for (std::size_t k = 1; k < ts.size(); ++k)
        if (std::abs(ts[k] - ts[k - 1] - dt) > 1e-9 * std::max(1.0, std::abs(ts[k])))
            throw AnalysisError(contrast_csv.string() + ": samples are not uniformly spaced (row " + std::to_string(k + 2) + ")");
    ComplexSeries s{ts.front(), dt, {}, "S(t)", ""};
    for (std::size_t k = 0; k < ts.size(); ++k) s.values.emplace_back(re[k], im[k]);
    if (std::abs(s.values.front() - std::complex<double>(1.0, 0.0)) > 1e-6)
        throw AnalysisError(contrast_csv.string() + ": S(0) must equal 1 for the spectral function");
    SpectralFunction spec;
    json sum = detail::contrast_summary(s, c, spec);
    sum["schema_version"] = kSchemaVersion;
    sum["scenario"] = "analyze";
    sum["source"] = contrast_csv.string();
    sum["sum_rule"] = spectral_function(s, Window::none()).integral();
    if (c.output.wants("csv")) out.emit_table("spectrum.csv", detail::spectrum_table(spec));
    if (c.output.wants("json")) out.emit_json("summary.json", sum);
    return sum;
}

/// Exit status of a run: which error class, if any, ended it.
enum class RunStatus { Ok = 0, ConfigError = 2, SolverError = 3, AnalysisError = 4 };

inline RunStatus classify_exception(const std::exception& e) {
    if (dynamic_cast<const polaron::ConfigError*>(&e)) return RunStatus::ConfigError;
    if (dynamic_cast<const polaron::AnalysisError*>(&e)) return RunStatus::AnalysisError;
    return RunStatus::SolverError;
}

inline void set_sweep_value(ExperimentConfig& c, const std::string& parameter, double v) {
    if (parameter == "g_bi_final") c.system.g_bi_final = v;
    else if (parameter == "g_bb") c.system.g_bb = v;
    else if (parameter == "n_bath") c.system.n_bath = v;
    else if (parameter == "n_modes") {
        if (!(v >= 1.0) || std::floor(v) != v) throw ConfigError("sweep: n_modes values must be positive integers");
        c.solver.ed.n_modes = static_cast<std::size_t>(v);
    } else {
        throw ConfigError("sweep: unknown parameter '" + parameter + "'");
    }
    c.explicit_keys.insert(parameter == "n_modes" ? "solver.ed.n_modes" : "system." + parameter);
}

struct SweepPoint {
    double value = 0.0;
    std::string dir;
    RunStatus status = RunStatus::Ok;
    std::string error;
    json summary;
};

namespace detail {

inline std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch == '\n' ? ' ' : ch;
    }
    return q + "\"";
}

inline std::string num_cell(const json& j) { return j.is_number() ? format_real(j.get<double>()) : std::string(); }

inline std::string point_dir_name(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "point_%03zu", k);
    return buf;
}

}  // namespace detail

/// Independent runs over one parameter, up to `jobs` at a time. Failed
/// points are recorded and the sweep carries on.
inline std::vector<SweepPoint> run_sweep(const ExperimentConfig& base, std::size_t jobs, Manifest& out) {
    if (base.sweep.values.empty()) throw ConfigError("sweep: sweep.values is empty");
    const bool breathing = base.sweep.scenario == "breathing";
    std::vector<SweepPoint> points(base.sweep.values.size());
    for (std::size_t k = 0; k < points.size(); ++k) {
        points[k].value = base.sweep.values[k];
        points[k].dir = detail::point_dir_name(k);
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < points.size();) {
            auto& p = points[k];
            ExperimentConfig c = base;
            Manifest m(out.dir() / p.dir, breathing ? "breathing" : "quench", c);
            try {
                set_sweep_value(c, base.sweep.parameter, p.value);
                revalidate(c);
                Manifest pm(out.dir() / p.dir, breathing ? "breathing" : "quench", c);
                p.summary = breathing ? run_breathing(c, pm) : run_quench(c, pm);
                pm.finish("ok");
            } catch (const std::exception& e) {
                p.status = classify_exception(e);
                p.error = e.what();
                try {
                    m.finish("failed", p.error, static_cast<int>(p.status));
                } catch (...) {
                }
            }
        }
    };
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(jobs, points.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Aggregate after the join, in input order.
    std::string csv;
    json agg = json::array();
    if (breathing) {
        csv = "index,value,dir,status,omega_br,m_eff,omega_eff,fit_residual,fit_valid,error\n";
    } else {
        csv = "index,value,dir,status,region,min_contrast,final_contrast,peak_1,peak_2,peak_3,entropy_mean,bath_gain,virial_relative,error\n";
    }
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& p = points[k];
        const json& s = p.summary;
        const std::string status = p.status == RunStatus::Ok ? "ok" : "failed";
        std::string row = std::to_string(k) + "," + format_real(p.value) + "," + p.dir + "," + status + ",";
        if (breathing) {
            if (p.status == RunStatus::Ok) {
                const auto& em = s["effective_mass"];
                const bool valid = em["valid"].get<bool>();
                row += detail::num_cell(s["omega_br"]) + "," + (valid ? detail::num_cell(em["m_eff"]) : "") + "," +
                       (valid ? detail::num_cell(em["omega_eff"]) : "") + "," + (valid ? detail::num_cell(em["residual"]) : "") + "," +
                       (valid ? "true" : "false") + ",";
            } else {
                row += ",,,,,";
            }
        } else {
            if (p.status == RunStatus::Ok) {
                const auto& peaks = s["spectrum"]["peaks"];
                row += (s["region"].is_null() ? std::string() : s["region"]["label"].get<std::string>()) + ",";
                row += detail::num_cell(s["contrast"]["min_abs"]) + "," + detail::num_cell(s["contrast"]["final_abs"]) + ",";
                for (std::size_t i = 0; i < 3; ++i) row += (i < peaks.size() ? detail::num_cell(peaks[i]["omega"]) : "") + ",";
                row += (s["entanglement"].is_null() ? std::string() : detail::num_cell(s["entanglement"]["entropy_mean"])) + ",";
                row += detail::num_cell(s["energies"]["bath_gain"]) + "," + detail::num_cell(s["diagnostics"]["virial_relative"]) + ",";
            } else {
                row += ",,,,,,,,,";
            }
        }
        row += detail::csv_cell(p.error) + "\n";
        csv += row;
        agg.push_back({{"index", k}, {"value", p.value}, {"dir", p.dir}, {"status", status}, {"error", p.error}, {"summary", p.summary}});
    }
    if (base.output.wants("csv")) out.emit("aggregate.csv", csv);
    out.emit_json("aggregate.json", {{"schema_version", kSchemaVersion},
                                     {"scenario", "sweep"},
                                     {"parameter", base.sweep.parameter},
                                     {"point_scenario", base.sweep.scenario},
                                     {"points", agg}});
    for (const auto& p : points) out.adopt(p.dir + "/manifest.json");
    return points;
}

}  // namespace polaron
