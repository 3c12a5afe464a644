#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/core/grid_hamiltonian.hpp"
#include "polaron/core/sine_transform.hpp"
#include "polaron/meanfield/system.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

struct PropagationOptions {
    double dt = 5e-4;
    double t_max = 100.0;
    std::size_t record_every = 100;
    double norm_tol = 1e-6;
    double energy_tol = 1e-6;  // relative to |E(0)|
    bool keep_fields = true;
};

struct ComponentMoments {
    double norm = 0.0;
    double x_mean = 0.0;
    double x2 = 0.0;
    double p2 = 0.0;
    double variance() const { return x2 - x_mean * x_mean; }
};

struct MeanFieldRecord {
    double time = 0.0;
    EnergyBreakdown energies;  // post-quench Hamiltonian, spin-up branch
    double tdvp_phase = 0.0;   // chi(t), d chi/dt = -(<H_BB> + <H_BI>)
    ComponentMoments bath, up, down;
    Complex overlap_bath, overlap_up, overlap_down;  // <initial|current>
};

struct MeanFieldTrajectory {
    MeanFieldSystem system;
    MeanFieldState initial;
    PropagationOptions options;
    std::vector<MeanFieldRecord> records;
    std::vector<MeanFieldState> snapshots;  // empty unless keep_fields
    MeanFieldState final_state;             // orbitals at the last record
    double max_norm_drift = 0.0;
    double max_energy_drift = 0.0;

    double record_dt() const { return options.dt * static_cast<double>(options.record_every); }

    RealSeries series(const std::function<double(const MeanFieldRecord&)>& pick, std::string label, std::string units = "") const {
        RealSeries s{records.empty() ? 0.0 : records.front().time, record_dt(), {}, std::move(label), std::move(units)};
        s.values.reserve(records.size());
        for (const auto& r : records) s.values.push_back(pick(r));
        return s;
    }
};

namespace detail {

inline ComponentMoments moments(const Field& f, const KineticOperator& t, std::span<const double> x, std::span<const double> x2) {
    ComponentMoments m;
    m.norm = f.norm2();
    m.x_mean = expectation(f, x);
    m.x2 = expectation(f, x2);
    m.p2 = 2.0 * t.mass() * t.expectation(f);
    return m;
}

inline void apply_phase(Field& f, std::span<const double> v, double dt) {
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        const double a = -dt * v[i];
        f[i] = cmul(f[i], Complex(std::cos(a), std::sin(a)));
    }
}

}  // namespace detail

/// Real-time Strang split-step evolution of the coupled bath and spin-up
/// impurity under `sys_post`. The spin-down orbital feels only its trap, so
/// it is evolved exactly in the eigenbasis of the grid Hamiltonian at the
/// record times.
inline MeanFieldTrajectory propagate(const MeanFieldState& state, const MeanFieldSystem& sys_post, const PropagationOptions& opt = {}) {
    sys_post.validate();
    if (!(opt.dt > 0.0) || !(opt.t_max > 0.0)) throw DomainError("propagate: dt and t_max must be positive");
    if (opt.record_every == 0) throw DomainError("propagate: record_every must be >= 1");
    const Grid& g = state.bath.grid();
    require_same_grid(g, state.impurity.up.grid(), "propagate");
    require_same_grid(g, state.impurity.down.grid(), "propagate");
    for (const Field* f : {&state.bath, &state.impurity.up, &state.impurity.down}) {
        if (std::abs(f->norm2() - 1.0) > 1e-8) throw DomainError("propagate: input orbitals must be normalized");
    }

    const double dt = opt.dt;
    const auto n_steps = static_cast<std::size_t>(std::llround(opt.t_max / dt));
    const KineticOperator t_b(g, sys_post.mass_b), t_i(g, sys_post.mass_i);
    const auto kin_b = t_b.phase_table(dt);
    const auto kin_i = t_i.phase_table(dt);
    const auto vb = harmonic_samples(g, sys_post.mass_b, sys_post.omega_b);
    const auto vi = harmonic_samples(g, sys_post.mass_i, sys_post.omega_i);
    const auto xs = g.points();
    std::vector<double> x2s(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) x2s[i] = xs[i] * xs[i];
    const double n = sys_post.n_bath, np = sys_post.bath_partners();

    const GridSpectrum down_spec = diagonalize_grid_hamiltonian(g, sys_post.mass_i, vi);
    const Eigen::VectorXcd down_coeffs = down_spec.project(state.impurity.down);

    MeanFieldTrajectory traj{sys_post, state, opt, {}, {}, state, 0.0, 0.0};
    Field bath = state.bath, up = state.impurity.up, down = state.impurity.down;
    std::vector<double> pot_b(g.size()), pot_i(g.size());

    // Mean-field potentials from the current densities; returns the
    // interaction energy <H_BB> + <H_BI> as a by-product.
    auto update_potentials = [&]() {
        double bb = 0.0, bi = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double rb = std::norm(bath[i]), ru = std::norm(up[i]);
            pot_b[i] = vb[i] + sys_post.g_bb * np * rb + sys_post.g_bi * ru;
            pot_i[i] = vi[i] + sys_post.g_bi * n * rb;
            bb += rb * rb;
            bi += rb * ru;
        }
        return (0.5 * sys_post.g_bb * n * np * bb + sys_post.g_bi * n * bi) * g.dx();
    };

    double chi = 0.0;
    double e0 = 0.0;
    auto record = [&](double t) {
        MeanFieldRecord r;
        r.time = t;
        r.energies = mean_field_energies(sys_post, t_b, t_i, bath, up);
        r.tdvp_phase = chi;
        if (t > 0.0) down = down_spec.evolve(down_coeffs, t);
        r.bath = detail::moments(bath, t_b, xs, x2s);
        r.up = detail::moments(up, t_i, xs, x2s);
        r.down = detail::moments(down, t_i, xs, x2s);
        r.overlap_bath = inner(state.bath, bath);
        r.overlap_up = inner(state.impurity.up, up);
        r.overlap_down = inner(state.impurity.down, down);
        if (traj.records.empty()) e0 = r.energies.total();
        const double norm_drift =
            std::max({std::abs(r.bath.norm - 1.0), std::abs(r.up.norm - 1.0), std::abs(r.down.norm - 1.0)});
        const double energy_drift = std::abs(r.energies.total() - e0) / std::max(std::abs(e0), 1.0);
        traj.max_norm_drift = std::max(traj.max_norm_drift, norm_drift);
        traj.max_energy_drift = std::max(traj.max_energy_drift, energy_drift);
        if (norm_drift > opt.norm_tol || energy_drift > opt.energy_tol) {
            std::ostringstream msg;
            msg << "propagate: " << (norm_drift > opt.norm_tol ? "norm" : "energy") << " drift "
                << (norm_drift > opt.norm_tol ? norm_drift : energy_drift) << " at t = " << t << " exceeds tolerance; retry with dt <= "
                << 0.5 * dt;
            throw SolverError(msg.str());
        }
        traj.records.push_back(r);
        MeanFieldState s{bath, SpinorImpurityState{up, down, state.impurity.alpha, state.impurity.beta}};
        s.time = t;
        s.energy_reference = state.energy_reference;
        s.energies = r.energies;
        if (opt.keep_fields) traj.snapshots.push_back(s);
        traj.final_state = std::move(s);
    };

    record(0.0);
    // Adjacent potential half-steps use the same densities, so between
    // records they merge into one full step.
    double inter = update_potentials();
    detail::apply_phase(bath, pot_b, 0.5 * dt);
    detail::apply_phase(up, pot_i, 0.5 * dt);
    for (std::size_t step = 1; step <= n_steps; ++step) {
        t_b.propagate_with(bath, kin_b);
        t_i.propagate_with(up, kin_i);
        const double inter_now = update_potentials();
        chi -= 0.5 * dt * (inter + inter_now);
        inter = inter_now;
        const bool at_record = step % opt.record_every == 0;
        const bool last = step == n_steps;
        if (at_record || last) {
            detail::apply_phase(bath, pot_b, 0.5 * dt);
            detail::apply_phase(up, pot_i, 0.5 * dt);
            if (at_record) record(static_cast<double>(step) * dt);
            if (!last) {
                detail::apply_phase(bath, pot_b, 0.5 * dt);
                detail::apply_phase(up, pot_i, 0.5 * dt);
            }
        } else {
            detail::apply_phase(bath, pot_b, dt);
            detail::apply_phase(up, pot_i, dt);
        }
    }
    return traj;
}

}  // namespace polaron
