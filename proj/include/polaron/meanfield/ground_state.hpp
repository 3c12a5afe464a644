#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/core/sine_transform.hpp"
#include "polaron/meanfield/system.hpp"
#include "polaron/meanfield/thomas_fermi.hpp"

namespace polaron {

struct RelaxOptions {
    double tol = 1e-10;  // relative energy change per unit imaginary time
    // Split-step stages with decreasing steps. Their fixed points carry an
    // O(dt) bias from the renormalized nonlinear step, so a semi-implicit
    // refinement (unbiased fixed point) always finishes the job.
    std::vector<double> dt_schedule{2e-2, 5e-3, 1e-3};
    double coarse_tol = 1e-8;
    // Energy is quadratic in the orbital error; the refinement stage also
    // waits for the L2 update per unit imaginary time to drop below this.
    double residual_tol = 1e-8;
    double check_interval = 0.5;
    std::size_t max_steps = 1'000'000;
};

struct RelaxReport {
    std::vector<double> energy_trace;  // one entry per convergence check
    std::size_t steps = 0;
    double last_change = 0.0;
};

struct MeanFieldGroundState {
    MeanFieldState state;
    RelaxReport report;
};

namespace detail {

// Real-valued interior arrays; the relaxed orbitals are real and nodeless.
struct RelaxWork {
    const MeanFieldSystem& sys;
    const Grid& grid;
    KineticOperator t_b;
    KineticOperator t_i;
    std::vector<double> vb, vi;  // external potentials, interior points
    std::vector<double> b, u;
    std::vector<double> scratch_a, scratch_b;
    double update = 0.0;  // largest L2 change of the last refine_step

    RelaxWork(const MeanFieldSystem& s, const Grid& g)
        : sys(s), grid(g), t_b(g, s.mass_b), t_i(g, s.mass_i) {
        const std::size_t n = g.interior_size();
        vb.resize(n);
        vi.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double x = g.x(j + 1);
            vb[j] = 0.5 * s.mass_b * s.omega_b * s.omega_b * x * x;
            vi[j] = 0.5 * s.mass_i * s.omega_i * s.omega_i * x * x;
        }
        scratch_a.resize(n);
        scratch_b.resize(n);
    }

    double kinetic(const KineticOperator& t, const std::vector<double>& f) {
        t.transform().apply(f, scratch_a);
        const auto eig = t.eigenvalues();
        double s = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) s += eig[k] * scratch_a[k] * scratch_a[k];
        return s * grid.dx();
    }

    void damp(const KineticOperator& t, std::vector<double>& f, const std::vector<double>& table) {
        t.transform().apply(f, scratch_a);
        for (std::size_t k = 0; k < f.size(); ++k) scratch_a[k] *= table[k];
        t.transform().apply(scratch_a, f);
    }

    void normalize(std::vector<double>& f) const {
        double s = 0.0;
        for (double v : f) s += v * v;
        s = std::sqrt(s * grid.dx());
        if (!(s > 0.0) || !std::isfinite(s)) throw SolverError("relax_ground_state: orbital collapsed to zero");
        for (double& v : f) v /= s;
    }

    void potential_half_step(double half) {
        const double n = sys.n_bath, np = sys.bath_partners();
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double rb = b[j] * b[j], ru = u[j] * u[j];
            b[j] *= std::exp(-half * (vb[j] + sys.g_bb * np * rb + sys.g_bi * ru));
            u[j] *= std::exp(-half * (vi[j] + sys.g_bi * n * rb));
        }
    }

    // phi <- (1 + dt T)^-1 [phi - dt (V_gp - mu) phi], then renormalize. The
    // fixed point satisfies H_gp phi = mu phi exactly.
    void refine_component(const KineticOperator& t, std::vector<double>& f, const std::vector<double>& v, double dt) {
        const auto eig = t.eigenvalues();
        t.transform().apply(f, scratch_a);
        double kin = 0.0, pot = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            kin += eig[k] * scratch_a[k] * scratch_a[k];
            pot += v[k] * f[k] * f[k];
        }
        const double mu = (kin + pot) * grid.dx();
        for (std::size_t j = 0; j < f.size(); ++j) scratch_b[j] = f[j] - dt * (v[j] - mu) * f[j];
        t.transform().apply(scratch_b, scratch_a);
        for (std::size_t k = 0; k < f.size(); ++k) scratch_a[k] /= 1.0 + dt * eig[k];
        t.transform().apply(scratch_a, scratch_b);
        normalize(scratch_b);
        double d = 0.0;
        for (std::size_t j = 0; j < f.size(); ++j) d += (scratch_b[j] - f[j]) * (scratch_b[j] - f[j]);
        update = std::max(update, std::sqrt(d * grid.dx()));
        f.swap(scratch_b);
    }

    void refine_step(double dt, std::vector<double>& pot_b, std::vector<double>& pot_i) {
        const double n = sys.n_bath, np = sys.bath_partners();
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double rb = b[j] * b[j], ru = u[j] * u[j];
            pot_b[j] = vb[j] + sys.g_bb * np * rb + sys.g_bi * ru;
            pot_i[j] = vi[j] + sys.g_bi * n * rb;
        }
        update = 0.0;
        refine_component(t_b, b, pot_b, dt);
        refine_component(t_i, u, pot_i, dt);
    }

    EnergyBreakdown energies() {
        EnergyBreakdown e;
        const double n = sys.n_bath;
        e.kinetic_b = n * kinetic(t_b, b);
        e.kinetic_i = kinetic(t_i, u);
        double pb = 0.0, pi = 0.0, bb = 0.0, bi = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double rb = b[j] * b[j], ru = u[j] * u[j];
            pb += vb[j] * rb;
            pi += vi[j] * ru;
            bb += rb * rb;
            bi += rb * ru;
        }
        const double dx = grid.dx();
        e.potential_b = n * pb * dx;
        e.potential_i = pi * dx;
        e.intra_bb = 0.5 * sys.g_bb * n * sys.bath_partners() * bb * dx;
        e.inter_bi = sys.g_bi * n * bi * dx;
        return e;
    }

    // mu_B = <T + V + g (N-1) |phi_B|^2 + g_BI |phi_I|^2>, mu_I = <T + V_I + g_BI N |phi_B|^2>.
    std::pair<double, double> chemical_potentials(const EnergyBreakdown& e) const {
        const double n = sys.n_bath;
        double bb = 0.0, bi = 0.0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double rb = b[j] * b[j], ru = u[j] * u[j];
            bb += rb * rb;
            bi += rb * ru;
        }
        const double dx = grid.dx();
        const double one_b = n > 0.0 ? (e.kinetic_b + e.potential_b) / n : 0.0;
        const double mu_b = one_b + sys.g_bb * sys.bath_partners() * bb * dx + sys.g_bi * bi * dx;
        const double mu_i = e.kinetic_i + e.potential_i + sys.g_bi * n * bi * dx;
        return {mu_b, mu_i};
    }
};

inline Field to_field(const Grid& g, const std::vector<double>& interior) {
    Field f(g);
    for (std::size_t j = 0; j < interior.size(); ++j) f[j + 1] = interior[j];
    return f;
}

}  // namespace detail

/// Imaginary-time split-step relaxation of the coupled bath + spin-up
/// impurity equations. Both impurity branches of the returned state start in
/// the relaxed spin-up orbital.
inline MeanFieldGroundState relax_ground_state(const MeanFieldSystem& sys, const Grid& grid, const RelaxOptions& opt = {}) {
    sys.validate();
    if (!(opt.tol > 0.0)) throw DomainError("relax_ground_state: tol must be positive");
    if (opt.dt_schedule.empty()) throw DomainError("relax_ground_state: empty dt schedule");
    for (double d : opt.dt_schedule)
        if (!(d > 0.0)) throw DomainError("relax_ground_state: dt must be positive");

    detail::RelaxWork w(sys, grid);
    const std::size_t n = grid.interior_size();
    w.b.resize(n);
    w.u.resize(n);

    // Thomas-Fermi start for a strongly interacting bath, trap Gaussian otherwise.
    const double sb = 1.0 / std::sqrt(sys.mass_b * sys.omega_b);
    const double si = 1.0 / std::sqrt(sys.mass_i * sys.omega_i);
    const bool use_tf = sys.g_bb > 0.0 && sys.n_bath >= 1.0 && thomas_fermi(sys).radius > 2.0 * sb;
    for (std::size_t j = 0; j < n; ++j) {
        const double x = grid.x(j + 1);
        const double gauss = std::exp(-0.5 * x * x / (sb * sb));
        w.b[j] = use_tf ? std::sqrt(thomas_fermi(sys).density(x)) + 1e-2 * gauss : gauss;
        w.u[j] = std::exp(-0.5 * x * x / (si * si));
    }
    w.normalize(w.b);
    w.normalize(w.u);

    RelaxReport report;
    auto e = w.energies();
    report.energy_trace.push_back(e.total());
    auto mu = w.chemical_potentials(e);

    // One convergence check; returns true when both the energy and the
    // chemical potentials have settled to `tol` per unit imaginary time.
    auto settled = [&](double interval, double tol) {
        const auto e_new = w.energies();
        const auto mu_new = w.chemical_potentials(e_new);
        const double scale = std::max(std::abs(e_new.total()), 1e-12);
        const double change = std::abs(e_new.total() - e.total()) / scale / interval;
        const double mu_change = std::max(std::abs(mu_new.first - mu.first) / std::max(std::abs(mu_new.first), 1.0),
                                          std::abs(mu_new.second - mu.second) / std::max(std::abs(mu_new.second), 1.0)) /
                                 interval;
        e = e_new;
        mu = mu_new;
        report.energy_trace.push_back(e.total());
        report.last_change = change;
        if (!std::isfinite(e.total())) throw SolverError("relax_ground_state: energy is not finite", report.energy_trace);
        if (change < tol && mu_change < 10.0 * tol) return true;
        if (report.steps > opt.max_steps) {
            std::ostringstream msg;
            msg << "relax_ground_state: no convergence after " << report.steps << " steps (relative change " << change
                << " per unit time, tol " << tol << ")";
            throw SolverError(msg.str(), report.energy_trace);
        }
        return false;
    };

    const double split_tol = std::max(opt.tol, opt.coarse_tol);
    for (double dt : opt.dt_schedule) {
        const auto damp_b = w.t_b.damping_table(dt);
        const auto damp_i = w.t_i.damping_table(dt);
        const std::size_t every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.check_interval / dt)));
        do {
            for (std::size_t s = 0; s < every; ++s) {
                w.potential_half_step(0.5 * dt);
                w.damp(w.t_b, w.b, damp_b);
                w.damp(w.t_i, w.u, damp_i);
                w.potential_half_step(0.5 * dt);
                w.normalize(w.b);
                w.normalize(w.u);
            }
            report.steps += every;
        } while (!settled(static_cast<double>(every) * dt, split_tol));
    }

    // Explicit in the potential, so the step is bounded by its largest value.
    std::vector<double> pot_b(n), pot_i(n);
    double v_max = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double rb = w.b[j] * w.b[j];
        v_max = std::max({v_max, w.vb[j] + sys.g_bb * sys.bath_partners() * rb + sys.g_bi * w.u[j] * w.u[j],
                          w.vi[j] + sys.g_bi * sys.n_bath * rb});
    }
    const double dt_refine = std::min(1e-2, 1.5 / v_max);
    const std::size_t every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opt.check_interval / dt_refine)));
    for (;;) {
        for (std::size_t s = 0; s < every; ++s) w.refine_step(dt_refine, pot_b, pot_i);
        report.steps += every;
        const bool energy_settled = settled(static_cast<double>(every) * dt_refine, opt.tol);
        if (energy_settled && w.update / dt_refine <= opt.residual_tol) break;
        if (report.steps > opt.max_steps) {
            std::ostringstream msg;
            msg << "relax_ground_state: orbital update " << w.update / dt_refine << " per unit time after " << report.steps
                << " steps, residual tol " << opt.residual_tol;
            throw SolverError(msg.str(), report.energy_trace);
        }
    }

    const Field up = detail::to_field(grid, w.u);
    MeanFieldGroundState out{MeanFieldState{detail::to_field(grid, w.b), SpinorImpurityState{up, up}}, std::move(report)};
    out.state.energies = e;
    out.state.energy_reference = e.total();
    out.state.mu_bath = mu.first;
    out.state.mu_impurity = mu.second;
    return out;
}

}  // namespace polaron
