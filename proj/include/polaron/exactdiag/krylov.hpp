#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <sstream>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/exactdiag/hamiltonian.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

struct KrylovOptions {
    double dt = 1e-2;               // sampling unit; records land on multiples of dt * record_every
    double t_max = 20.0;
    std::size_t record_every = 1;
    std::size_t max_krylov = 30;
    double tol = 1e-10;             // local error estimate per step
    bool keep_states = false;
};

struct EDRecord {
    double time = 0.0;
    std::complex<double> overlap;  // <v0|psi(t)>
    double norm = 1.0;
    double energy = 0.0;
};

struct EDTrajectory {
    KrylovOptions options;
    std::vector<EDRecord> records;
    std::vector<Eigen::VectorXcd> states;  // empty unless keep_states
    Eigen::VectorXcd final_state;
    double max_norm_drift = 0.0;
    double max_energy_drift = 0.0;
    std::size_t matvecs = 0;
    std::size_t steps = 0;

    double record_dt() const { return options.dt * static_cast<double>(options.record_every); }
};

using EDObserver = std::function<void(double, const Eigen::VectorXcd&)>;

/// exp(-i H t) v0 by short Lanczos exponentials. Each step builds one Krylov
/// space (full reorthogonalization, at most max_krylov vectors), takes the
/// longest step whose error estimate beta_m |[exp(-i tau T) e1]_m| stays
/// below tol, and evaluates every record time it covers from that space.
inline EDTrajectory propagate_krylov(const EDHamiltonian& h, const Eigen::VectorXcd& v0, const KrylovOptions& opt = {},
                                     const EDObserver& observe = {}) {
    if (!(opt.dt > 0.0) || !(opt.t_max > 0.0) || opt.record_every == 0) throw DomainError("propagate_krylov: invalid time grid");
    if (opt.max_krylov < 2) throw DomainError("propagate_krylov: need max_krylov >= 2");
    if (static_cast<std::size_t>(v0.size()) != h.dim()) throw UsageError("propagate_krylov: state has the wrong dimension");
    if (std::abs(v0.norm() - 1.0) > 1e-10) throw DomainError("propagate_krylov: initial state must be normalized");

    EDTrajectory traj;
    traj.options = opt;
    const double rec_dt = traj.record_dt();
    const auto n_rec = static_cast<std::size_t>(std::floor(opt.t_max / rec_dt + 1e-9));
    const auto dim = v0.size();

    double e0 = 0.0;
    auto record = [&](double t, const Eigen::VectorXcd& psi, double energy) {
        EDRecord r{t, v0.dot(psi), psi.norm(), energy};
        if (traj.records.empty()) e0 = energy;
        traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(r.norm - 1.0));
        traj.max_energy_drift = std::max(traj.max_energy_drift, std::abs(energy - e0) / std::max(std::abs(e0), 1.0));
        traj.records.push_back(r);
        if (opt.keep_states) traj.states.push_back(psi);
        if (observe) observe(t, psi);
    };

    Eigen::VectorXcd psi = v0;
    {
        const Eigen::VectorXcd hv = h * psi;
        ++traj.matvecs;
        record(0.0, psi, psi.dot(hv).real());
    }
    double t = 0.0;
    std::size_t next = 1;
    Eigen::MatrixXcd q(dim, static_cast<Eigen::Index>(opt.max_krylov));
    while (t < opt.t_max - 1e-12 * opt.t_max) {
        const double nrm = psi.norm();
        q.col(0) = psi / nrm;
        std::vector<double> alpha, beta;
        double b_last = 0.0;
        bool exact = false;
        for (std::size_t k = 0; k < opt.max_krylov; ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            Eigen::VectorXcd w = h * Eigen::VectorXcd(q.col(kk));
            ++traj.matvecs;
            alpha.push_back(q.col(kk).dot(w).real());
            for (int pass = 0; pass < 2; ++pass) {
                const Eigen::VectorXcd proj = q.leftCols(kk + 1).adjoint() * w;
                w.noalias() -= q.leftCols(kk + 1) * proj;
            }
            b_last = w.norm();
            if (b_last < 1e-13 * std::max(1.0, std::abs(alpha.back()))) {
                exact = true;
                break;
            }
            if (k + 1 < opt.max_krylov) {
                beta.push_back(b_last);
                q.col(kk + 1) = w / b_last;
            }
        }
        const auto m = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            tri(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
        const Eigen::VectorXd theta = es.eigenvalues();
        const Eigen::MatrixXd s = es.eigenvectors();
        const Eigen::VectorXd s0 = s.row(0).transpose();
        auto coeffs = [&](double tau) {
            Eigen::VectorXcd c(m);
            for (Eigen::Index j = 0; j < m; ++j) c[j] = s0[j] * std::polar(1.0, -theta[j] * tau);
            return Eigen::VectorXcd(s.cast<std::complex<double>>() * c);
        };
        auto error = [&](double tau) { return exact ? 0.0 : b_last * std::abs(coeffs(tau)[m - 1]); };

        const double remaining = opt.t_max - t;
        double tau_ok = remaining;
        if (error(remaining) > opt.tol) {
            double lo = 0.0, hi = remaining;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (error(mid) <= opt.tol ? lo : hi) = mid;
            }
            tau_ok = lo;
        }
        if (tau_ok < 1e-6 * rec_dt) {
            std::ostringstream msg;
            msg << "propagate_krylov: no acceptable step at t = " << t << " with " << opt.max_krylov
                << " Krylov vectors; retry with larger max_krylov or dt <= " << 0.5 * opt.dt;
            throw SolverError(msg.str());
        }
        ++traj.steps;

        auto state_at = [&](double tau) {
            const Eigen::VectorXcd c = coeffs(tau);
            const Eigen::VectorXcd out = q.leftCols(m) * c;
            return std::pair<Eigen::VectorXcd, double>(nrm * out, nrm * nrm * c.dot(tri.cast<std::complex<double>>() * c).real());
        };
        double t_end = t + tau_ok;
        while (next <= n_rec && static_cast<double>(next) * rec_dt <= t_end + 1e-12 * rec_dt) {
            const double tr = static_cast<double>(next) * rec_dt;
            auto [state, energy] = state_at(tr - t);
            record(tr, state, energy);
            ++next;
        }
        // Stop on the last record covered unless the step ends the run.
        if (t_end < opt.t_max - 1e-12 * opt.t_max && next > 1 && static_cast<double>(next - 1) * rec_dt > t) {
            t_end = static_cast<double>(next - 1) * rec_dt;
        }
        psi = state_at(t_end - t).first;
        t = t_end;
    }
    traj.final_state = psi;
    return traj;
}

/// S(t) = exp(i E0 t) <v0| exp(-i H t) |v0>.
inline ComplexSeries ed_contrast(const EDTrajectory& traj, double e0) {
    if (traj.records.size() < 2) throw DomainError("ed_contrast: trajectory has fewer than two records");
    ComplexSeries s{traj.records.front().time, traj.record_dt(), {}, "S(t)", ""};
    s.values.reserve(traj.records.size());
    for (const auto& r : traj.records) s.values.push_back(std::polar(1.0, e0 * r.time) * r.overlap);
    return s;
}

}  // namespace polaron
