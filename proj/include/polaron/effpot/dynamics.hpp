#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <sstream>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid_hamiltonian.hpp"
#include "polaron/core/least_squares.hpp"
#include "polaron/effpot/potential.hpp"
#include "polaron/effpot/spectrum.hpp"
#include "polaron/observables/frequency.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

struct EffpotContrast {
    ComplexSeries s;
    std::vector<double> weights;  // |<psi_n|initial>|^2
    double completeness = 0.0;
    double reference_energy = 0.0;
};

/// S(t) = sum_n w_n exp(-i (E_n - E_ref) t) for a single particle released
/// into V_eff. E_ref defaults to the bare-trap ground energy omega / 2.
inline EffpotContrast effpot_contrast(const PotentialSpectrum& spec, const Field& initial, double t_max, double dt,
                                      double reference_energy) {
    if (!(dt > 0.0) || !(t_max > 0.0)) throw DomainError("effpot_contrast: dt and t_max must be positive");
    if (std::abs(initial.norm2() - 1.0) > 1e-8) throw DomainError("effpot_contrast: initial state must be normalized");
    const Eigen::VectorXcd c = spec.eig.project(initial);
    EffpotContrast out;
    out.reference_energy = reference_energy;
    out.weights.resize(spec.n_eig);
    for (std::size_t n = 0; n < spec.n_eig; ++n) {
        out.weights[n] = std::norm(c[static_cast<Eigen::Index>(n)]);
        out.completeness += out.weights[n];
    }
    if (out.completeness < 0.999) {
        std::ostringstream msg;
        msg << "effpot_contrast: the " << spec.n_eig << " lowest states hold only " << out.completeness
            << " of the initial state; increase n_eig";
        throw SolverError(msg.str());
    }
    const auto n_t = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
    out.s = ComplexSeries{0.0, dt, std::vector<std::complex<double>>(n_t), "S(t)", ""};
    for (std::size_t k = 0; k < n_t; ++k) {
        const double t = static_cast<double>(k) * dt;
        std::complex<double> z{};
        for (std::size_t n = 0; n < spec.n_eig; ++n) z += out.weights[n] * std::polar(1.0, -(spec.energy(n) - reference_energy) * t);
        out.s.values[k] = z;
    }
    return out;
}

inline EffpotContrast effpot_contrast(const PotentialSpectrum& spec, double t_max, double dt) {
    return effpot_contrast(spec, bare_trap_ground_state(spec.eig.grid, spec.mass, spec.omega), t_max, dt, 0.5 * spec.omega);
}

struct BreathingResult {
    RealSeries x_mean, x2, variance, p2;
    FrequencyEstimate estimate;
    double omega_br = 0.0;
    double x2_0 = 0.0, p2_0 = 0.0;
};

/// Moments of a state released from the ground state of `before` into
/// `after`, evolved exactly in the eigenbasis of `after`.
inline BreathingResult breathing_run(const EffectivePotential& before, const EffectivePotential& after, double t_max, double dt,
                                     bool extract_frequency = true) {
    require_same_grid(before.grid, after.grid, "breathing_run");
    if (!(dt > 0.0) || !(t_max > 0.0)) throw DomainError("breathing_run: dt and t_max must be positive");
    const Grid& g = after.grid;
    const Field psi0 = eigensolve(before, 1).state(0);
    const GridSpectrum spec = diagonalize_grid_hamiltonian(g, after.mass, after.values);
    const Eigen::VectorXcd c_all = spec.project(psi0);

    // Only states that carry weight matter.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index n = 0; n < c_all.size(); ++n)
        if (std::norm(c_all[n]) > 1e-20) keep.push_back(n);
    const auto k = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd vecs(spec.vectors.rows(), k);
    Eigen::VectorXd energies(k);
    Eigen::VectorXcd c(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        vecs.col(j) = spec.vectors.col(keep[static_cast<std::size_t>(j)]);
        energies[j] = spec.energies[keep[static_cast<std::size_t>(j)]];
        c[j] = c_all[keep[static_cast<std::size_t>(j)]];
    }
    Eigen::VectorXd x(vecs.rows()), x2(vecs.rows()), v(vecs.rows());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        x[j] = g.x(static_cast<std::size_t>(j) + 1);
        x2[j] = x[j] * x[j];
        v[j] = after.values[static_cast<std::size_t>(j) + 1];
    }
    const Eigen::MatrixXd mx = vecs.transpose() * x.asDiagonal() * vecs;
    const Eigen::MatrixXd mx2 = vecs.transpose() * x2.asDiagonal() * vecs;
    // p^2 = 2m (H - V)
    Eigen::MatrixXd mp2 = -2.0 * after.mass * (vecs.transpose() * v.asDiagonal() * vecs);
    for (Eigen::Index j = 0; j < k; ++j) mp2(j, j) += 2.0 * after.mass * energies[j];

    const auto n_t = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
    BreathingResult out;
    out.x_mean = RealSeries{0.0, dt, std::vector<double>(n_t), "<x>", ""};
    out.x2 = RealSeries{0.0, dt, std::vector<double>(n_t), "<x^2>", ""};
    out.variance = RealSeries{0.0, dt, std::vector<double>(n_t), "<x^2>-<x>^2", ""};
    out.p2 = RealSeries{0.0, dt, std::vector<double>(n_t), "<p^2>", ""};
    Eigen::VectorXcd ct(k);
    for (std::size_t i = 0; i < n_t; ++i) {
        const double t = static_cast<double>(i) * dt;
        for (Eigen::Index j = 0; j < k; ++j) ct[j] = c[j] * std::polar(1.0, -energies[j] * t);
        const double xm = ct.dot(mx * ct).real();
        const double xx = ct.dot(mx2 * ct).real();
        out.x_mean.values[i] = xm;
        out.x2.values[i] = xx;
        out.variance.values[i] = xx - xm * xm;
        out.p2.values[i] = ct.dot(mp2 * ct).real();
    }
    out.x2_0 = out.x2.values.front();
    out.p2_0 = out.p2.values.front();
    if (extract_frequency) {
        out.estimate = dominant_frequency(out.variance);
        out.omega_br = out.estimate.omega;
    }
    return out;
}

using PotentialBuilder = std::function<EffectivePotential(double omega_i)>;

/// Trap-frequency quench omega_initial -> omega_final of the impurity in a
/// fixed bath density.
inline BreathingResult breathing_run(const PotentialBuilder& build, double omega_initial, double omega_final, double t_max, double dt) {
    if (!(omega_initial > 0.0) || !(omega_final > 0.0)) throw ConfigError("breathing_run: trap frequencies must be positive");
    if (omega_initial == omega_final) throw ConfigError("breathing_run: initial and final trap frequencies coincide");
    return breathing_run(build(omega_initial), build(omega_final), t_max, dt);
}

struct EffectiveMassFit {
    double m_eff = 0.0;
    double omega_eff = 0.0;
    double residual = 0.0;  // worst rms / peak-to-peak of the two signals
};

namespace detail {

inline double peak_to_peak(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace detail

/// Joint fit of the harmonic predictions
///   <x^2>(t) = p0 / (m w)^2 sin^2(w t) + x0 cos^2(w t)
///   <p^2>(t) = p0 cos^2(w t) + (m w)^2 x0 sin^2(w t)
/// for (m, w). A constant self-energy drops out of both.
inline EffectiveMassFit fit_effective_mass(const RealSeries& x2, const RealSeries& p2, double x2_0, double p2_0) {
    x2.validate("fit_effective_mass");
    p2.validate("fit_effective_mass");
    if (x2.size() != p2.size() || std::abs(x2.dt - p2.dt) > 1e-12 * x2.dt || std::abs(x2.t0 - p2.t0) > 1e-12) {
        throw AnalysisError("fit_effective_mass: x2 and p2 series are not sampled alike");
    }
    if (!(x2_0 > 0.0) || !(p2_0 > 0.0)) throw AnalysisError("fit_effective_mass: initial moments must be positive");
    const double ax = std::max(detail::peak_to_peak(x2.values), 1e-12 * x2_0);
    const double ap = std::max(detail::peak_to_peak(p2.values), 1e-12 * p2_0);
    const int n = static_cast<int>(x2.size());

    auto model = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r) {
        const double m = q[0], w = q[1], mw2 = (m * w) * (m * w);
        for (int i = 0; i < n; ++i) {
            const double t = x2.time(static_cast<std::size_t>(i)) - x2.t0;
            const double s2 = std::sin(w * t) * std::sin(w * t), c2 = 1.0 - s2;
            r[i] = (p2_0 / mw2 * s2 + x2_0 * c2 - x2.values[static_cast<std::size_t>(i)]) / ax;
            r[n + i] = (p2_0 * c2 + mw2 * x2_0 * s2 - p2.values[static_cast<std::size_t>(i)]) / ap;
        }
    };

    // Frequency from the spectrum (the moments oscillate at 2w); the mass
    // from a coarse scan, then a joint polish.
    double w0 = 1.0;
    try {
        w0 = 0.5 * dominant_frequency(x2).omega;
    } catch (const AnalysisError&) {
    }
    LeastSquaresResult best;
    best.rms = std::numeric_limits<double>::infinity();
    Eigen::VectorXd r(2 * n);
    for (double m0 = 0.25; m0 <= 4.0; m0 *= 1.25) {
        Eigen::VectorXd q(2);
        q << m0, w0;
        model(q, r);
        const double rms = std::sqrt(r.squaredNorm() / (2.0 * n));
        if (rms < best.rms) {
            best.rms = rms;
            best.params = q;
        }
    }
    const auto fit = least_squares(model, best.params, 2 * n);
    EffectiveMassFit out;
    out.m_eff = std::abs(fit.params[0]);
    out.omega_eff = std::abs(fit.params[1]);
    double rx = 0.0, rp = 0.0;
    for (int i = 0; i < n; ++i) {
        rx += fit.residuals[i] * fit.residuals[i];
        rp += fit.residuals[n + i] * fit.residuals[n + i];
    }
    out.residual = std::max(std::sqrt(rx / n), std::sqrt(rp / n));
    if (out.residual > 0.05) {
        std::ostringstream msg;
        msg << "fit_effective_mass: residual " << out.residual << " of the signal amplitude exceeds 5%; harmonic model invalid";
        throw AnalysisError(msg.str());
    }
    return out;
}

}  // namespace polaron
