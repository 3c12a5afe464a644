#pragma once

#include <cmath>
#include <complex>

#include "polaron/core/errors.hpp"
#include "polaron/meanfield/propagate.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

namespace detail {
inline bool same_orbitals(const MeanFieldState& a, const MeanFieldState& b) {
    auto eq = [](const Field& x, const Field& y) {
        if (!(x.grid() == y.grid())) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] != y[i]) return false;
        return true;
    };
    return eq(a.bath, b.bath) && eq(a.impurity.up, b.impurity.up);
}
}  // namespace detail

/// S(t) = exp(i E0 t) exp(-i chi(t)) <phi_B0|phi_B(t)>^N <phi_up0|phi_up(t)>.
/// The chi factor removes the interaction energy that the Gross-Pitaevskii
/// gauge double counts, so that S is identically 1 when nothing is quenched.
inline ComplexSeries mean_field_contrast(const MeanFieldTrajectory& traj, const MeanFieldState& initial) {
    require_same_grid(traj.initial.bath.grid(), initial.bath.grid(), "mean_field_contrast");
    if (traj.records.empty()) throw UsageError("mean_field_contrast: empty trajectory");
    const bool stored = detail::same_orbitals(traj.initial, initial);
    if (!stored && traj.snapshots.size() != traj.records.size()) {
        throw UsageError("mean_field_contrast: trajectory was not produced from this state and kept no fields");
    }
    const double n = traj.system.n_bath;
    const bool integral_n = std::floor(n) == n && n < 1e6;
    ComplexSeries s{traj.records.front().time, traj.record_dt(), {}, "S(t)", ""};
    s.values.reserve(traj.records.size());
    double unwrapped = 0.0;
    Complex prev_b{1.0, 0.0};
    for (std::size_t k = 0; k < traj.records.size(); ++k) {
        const auto& r = traj.records[k];
        Complex ob = r.overlap_bath, ou = r.overlap_up;
        if (!stored) {
            ob = inner(initial.bath, traj.snapshots[k].bath);
            ou = inner(initial.impurity.up, traj.snapshots[k].impurity.up);
        }
        Complex bath_factor;
        if (integral_n) {
            bath_factor = std::pow(ob, static_cast<int>(n));
        } else {
            // Non-integer particle numbers need a continuous branch of arg.
            unwrapped += std::arg(ob / prev_b);
            prev_b = ob;
            bath_factor = std::polar(std::pow(std::abs(ob), n), n * unwrapped);
        }
        const Complex global = std::polar(1.0, initial.energy_reference * r.time - r.tdvp_phase);
        s.values.push_back(global * bath_factor * ou);
    }
    return s;
}

}  // namespace polaron
