#pragma once

#include <cmath>

namespace polaron {

/// Six-term split of <H> in oscillator units. The impurity terms refer to
/// the interacting (spin-up) branch.
struct EnergyBreakdown {
    double kinetic_b = 0.0;
    double potential_b = 0.0;
    double kinetic_i = 0.0;
    double potential_i = 0.0;
    double intra_bb = 0.0;
    double inter_bi = 0.0;

    double total() const { return kinetic_b + potential_b + kinetic_i + potential_i + intra_bb + inter_bi; }
    /// <H0_B + H_BB>
    double bath() const { return kinetic_b + potential_b + intra_bb; }
    /// <sum_a H0_a>
    double impurity_free() const { return kinetic_i + potential_i; }
};

struct VirialResult {
    double residual = 0.0;  // E_VT
    double relative = 0.0;  // E_VT / E_total
};

/// 2(T_B + T_I) - 2(V_B + V_I) + (<H_BB> + <H_BI>); vanishes on ground
/// states of harmonically trapped contact-interacting particles.
inline VirialResult virial_check(const EnergyBreakdown& e) {
    VirialResult r;
    r.residual = 2.0 * (e.kinetic_b + e.kinetic_i) - 2.0 * (e.potential_b + e.potential_i) + (e.intra_bb + e.inter_bi);
    const double tot = e.total();
    r.relative = tot != 0.0 ? r.residual / tot : r.residual;
    return r;
}

}  // namespace polaron
