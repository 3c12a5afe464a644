#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/core/sine_transform.hpp"
#include "polaron/observables/contrast.hpp"
#include "polaron/observables/energy.hpp"

namespace polaron {

/// Parameters of the coupled bath + spin-up impurity mean-field problem, in
/// units hbar = m_B = omega_B = 1. The bath self-interaction carries the
/// conventional 1/2 and counts N(N-1)/2 pairs, i.e. it is the exact
/// expectation value in the product state phi_B^N:
/// <H_BB> = (g_BB/2) N(N-1) int |phi_B|^4. The interspecies term has no 1/2.
struct MeanFieldSystem {
    double n_bath = 100.0;
    double g_bb = 0.5;
    double g_bi = 0.0;
    double omega_b = 1.0;
    double omega_i = 1.0;
    double mass_b = 1.0;
    double mass_i = 1.0;

    /// Partners each bath boson interacts with.
    double bath_partners() const { return n_bath > 1.0 ? n_bath - 1.0 : 0.0; }

    void validate() const {
        if (!(n_bath >= 0.0)) throw ConfigError("meanfield: n_bath must be non-negative");
        if (g_bb < 0.0 || g_bi < 0.0) throw ConfigError("meanfield: couplings must be non-negative (repulsive only)");
        if (!(omega_b > 0.0) || !(omega_i > 0.0)) throw ConfigError("meanfield: trap frequencies must be positive");
        if (!(mass_b > 0.0) || !(mass_i > 0.0)) throw ConfigError("meanfield: masses must be positive");
    }
};

/// Spin-resolved impurity orbitals with their (real, non-negative) weights.
struct SpinorImpurityState {
    Field up;
    Field down;
    double alpha = std::numbers::sqrt2 / 2.0;
    double beta = std::numbers::sqrt2 / 2.0;
};

struct MeanFieldState {
    Field bath;  // normalized to 1; density is n_bath |phi_B|^2
    SpinorImpurityState impurity;
    double time = 0.0;
    double energy_reference = 0.0;  // total energy of the pre-quench state
    EnergyBreakdown energies;
    double mu_bath = 0.0;
    double mu_impurity = 0.0;
};

inline std::vector<double> harmonic_samples(const Grid& grid, double mass, double omega) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.x(i);
        v[i] = 0.5 * mass * omega * omega * x * x;
    }
    return v;
}

/// Energy functional pieces for a bath orbital and the spin-up impurity orbital.
inline EnergyBreakdown mean_field_energies(const MeanFieldSystem& sys, const KineticOperator& t_bath, const KineticOperator& t_imp,
                                           const Field& bath, const Field& up) {
    const Grid& g = bath.grid();
    const auto v_b = harmonic_samples(g, sys.mass_b, sys.omega_b);
    const auto v_i = harmonic_samples(g, sys.mass_i, sys.omega_i);
    const double n = sys.n_bath;
    EnergyBreakdown e;
    e.kinetic_b = n * t_bath.expectation(bath);
    e.potential_b = n * expectation(bath, v_b);
    e.kinetic_i = t_imp.expectation(up);
    e.potential_i = expectation(up, v_i);
    const auto rb = bath.density();
    const auto ri = up.density();
    e.intra_bb = 0.5 * sys.g_bb * n * sys.bath_partners() * integrate_product(g, rb, rb);
    e.inter_bi = sys.g_bi * n * integrate_product(g, rb, ri);
    return e;
}

}  // namespace polaron
