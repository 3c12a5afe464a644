#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid_hamiltonian.hpp"
#include "polaron/effpot/potential.hpp"

namespace polaron {

/// Lowest eigenpairs of -(1/2m) d^2/dx^2 + V_eff between the walls.
struct PotentialSpectrum {
    GridSpectrum eig;  // only the first n_eig columns are kept
    std::size_t n_eig = 0;
    double mass = 1.0;
    double omega = 1.0;  // trap part of the potential
    double box_threshold = 0.0;
    std::vector<bool> box_contaminated;

    double energy(std::size_t n) const { return eig.energies[static_cast<Eigen::Index>(n)]; }
    Field state(std::size_t n) const { return eig.orbital(n); }
    bool any_contaminated() const { return std::find(box_contaminated.begin(), box_contaminated.end(), true) != box_contaminated.end(); }
};

inline constexpr std::size_t max_effpot_states = 60;

inline PotentialSpectrum eigensolve(const EffectivePotential& pot, std::size_t n_eig = 40) {
    if (n_eig == 0 || n_eig > max_effpot_states) {
        throw ConfigError("eigensolve: n_eig must be in [1, " + std::to_string(max_effpot_states) + "]");
    }
    if (n_eig > pot.grid.interior_size()) throw ConfigError("eigensolve: n_eig exceeds the number of grid points");
    auto full = diagonalize_grid_hamiltonian(pot.grid, pot.mass, pot.values);
    const auto keep = static_cast<Eigen::Index>(n_eig);
    PotentialSpectrum out{GridSpectrum{pot.grid, full.energies.head(keep), full.vectors.leftCols(keep)}, n_eig, pot.mass, pot.omega};

    // States above the potential near the walls feel the box, not V_eff.
    const double xw = 0.9 * pot.grid.x_max();
    double v_left = 0.0, v_right = 0.0;
    {
        const auto interp = [&](double x) {
            const double u = (x - pot.grid.x(0)) / pot.grid.dx();
            const auto i = std::min(static_cast<std::size_t>(u), pot.grid.size() - 2);
            const double f = u - static_cast<double>(i);
            return (1.0 - f) * pot.values[i] + f * pot.values[i + 1];
        };
        v_left = interp(-xw);
        v_right = interp(xw);
    }
    out.box_threshold = std::min(v_left, v_right);
    out.box_contaminated.resize(n_eig);
    for (std::size_t n = 0; n < n_eig; ++n) out.box_contaminated[n] = out.energy(n) > out.box_threshold;
    return out;
}

/// Ground state of the bare harmonic trap on the grid.
inline Field bare_trap_ground_state(const Grid& grid, double mass = 1.0, double omega = 1.0) {
    EffectivePotential p{grid, std::vector<double>(grid.size()), DensitySource::ThomasFermi, 0.0, mass, omega};
    for (std::size_t i = 0; i < grid.size(); ++i) p.values[i] = p.trap(grid.x(i));
    return eigensolve(p, 1).state(0);
}

}  // namespace polaron
