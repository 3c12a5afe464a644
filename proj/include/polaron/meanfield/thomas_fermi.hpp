#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/meanfield/system.hpp"

namespace polaron {

/// Inverted-parabola bath profile rho(x) = (mu - m w^2 x^2 / 2) / g, clipped at zero.
struct ThomasFermiProfile {
    double mu = 0.0;
    double radius = 0.0;
    double g_bb = 0.0;
    double mass = 1.0;
    double omega = 1.0;

    double density(double x) const {
        const double v = mu - 0.5 * mass * omega * omega * x * x;
        return v > 0.0 ? v / g_bb : 0.0;
    }

    RealField sample(const Grid& grid) const {
        RealField r(grid);
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) r.values[i] = density(grid.x(i));
        return r;
    }

    /// Closed-form integral of the profile, (4/3) mu R / g.
    double particle_number() const { return 4.0 * mu * radius / (3.0 * g_bb); }
};

inline ThomasFermiProfile thomas_fermi(const MeanFieldSystem& sys) {
    if (!(sys.g_bb > 0.0)) throw DomainError("thomas_fermi: undefined for g_bb = 0");
    if (!(sys.n_bath >= 1.0)) throw DomainError("thomas_fermi: need at least one bath particle");
    ThomasFermiProfile tf;
    tf.g_bb = sys.g_bb;
    tf.mass = sys.mass_b;
    tf.omega = sys.omega_b;
    // N g = (4/3) mu R with R = sqrt(2 mu / (m w^2)).
    const double c = 3.0 * sys.n_bath * sys.g_bb * sys.omega_b * std::sqrt(sys.mass_b) / (4.0 * std::sqrt(2.0));
    tf.mu = std::pow(c, 2.0 / 3.0);
    tf.radius = std::sqrt(2.0 * tf.mu / (sys.mass_b * sys.omega_b * sys.omega_b));
    return tf;
}

/// Edge of a sampled cloud (x > 0): the steepest falling tangent on the
/// right flank, extended down to zero density. Ignores the kinetic tail,
/// which a fixed-fraction threshold would not.
inline double density_drop_radius(const RealField& rho) {
    const Grid& g = rho.grid;
    const std::size_t mid = g.size() / 2;
    double steepest = 0.0;
    std::size_t at = mid;
    for (std::size_t i = mid; i + 1 < g.size(); ++i) {
        const double d = rho.values[i] - rho.values[i + 1];
        if (d > steepest) {
            steepest = d;
            at = i;
        }
    }
    if (steepest <= 0.0) return g.x_max();
    const double mean = 0.5 * (rho.values[at] + rho.values[at + 1]);
    return std::min(g.x(at) + 0.5 * g.dx() + mean * g.dx() / steepest, g.x_max());
}

}  // namespace polaron
