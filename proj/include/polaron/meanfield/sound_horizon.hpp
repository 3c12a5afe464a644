#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/meanfield/system.hpp"

namespace polaron {

struct SoundHorizon {
    double time = 0.0;            // T = int_0^{x_b} dx / c(x)
    double c0 = 0.0;              // c at the trap centre
    double density_floor = 0.0;   // densities below this were clipped to it
    double cutoff = 0.0;          // integration stopped where rho < cutoff (0: no cutoff)
    double x_end = 0.0;           // upper limit actually used
    std::size_t clipped_samples = 0;
};

struct SoundHorizonOptions {
    // The horizon is dominated by the dilute tail beyond the Thomas-Fermi
    // edge, so by default nothing is cut away; a relative floor only keeps
    // 1/c finite.
    double cutoff_fraction = 0.0;
    double floor_fraction = 1e-30;
    std::size_t subdivisions = 32;
};

/// c(x) = sqrt(g_BB rho(x) / m_B); rho is interpolated log-linearly between
/// grid nodes and the integral uses composite Simpson on each cell.
inline SoundHorizon sound_horizon(const MeanFieldSystem& sys, const RealField& rho, double x_b, const SoundHorizonOptions& opt = {}) {
    const Grid& g = rho.grid;
    if (!(x_b > 0.0)) throw DomainError("sound_horizon: x_b must be positive");
    if (!(x_b < g.x_max())) throw DomainError("sound_horizon: x_b lies beyond the grid");
    if (!(sys.g_bb > 0.0)) throw DomainError("sound_horizon: g_bb must be positive");
    for (double v : rho.values)
        if (v < 0.0) throw DomainError("sound_horizon: negative density");

    auto node_density = [&](std::size_t i) { return rho.values[i]; };
    // density at arbitrary x via the bracketing nodes
    const double dx = g.dx();
    auto locate = [&](double x) {
        auto i = static_cast<std::size_t>(std::floor((x + g.x_max()) / dx));
        return std::min(i, g.size() - 2);
    };
    const double rho0 = [&] {
        const std::size_t i = locate(0.0);
        const double f = (0.0 - g.x(i)) / dx;
        return (1.0 - f) * node_density(i) + f * node_density(i + 1);
    }();
    if (!(rho0 > 0.0)) throw DomainError("sound_horizon: zero density at the trap centre");

    SoundHorizon out;
    out.density_floor = opt.floor_fraction * rho0;
    out.cutoff = opt.cutoff_fraction * rho0;
    out.c0 = std::sqrt(sys.g_bb * rho0 / sys.mass_b);
    auto density = [&](double x) {
        const std::size_t i = locate(x);
        const double f = (x - g.x(i)) / dx;
        const double a = std::max(node_density(i), out.density_floor);
        const double b = std::max(node_density(i + 1), out.density_floor);
        return std::exp((1.0 - f) * std::log(a) + f * std::log(b));
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        if (x >= 0.0 && x <= x_b && rho.values[i] < out.density_floor) ++out.clipped_samples;
    }

    auto inv_c = [&](double x) { return 1.0 / std::sqrt(sys.g_bb * density(x) / sys.mass_b); };
    const std::size_t cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(x_b / dx)));
    const std::size_t m = 2 * std::max<std::size_t>(1, opt.subdivisions / 2);
    const double h = x_b / static_cast<double>(cells * m);
    double total = 0.0;
    out.x_end = x_b;
    for (std::size_t c = 0; c < cells; ++c) {
        const double a = static_cast<double>(c * m) * h;
        if (out.cutoff > 0.0 && density(a + static_cast<double>(m) * h) < out.cutoff) {
            out.x_end = a;
            break;
        }
        double s = inv_c(a) + inv_c(a + static_cast<double>(m) * h);
        for (std::size_t k = 1; k < m; ++k) s += (k % 2 ? 4.0 : 2.0) * inv_c(a + static_cast<double>(k) * h);
        total += s * h / 3.0;
    }
    out.time = total;
    return out;
}

}  // namespace polaron
