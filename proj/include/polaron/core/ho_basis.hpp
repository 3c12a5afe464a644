#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"

namespace polaron {

/// Values phi_0(x) .. phi_{n-1}(x) of the unit-frequency, unit-mass
/// oscillator eigenfunctions. Uses the normalized three-term recurrence on
/// Hermite functions, which stays finite where H_n(x) alone would overflow.
inline std::vector<double> hermite_functions(std::size_t n_modes, double x) {
    std::vector<double> phi(n_modes, 0.0);
    if (n_modes == 0) return phi;
    phi[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
    if (n_modes > 1) phi[1] = std::sqrt(2.0) * x * phi[0];
    for (std::size_t n = 2; n < n_modes; ++n) {
        const double dn = static_cast<double>(n);
        phi[n] = std::sqrt(2.0 / dn) * x * phi[n - 1] - std::sqrt((dn - 1.0) / dn) * phi[n - 2];
    }
    return phi;
}

/// Fixed harmonic-oscillator mode basis sampled on a hard-wall grid.
class HOBasis {
public:
    static constexpr std::size_t kMaxModes = 40;
    static constexpr double kWallTolerance = 1e-8;

    static HOBasis build(const Grid& grid, std::size_t n_modes) {
        if (n_modes == 0 || n_modes > kMaxModes) {
            throw ConfigError("ho_mode_basis: n_modes must be in [1, " + std::to_string(kMaxModes) + "]");
        }
        const double edge = std::abs(hermite_functions(n_modes, grid.x_max())[n_modes - 1]);
        if (edge >= kWallTolerance) {
            throw ConfigError("ho_mode_basis: mode " + std::to_string(n_modes - 1) + " has amplitude " +
                              std::to_string(edge) + " at the wall; need x_max >= " +
                              std::to_string(required_extent(n_modes)));
        }
        HOBasis b(grid);
        b.modes_.assign(n_modes, std::vector<double>(grid.size(), 0.0));
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const auto phi = hermite_functions(n_modes, grid.x(i));
            for (std::size_t n = 0; n < n_modes; ++n) b.modes_[n][i] = phi[n];
        }
        return b;
    }

    /// Smallest half-width at which mode n_modes-1 has decayed below the wall tolerance.
    static double required_extent(std::size_t n_modes) {
        double x = std::sqrt(2.0 * static_cast<double>(n_modes) + 1.0);
        while (std::abs(hermite_functions(n_modes, x)[n_modes - 1]) >= kWallTolerance) x += 0.05;
        return x;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return modes_.size(); }
    const std::vector<double>& mode(std::size_t n) const { return modes_[n]; }
    double energy(std::size_t n) const { return static_cast<double>(n) + 0.5; }
    std::vector<double> energies() const {
        std::vector<double> e(size());
        for (std::size_t n = 0; n < size(); ++n) e[n] = energy(n);
        return e;
    }

    Field field(std::size_t n) const {
        Field f(grid_);
        for (std::size_t i = 0; i < grid_.size(); ++i) f[i] = modes_[n][i];
        return f;
    }

    /// Coefficients <phi_n|f>.
    std::vector<Complex> project(const Field& f) const {
        require_same_grid(grid_, f.grid(), "HOBasis::project");
        std::vector<Complex> c(size());
        for (std::size_t n = 0; n < size(); ++n) {
            Complex s{};
            for (std::size_t i = 0; i < grid_.size(); ++i) s += modes_[n][i] * f[i];
            c[n] = s * grid_.dx();
        }
        return c;
    }

    Field reconstruct(std::span<const Complex> coeffs) const {
        Field f(grid_);
        for (std::size_t n = 0; n < coeffs.size() && n < size(); ++n) {
            for (std::size_t i = 0; i < grid_.size(); ++i) f[i] += coeffs[n] * modes_[n][i];
        }
        return f;
    }

private:
    explicit HOBasis(const Grid& g) : grid_(g) {}
    Grid grid_;
    std::vector<std::vector<double>> modes_;
};

inline HOBasis ho_mode_basis(const Grid& grid, std::size_t n_modes) { return HOBasis::build(grid, n_modes); }

}  // namespace polaron
