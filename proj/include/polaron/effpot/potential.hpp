#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/meanfield/thomas_fermi.hpp"

namespace polaron {

enum class DensitySource { ThomasFermi, RelaxedMeanField, External };

inline const char* to_string(DensitySource s) {
    switch (s) {
        case DensitySource::ThomasFermi: return "tf";
        case DensitySource::RelaxedMeanField: return "relaxed";
        case DensitySource::External: return "file";
    }
    return "?";
}

/// Trap plus g_BI times a frozen bath density, sampled on every node.
struct EffectivePotential {
    Grid grid;
    std::vector<double> values;
    DensitySource source = DensitySource::ThomasFermi;
    double g_bi = 0.0;
    double mass = 1.0;
    double omega = 1.0;
    double bath_particles = 0.0;  // integral of the density used
    double curvature_at_origin = 0.0;
    std::vector<double> well_minima;  // local minima positions, ascending

    bool double_well() const { return curvature_at_origin < 0.0; }
    double trap(double x) const { return 0.5 * mass * omega * omega * x * x; }
};

namespace detail {

// Least-squares a + b x^2 through the nodes nearest the origin.
inline double curvature_near_origin(const Grid& g, const std::vector<double>& v) {
    std::vector<double> rows_x, rows_y;
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        if (std::abs(g.x(i)) <= 3.01 * g.dx()) {
            rows_x.push_back(g.x(i));
            rows_y.push_back(v[i]);
        }
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows_x.size()), 2);
    Eigen::VectorXd y(a.rows());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        a(r, 0) = 1.0;
        a(r, 1) = rows_x[static_cast<std::size_t>(r)] * rows_x[static_cast<std::size_t>(r)];
        y[r] = rows_y[static_cast<std::size_t>(r)];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    return 2.0 * c[1];
}

inline std::vector<double> local_minima(const Grid& g, const std::vector<double>& v) {
    std::vector<double> out;
    for (std::size_t i = 2; i + 2 < g.size(); ++i) {
        if (v[i] < v[i - 1] && v[i] <= v[i + 1]) {
            const double den = v[i - 1] - 2.0 * v[i] + v[i + 1];
            const double shift = den > 0.0 ? 0.5 * (v[i - 1] - v[i + 1]) / den : 0.0;
            out.push_back(g.x(i) + shift * g.dx());
        }
    }
    return out;
}

inline EffectivePotential finish_potential(EffectivePotential p) {
    p.curvature_at_origin = curvature_near_origin(p.grid, p.values);
    p.well_minima = local_minima(p.grid, p.values);
    return p;
}

}  // namespace detail

inline EffectivePotential build_effective_potential(const RealField& density, double g_bi, DensitySource source, double mass = 1.0,
                                                    double omega = 1.0) {
    if (!(g_bi >= 0.0)) throw ConfigError("build_effective_potential: g_bi must be >= 0");
    if (!(mass > 0.0) || !(omega > 0.0)) throw ConfigError("build_effective_potential: mass and omega must be positive");
    EffectivePotential p{density.grid, std::vector<double>(density.grid.size()), source, g_bi, mass, omega};
    for (std::size_t i = 0; i < density.values.size(); ++i) {
        const double r = density.values[i];
        if (!std::isfinite(r) || r < -1e-10) {
            std::ostringstream msg;
            msg << "build_effective_potential: invalid density " << r << " at x = " << density.grid.x(i);
            throw ConfigError(msg.str());
        }
        p.values[i] = p.trap(density.grid.x(i)) + g_bi * std::max(r, 0.0);
    }
    p.bath_particles = density.integral();
    return detail::finish_potential(std::move(p));
}

inline EffectivePotential build_effective_potential(const Grid& grid, const ThomasFermiProfile& tf, double g_bi, double mass = 1.0,
                                                    double omega = 1.0) {
    auto p = build_effective_potential(tf.sample(grid), g_bi, DensitySource::ThomasFermi, mass, omega);
    p.bath_particles = tf.particle_number();
    return p;
}

/// Two-column "x rho" text (blank lines and '#' comments skipped), linearly
/// interpolated onto the grid and zero outside the sampled range.
inline RealField read_density_file(const std::string& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("read_density_file: cannot open '" + path + "'");
    std::vector<std::pair<double, double>> pts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double x = 0.0, r = 0.0;
        if (!(ls >> x)) continue;
        std::string extra;
        if (!(ls >> r) || (ls >> extra)) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected two columns 'x rho'");
        }
        if (!pts.empty() && !(x > pts.back().first)) throw ConfigError(path + ":" + std::to_string(line_no) + ": x must increase");
        pts.emplace_back(x, r);
    }
    if (pts.size() < 2) throw ConfigError("read_density_file: '" + path + "' holds fewer than two samples");

    RealField out(grid);
    std::size_t k = 0;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        const double x = grid.x(i);
        if (x < pts.front().first || x > pts.back().first) continue;
        while (k + 2 < pts.size() && pts[k + 1].first < x) ++k;
        const auto [x0, r0] = pts[k];
        const auto [x1, r1] = pts[k + 1];
        out.values[i] = r0 + (r1 - r0) * (x - x0) / (x1 - x0);
    }
    return out;
}

}  // namespace polaron
