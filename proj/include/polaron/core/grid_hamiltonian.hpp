#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/core/sine_transform.hpp"

namespace polaron {

/// Full spectrum of -(1/2m) d^2/dx^2 + V(x) on the interior nodes, with the
/// kinetic part taken exactly in the sine basis. Columns of `vectors` are
/// orthonormal in the plain Euclidean sense; divide by sqrt(dx) for
/// grid-normalized orbitals.
struct GridSpectrum {
    Grid grid;
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;

    Field orbital(std::size_t n) const {
        Field f(grid);
        const double s = 1.0 / std::sqrt(grid.dx());
        for (Eigen::Index j = 0; j < vectors.rows(); ++j) f[static_cast<std::size_t>(j) + 1] = s * vectors(j, static_cast<Eigen::Index>(n));
        return f;
    }

    /// Expansion coefficients <n|f> of a grid field.
    Eigen::VectorXcd project(const Field& f) const {
        require_same_grid(grid, f.grid(), "GridSpectrum::project");
        Eigen::VectorXcd v(vectors.rows());
        const double s = std::sqrt(grid.dx());
        for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = s * f[static_cast<std::size_t>(j) + 1];
        return vectors.transpose() * v;
    }

    Field reconstruct(const Eigen::VectorXcd& c) const {
        const Eigen::VectorXcd v = vectors * c;
        Field f(grid);
        const double s = 1.0 / std::sqrt(grid.dx());
        for (Eigen::Index j = 0; j < v.size(); ++j) f[static_cast<std::size_t>(j) + 1] = s * v[j];
        return f;
    }

    /// exp(-i H t) f
    Field evolve(const Eigen::VectorXcd& c0, double t) const {
        Eigen::VectorXcd c(c0.size());
        for (Eigen::Index n = 0; n < c.size(); ++n) c[n] = c0[n] * std::polar(1.0, -energies[n] * t);
        return reconstruct(c);
    }
};

inline Eigen::MatrixXd kinetic_matrix(const Grid& grid, double mass) {
    const KineticOperator t(grid, mass);
    const auto n = static_cast<Eigen::Index>(grid.interior_size());
    const double p = static_cast<double>(n + 1);
    Eigen::MatrixXd s(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            s(j, k) = std::sqrt(2.0 / p) * std::sin(std::numbers::pi * static_cast<double>((j + 1) * (k + 1)) / p);
    const auto eig = t.eigenvalues();
    Eigen::VectorXd d(n);
    for (Eigen::Index k = 0; k < n; ++k) d[k] = eig[static_cast<std::size_t>(k)];
    return s * d.asDiagonal() * s;
}

/// `potential` holds one value per grid node (walls included, ignored).
inline GridSpectrum diagonalize_grid_hamiltonian(const Grid& grid, double mass, std::span<const double> potential) {
    if (potential.size() != grid.size()) throw UsageError("diagonalize_grid_hamiltonian: potential size mismatch");
    Eigen::MatrixXd h = kinetic_matrix(grid, mass);
    for (Eigen::Index j = 0; j < h.rows(); ++j) h(j, j) += potential[static_cast<std::size_t>(j) + 1];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw SolverError("diagonalize_grid_hamiltonian: eigensolver failed");
    GridSpectrum out{grid, es.eigenvalues(), es.eigenvectors()};
    // Fix the sign convention: each vector's largest component positive.
    for (Eigen::Index n = 0; n < out.vectors.cols(); ++n) {
        Eigen::Index idx = 0;
        out.vectors.col(n).cwiseAbs().maxCoeff(&idx);
        if (out.vectors(idx, n) < 0.0) out.vectors.col(n) *= -1.0;
    }
    return out;
}

}  // namespace polaron
