#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"

namespace polaron {

using Complex = std::complex<double>;

/// Uniform node-centred grid on [-x_max, x_max] including both endpoints.
/// Fields defined on it vanish at (and beyond) the endpoints, which is the
/// hard-wall convention of a sine-DVR: only the n_points-2 interior nodes
/// carry degrees of freedom.
class Grid {
public:
    static constexpr std::size_t kMinPoints = 16;
    static constexpr std::size_t kDefaultPoints = 450;
    static constexpr double kDefaultExtent = 40.0;

    static Grid build(std::size_t n_points, double x_max) {
        if (n_points < kMinPoints) {
            throw ConfigError("grid: n_points must be >= " + std::to_string(kMinPoints) + ", got " +
                              std::to_string(n_points));
        }
        if (!(x_max > 0.0) || !std::isfinite(x_max)) {
            throw ConfigError("grid: x_max must be a positive finite length");
        }
        return Grid(n_points, x_max);
    }

    std::size_t size() const { return n_; }
    std::size_t interior_size() const { return n_ - 2; }
    double x_max() const { return x_max_; }
    double dx() const { return 2.0 * x_max_ / static_cast<double>(n_ - 1); }
    double length() const { return 2.0 * x_max_; }

    /// Exactly antisymmetric in floating point: x(n-1-i) == -x(i).
    double x(std::size_t i) const {
        const auto twice = static_cast<double>(2 * static_cast<long long>(i) - static_cast<long long>(n_ - 1));
        return twice * x_max_ / static_cast<double>(n_ - 1);
    }

    std::vector<double> points() const {
        std::vector<double> xs(n_);
        for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
        return xs;
    }

    bool contains_origin() const { return n_ % 2 == 1; }
    bool is_default() const { return n_ == kDefaultPoints && x_max_ == kDefaultExtent; }

    /// Index of the node closest to position `pos` (clamped to the grid).
    std::size_t nearest_index(double pos) const {
        const double s = (pos + x_max_) / dx();
        if (s <= 0.0) return 0;
        const auto i = static_cast<std::size_t>(std::lround(s));
        return i >= n_ ? n_ - 1 : i;
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.n_ == b.n_ && a.x_max_ == b.x_max_; }

private:
    Grid(std::size_t n, double x_max) : n_(n), x_max_(x_max) {}

    std::size_t n_;
    double x_max_;
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b)) throw UsageError(std::string(where) + ": fields live on different grids");
}

/// Complex amplitude sampled on a grid. Endpoint samples are kept at zero.
class Field {
public:
    explicit Field(const Grid& grid) : grid_(grid), values_(grid.size(), Complex{}) {}
    Field(const Grid& grid, std::vector<Complex> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw UsageError("Field: sample count does not match grid");
        enforce_walls();
    }

    template <class F>
    static Field from_function(const Grid& grid, F&& f) {
        Field out(grid);
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) out.values_[i] = Complex(f(grid.x(i)));
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    Complex& operator[](std::size_t i) { return values_[i]; }
    const Complex& operator[](std::size_t i) const { return values_[i]; }
    std::span<Complex> values() { return values_; }
    std::span<const Complex> values() const { return values_; }

    void enforce_walls() {
        values_.front() = Complex{};
        values_.back() = Complex{};
    }

    double norm2() const {
        double s = 0.0;
        for (const auto& v : values_) s += std::norm(v);
        return s * grid_.dx();
    }

    Field& normalize() {
        const double n = std::sqrt(norm2());
        if (!(n > 0.0)) throw DomainError("Field::normalize: zero field");
        for (auto& v : values_) v /= n;
        return *this;
    }

    Field& operator*=(Complex s) {
        for (auto& v : values_) v *= s;
        return *this;
    }
    Field& operator+=(const Field& o) {
        require_same_grid(grid_, o.grid_, "Field::operator+=");
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    friend Field operator*(Complex s, Field f) { return f *= s; }
    friend Field operator+(Field a, const Field& b) { return a += b; }

    /// |psi|^2 scaled by `particles`, i.e. the one-body density.
    std::vector<double> density(double particles = 1.0) const {
        std::vector<double> rho(values_.size());
        for (std::size_t i = 0; i < values_.size(); ++i) rho[i] = particles * std::norm(values_[i]);
        return rho;
    }

private:
    Grid grid_;
    std::vector<Complex> values_;
};

/// Real samples on a grid: densities and potentials.
struct RealField {
    Grid grid;
    std::vector<double> values;

    RealField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw UsageError("RealField: sample count does not match grid");
    }
    explicit RealField(const Grid& g) : grid(g), values(g.size(), 0.0) {}

    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.dx();
    }
};

/// <f|g> with Riemann weights; the endpoint samples are zero so this equals
/// the trapezoid rule.
inline Complex inner(const Field& f, const Field& g) {
    require_same_grid(f.grid(), g.grid(), "inner");
    Complex s{};
    for (std::size_t i = 0; i < f.size(); ++i) s += std::conj(f[i]) * g[i];
    return s * f.grid().dx();
}

/// Integral of a pointwise product of two real sample vectors.
inline double integrate_product(const Grid& grid, std::span<const double> a, std::span<const double> b) {
    if (a.size() != grid.size() || b.size() != grid.size()) throw UsageError("integrate_product: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s * grid.dx();
}

/// <f| w(x) |f> for a real weight sampled on the grid.
inline double expectation(const Field& f, std::span<const double> w) {
    if (w.size() != f.size()) throw UsageError("expectation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += std::norm(f[i]) * w[i];
    return s * f.grid().dx();
}

}  // namespace polaron
