#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>

#include "polaron/core/errors.hpp"
#include "polaron/core/grid.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

inline void require_unit_weights(double alpha, double beta) {
    if (alpha < 0.0 || beta < 0.0) throw DomainError("spin weights must be non-negative");
    if (std::abs(alpha * alpha + beta * beta - 1.0) > 1e-10) {
        throw DomainError("spin weights violate alpha^2 + beta^2 = 1");
    }
}

/// |<S>| for an arbitrary spinor split, from the equal-weight contrast:
/// sqrt(4 a^2 b^2 |S|^2 + (a^2 - b^2)^2).
inline double reweighted_contrast(double abs_s, double alpha, double beta) {
    const double a2 = alpha * alpha, b2 = beta * beta;
    return std::sqrt(4.0 * a2 * b2 * abs_s * abs_s + (a2 - b2) * (a2 - b2));
}

inline RealSeries general_weights_contrast(const ComplexSeries& s, double alpha, double beta) {
    require_unit_weights(alpha, beta);
    RealSeries out{s.t0, s.dt, {}, "|<S>|_ab", ""};
    out.values.reserve(s.size());
    for (const auto& v : s.values) out.values.push_back(reweighted_contrast(std::abs(v), alpha, beta));
    return out;
}

/// Pauli expectations of alpha|A>|up> + beta|B>|down>, computed directly
/// from the branch overlap <A|B>.
struct SpinExpectation {
    double sx = 0.0;
    double sy = 0.0;
    double sz = 0.0;
    double magnitude() const { return std::sqrt(sx * sx + sy * sy + sz * sz); }
};

inline SpinExpectation spin_expectation(std::complex<double> alpha, std::complex<double> beta, std::complex<double> overlap_up_down) {
    const std::complex<double> coherence = std::conj(alpha) * beta * overlap_up_down;
    return {2.0 * coherence.real(), 2.0 * coherence.imag(), std::norm(alpha) - std::norm(beta)};
}

/// Normalized density overlap [int a b]^2 / (int a^2 int b^2), in [0, 1].
inline double miscibility_overlap(const Grid& grid, std::span<const double> rho_a, std::span<const double> rho_b) {
    for (double v : rho_a)
        if (v < 0.0) throw DomainError("miscibility_overlap: negative density");
    for (double v : rho_b)
        if (v < 0.0) throw DomainError("miscibility_overlap: negative density");
    const double ab = integrate_product(grid, rho_a, rho_b);
    const double aa = integrate_product(grid, rho_a, rho_a);
    const double bb = integrate_product(grid, rho_b, rho_b);
    if (!(aa > 0.0) || !(bb > 0.0)) throw DomainError("miscibility_overlap: zero-norm density");
    return std::clamp(ab * ab / (aa * bb), 0.0, 1.0);
}

}  // namespace polaron
