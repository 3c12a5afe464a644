#pragma once

#include <cmath>

#include "polaron/core/errors.hpp"

namespace polaron {

/// Ground energy of two equal-mass particles in a unit harmonic trap with
/// contact coupling g >= 0. The relative motion (length sqrt 2) obeys
///   g / sqrt(2) = -2 Gamma(3/4 - E/2) / Gamma(1/4 - E/2),  E in [1/2, 3/2),
/// and the centre of mass adds 1/2.
inline double two_body_contact_energy(double g) {
    if (!(g >= 0.0)) throw DomainError("two_body_contact_energy: g must be >= 0");
    if (g == 0.0) return 1.0;
    const double target = g / std::sqrt(2.0);
    auto f = [&](double e) { return -2.0 * std::tgamma(0.75 - 0.5 * e) / std::tgamma(0.25 - 0.5 * e) - target; };
    double lo = 0.5 + 1e-15, hi = 1.5 - 1e-15;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi) + 0.5;
}

}  // namespace polaron
