#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

enum class Region { I, II, III, Borderline };

inline std::string to_string(Region r) {
    switch (r) {
        case Region::I: return "R_I";
        case Region::II: return "R_II";
        case Region::III: return "R_III";
        case Region::Borderline: return "borderline";
    }
    return "?";
}

inline int region_order(Region r) {
    switch (r) {
        case Region::I: return 1;
        case Region::II: return 2;
        case Region::III: return 3;
        default: return 0;
    }
}

struct RegionOptions {
    double window = 50.0;            // classify on [t0, t0 + window]
    double theta_min = 0.5;          // running minimum above this: candidate R_I
    double theta_final = 0.1;        // value at the window end below this: candidate R_III
    double damping_ratio = 0.7;      // late / early swing below this counts as damped
    double amplitude_floor = 0.02;   // early swings smaller than this are not oscillations
    double monotone_slack = 0.02;    // allowed rise between successive maxima
    double margin = 0.05;            // relative band around theta_min reported as borderline
};

struct RegionMetrics {
    double running_min = 1.0;
    double final_value = 1.0;
    double early_swing = 0.0;
    double late_swing = 0.0;
    double amplitude_ratio = 1.0;
    bool damped = false;
    bool monotone_envelope = true;
    double decay_rate = 0.0;      // exponential fit to the upper envelope
    double decay_exponent = std::numeric_limits<double>::quiet_NaN();  // p in exp(-(t/tau)^p)
    double oscillation_amplitude = 0.0;  // mean swing over the window
    double g_bi = 0.0;
    double g_bb = 0.0;
};

struct RegionResult {
    Region region = Region::I;
    std::vector<Region> candidates;
    RegionMetrics metrics;
};

namespace detail {

inline double swing(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    const auto [mn, mx] = std::minmax_element(v.begin() + static_cast<std::ptrdiff_t>(lo), v.begin() + static_cast<std::ptrdiff_t>(hi));
    return *mx - *mn;
}

inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double d = n * sxx - sx * sx;
    return d > 0.0 ? (n * sxy - sx * sy) / d : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Label a contrast trace |S(t)|. Everything is measured relative to the
/// first sample, so a uniformly rescaled trace gets the same label.
inline RegionResult classify_region(const RealSeries& contrast, double g_bi, double g_bb, const RegionOptions& opt = {}) {
    contrast.validate("classify_region");
    if (contrast.span() < opt.window - 1e-9 * opt.window)
        throw DomainError("classify_region: series must cover t in [0, " + std::to_string(opt.window) + "]");
    const double s0 = contrast.values.front();
    if (!(s0 > 0.0)) throw DomainError("classify_region: contrast must start positive");

    const std::size_t n = contrast.index_at(contrast.t0 + opt.window) + 1;
    std::vector<double> v(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = std::abs(contrast.values[i]) / s0;
        t[i] = contrast.time(i) - contrast.t0;
    }

    RegionResult out;
    RegionMetrics& m = out.metrics;
    m.g_bi = g_bi;
    m.g_bb = g_bb;
    m.running_min = *std::min_element(v.begin(), v.end());
    m.final_value = v.back();

    const std::size_t third = std::max<std::size_t>(n / 3, 2);
    m.early_swing = detail::swing(v, 0, third);
    m.late_swing = detail::swing(v, n - third, n);
    m.amplitude_ratio = m.early_swing > 0.0 ? m.late_swing / m.early_swing : 1.0;
    m.damped = m.early_swing > opt.amplitude_floor && m.amplitude_ratio < opt.damping_ratio;
    m.oscillation_amplitude = 0.5 * (m.early_swing + detail::swing(v, third, n - third) + m.late_swing) / 3.0;

    // Successive local maxima must not climb back up.
    double last_peak = v.front();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (v[i] >= v[i - 1] && v[i] > v[i + 1]) {
            if (v[i] > last_peak + opt.monotone_slack) m.monotone_envelope = false;
            last_peak = std::min(last_peak, v[i]);
        }
    }

    // Upper envelope max_{s >= t} |S(s)|: exponential rate and stretched-exponent fits.
    std::vector<double> env(n);
    env[n - 1] = v[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) env[i] = std::max(v[i], env[i + 1]);
    {
        std::vector<double> x, y, lx, ly;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(env[i] > 0.0)) continue;
            x.push_back(t[i]);
            y.push_back(std::log(std::min(env[i], 1.0)));
            if (t[i] > 0.0 && env[i] < 1.0 - 1e-12) {
                lx.push_back(std::log(t[i]));
                ly.push_back(std::log(-std::log(env[i])));
            }
        }
        if (x.size() >= 2) m.decay_rate = -detail::slope(x, y);
        if (lx.size() >= 2) m.decay_exponent = detail::slope(lx, ly);
    }

    const bool low_end = m.final_value < opt.theta_final;
    const bool high_min = m.running_min > opt.theta_min;
    if (low_end && m.monotone_envelope) {
        out.region = Region::III;
    } else if (low_end) {
        out.region = Region::Borderline;
        out.candidates = {Region::II, Region::III};
    } else if (std::abs(m.running_min - opt.theta_min) < opt.margin * opt.theta_min) {
        out.region = Region::Borderline;
        out.candidates = {Region::I, Region::II};
    } else if (high_min && !m.damped) {
        out.region = Region::I;
    } else {
        out.region = Region::II;
    }
    if (out.candidates.empty()) out.candidates = {out.region};
    return out;
}

}  // namespace polaron
