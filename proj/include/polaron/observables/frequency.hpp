#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/least_squares.hpp"
#include "polaron/observables/spectral.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

struct FrequencyEstimate {
    double omega = 0.0;
    double magnitude = 0.0;     // windowed spectral magnitude at the peak
    double noise_floor = 0.0;   // median magnitude over the band
    std::string method;         // "fft" or "damped-cosine"
};

struct FrequencyOptions {
    std::size_t pad_factor = 16;
    double merge_ratio = 0.3;       // secondary peak height that counts as merging
    double merge_distance = 3.0;    // in units of 2 pi / T
    double min_signal_to_noise = 10.0;
};

namespace detail {
inline double damped_cosine_fit(const RealSeries& s, double omega0, double amplitude0, double mean0) {
    const int n = static_cast<int>(s.size());
    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        for (int i = 0; i < n; ++i) {
            const double t = s.time(static_cast<std::size_t>(i)) - s.t0;
            r[i] = p[0] * std::exp(-p[1] * t) * std::cos(p[2] * t + p[3]) + p[4] - s.values[static_cast<std::size_t>(i)];
        }
    };
    Eigen::VectorXd x0(5);
    x0 << amplitude0, 0.0, omega0, 0.0, mean0;
    const auto fit = least_squares(residual, x0, n);
    return std::abs(fit.params[2]);
}
}  // namespace detail

/// Dominant oscillation frequency (angular) of a real signal: Hann-windowed
/// FFT peak refined by a Gaussian (log-parabola) interpolation, falling back to
/// a damped-cosine fit when a second peak sits inside the main lobe.
inline FrequencyEstimate dominant_frequency(const RealSeries& s, const FrequencyOptions& opt = {}) {
    s.validate("dominant_frequency");
    const std::size_t n = s.size();
    if (n < 8) throw AnalysisError("dominant_frequency: need at least 8 samples");
    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(n);
    double spread = 0.0;
    for (double v : s.values) spread = std::max(spread, std::abs(v - mean));
    if (!(spread > 1e-10 * std::max(1.0, std::abs(mean)))) {
        throw AnalysisError("dominant_frequency: no oscillatory signal in '" + s.label + "'");
    }

    const std::size_t p = n * opt.pad_factor;
    std::vector<std::complex<double>> buf(p);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
        buf[i] = (s.values[i] - mean) * w;
    }
    const auto spec = detail::backward_dft(std::move(buf));
    const std::size_t half = p / 2;
    std::vector<double> mag(half + 1);
    for (std::size_t k = 0; k <= half; ++k) mag[k] = std::abs(spec[k]);
    const double d_omega = 2.0 * std::numbers::pi / (static_cast<double>(p) * s.dt);

    // Skip the main lobe of the removed mean.
    const std::size_t k_min = 2 * opt.pad_factor;
    if (k_min + 2 >= half) throw AnalysisError("dominant_frequency: record too short");
    std::size_t k_best = k_min;
    for (std::size_t k = k_min; k < half; ++k)
        if (mag[k] > mag[k_best]) k_best = k;

    std::vector<double> sorted(mag.begin() + static_cast<long>(k_min), mag.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
    FrequencyEstimate est;
    est.noise_floor = sorted[sorted.size() / 2];
    est.magnitude = mag[k_best];
    if (!(est.magnitude > opt.min_signal_to_noise * est.noise_floor)) {
        throw AnalysisError("dominant_frequency: peak does not rise above the noise floor in '" + s.label + "'");
    }

    double delta = 0.0;
    if (k_best > 0 && k_best < half && mag[k_best - 1] > 0.0 && mag[k_best + 1] > 0.0) {
        const double l = std::log(mag[k_best - 1]), c = std::log(mag[k_best]), r = std::log(mag[k_best + 1]);
        const double denom = l - 2.0 * c + r;
        if (denom != 0.0) delta = 0.5 * (l - r) / denom;
    }
    est.omega = (static_cast<double>(k_best) + delta) * d_omega;
    est.method = "fft";

    // Look for a secondary maximum close enough to merge with the main one.
    const double record_resolution = 2.0 * std::numbers::pi / s.span();
    for (std::size_t k = k_min + 1; k < half; ++k) {
        if (k == k_best) continue;
        const bool local_max = mag[k] > mag[k - 1] && mag[k] >= mag[k + 1];
        if (!local_max) continue;
        const double dist = std::abs(static_cast<double>(k) - static_cast<double>(k_best)) * d_omega;
        if (mag[k] > opt.merge_ratio * est.magnitude && dist < opt.merge_distance * record_resolution) {
            est.omega = detail::damped_cosine_fit(s, est.omega, spread, mean);
            est.method = "damped-cosine";
            break;
        }
    }
    return est;
}

}  // namespace polaron
