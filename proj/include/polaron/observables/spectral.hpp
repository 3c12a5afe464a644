#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"
#include "polaron/core/sine_transform.hpp"
#include "polaron/observables/time_series.hpp"

namespace polaron {

enum class WindowKind { None, Hann, Exponential };

struct Window {
    WindowKind kind = WindowKind::None;
    double rate = 0.0;  // only for Exponential

    static Window none() { return {}; }
    static Window hann() { return {WindowKind::Hann, 0.0}; }
    static Window exponential(double r) { return {WindowKind::Exponential, r}; }

    /// One-sided taper: equals 1 at t = 0 so the sum rule is untouched.
    double operator()(double t, double t_max) const {
        switch (kind) {
            case WindowKind::Hann:
                return 0.5 * (1.0 + std::cos(std::numbers::pi * t / t_max));
            case WindowKind::Exponential:
                return std::exp(-rate * t);
            case WindowKind::None:
                break;
        }
        return 1.0;
    }

    std::string tag() const {
        switch (kind) {
            case WindowKind::Hann:
                return "hann";
            case WindowKind::Exponential:
                return "exp(" + std::to_string(rate) + ")";
            case WindowKind::None:
                break;
        }
        return "none";
    }
};

struct SpectralFunction {
    std::vector<double> omegas;  // ascending
    std::vector<double> values;
    std::string window;
    double t_max_used = 0.0;
    double resolution = 0.0;  // 2 pi / t_max_used
    double d_omega = 0.0;     // sample spacing after zero padding

    /// Riemann sum over the full computed band.
    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * d_omega;
    }
};

namespace detail {
/// Unnormalized DFT with the e^{+i...} sign, planned and executed under the
/// planner lock because the plan is single-use.
inline std::vector<std::complex<double>> backward_dft(std::vector<std::complex<double>> in) {
    std::vector<std::complex<double>> out(in.size());
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(in.size()), pin, pout, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (plan == nullptr) throw SolverError("fftw: could not create dft plan");
    fftw_execute(plan);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}
}  // namespace detail

/// A(w) = (1/pi) Re int_0^T dt e^{i w t} w(t) S(t), trapezoid in time,
/// zero padded by pad_factor. S(0) must be 1.
inline SpectralFunction spectral_function(const ComplexSeries& s, Window window = Window::none(), std::size_t pad_factor = 8) {
    s.validate("spectral_function");
    if (std::abs(s.values.front() - std::complex<double>(1.0, 0.0)) > 1e-6) {
        throw AnalysisError("spectral_function: series must start with S(0) = 1");
    }
    if (pad_factor == 0) throw DomainError("spectral_function: pad_factor must be >= 1");
    const std::size_t n = s.size();
    const std::size_t p = n * pad_factor;
    const double t_max = s.span();

    std::vector<std::complex<double>> buf(p);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = s.time(i) - s.t0;
        double w = window(t, t_max);
        if (i == 0 || i + 1 == n) w *= 0.5;
        buf[i] = s.values[i] * w;
    }
    const auto out = detail::backward_dft(std::move(buf));

    SpectralFunction spec;
    spec.window = window.tag();
    spec.t_max_used = t_max;
    spec.resolution = 2.0 * std::numbers::pi / t_max;
    spec.d_omega = 2.0 * std::numbers::pi / (static_cast<double>(p) * s.dt);
    spec.omegas.reserve(p);
    spec.values.reserve(p);
    // Bins [ceil(p/2), p) are the negative frequencies; emit them first.
    const std::size_t first_negative = (p + 1) / 2;
    auto emit = [&](std::size_t k, long long signed_k) {
        spec.omegas.push_back(static_cast<double>(signed_k) * spec.d_omega);
        spec.values.push_back(s.dt * out[k].real() / std::numbers::pi);
    };
    for (std::size_t k = first_negative; k < p; ++k) emit(k, static_cast<long long>(k) - static_cast<long long>(p));
    for (std::size_t k = 0; k < first_negative; ++k) emit(k, static_cast<long long>(k));
    return spec;
}

struct Peak {
    double omega = 0.0;
    double height = 0.0;
    double width = 0.0;  // full width at half maximum
};

/// Local maxima above threshold_frac * max(A), positions refined by a
/// three-point parabola; sorted by frequency.
inline std::vector<Peak> find_peaks(const SpectralFunction& spec, double threshold_frac) {
    if (!(threshold_frac > 0.0 && threshold_frac < 1.0)) throw DomainError("find_peaks: threshold_frac must lie in (0, 1)");
    const auto& a = spec.values;
    std::vector<Peak> peaks;
    if (a.size() < 3) return peaks;
    const double top = *std::max_element(a.begin(), a.end());
    if (!(top > 0.0)) return peaks;
    const double cut = threshold_frac * top;
    for (std::size_t k = 1; k + 1 < a.size(); ++k) {
        if (!(a[k] > a[k - 1] && a[k] >= a[k + 1] && a[k] >= cut)) continue;
        const double l = a[k - 1], c = a[k], r = a[k + 1];
        const double denom = l - 2.0 * c + r;
        const double delta = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
        Peak pk;
        pk.omega = spec.omegas[k] + delta * spec.d_omega;
        pk.height = c - 0.25 * (l - r) * delta;

        const double half = 0.5 * pk.height;
        std::size_t lo = k;
        while (lo > 0 && a[lo] > half && a[lo - 1] <= a[lo]) --lo;
        std::size_t hi = k;
        while (hi + 1 < a.size() && a[hi] > half && a[hi + 1] <= a[hi]) ++hi;
        auto cross = [&](std::size_t inside, std::size_t outside) {
            const double ya = a[inside], yb = a[outside];
            if (ya == yb) return spec.omegas[outside];
            const double f = (ya - half) / (ya - yb);
            return spec.omegas[inside] + f * (spec.omegas[outside] - spec.omegas[inside]);
        };
        const double w_lo = lo < k ? cross(lo + 1, lo) : spec.omegas[k];
        const double w_hi = hi > k ? cross(hi - 1, hi) : spec.omegas[k];
        pk.width = w_hi - w_lo;
        peaks.push_back(pk);
    }
    return peaks;
}

/// Same peaks, tallest first.
inline std::vector<Peak> peaks_by_height(std::vector<Peak> peaks) {
    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.height > b.height; });
    return peaks;
}

}  // namespace polaron
