#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "polaron/core/errors.hpp"

namespace polaron {

/// Uniformly sampled record: values[i] is taken at t0 + i * dt.
template <class T>
struct TimeSeries {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<T> values;
    std::string label;
    std::string units;

    std::size_t size() const { return values.size(); }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    double t_end() const { return values.empty() ? t0 : time(values.size() - 1); }
    double span() const { return t_end() - t0; }

    void validate(const char* where) const {
        if (values.size() < 2) throw DomainError(std::string(where) + ": time series needs at least two samples");
        if (!(dt > 0.0)) throw DomainError(std::string(where) + ": time series needs a positive sample spacing");
    }

    /// Index of the last sample at or before time t.
    std::size_t index_at(double t) const {
        if (t <= t0) return 0;
        const auto i = static_cast<std::size_t>((t - t0) / dt + 1e-9);
        return std::min(i, values.size() - 1);
    }
};

using RealSeries = TimeSeries<double>;
using ComplexSeries = TimeSeries<std::complex<double>>;

inline RealSeries magnitude(const ComplexSeries& s) {
    RealSeries out{s.t0, s.dt, {}, "|" + s.label + "|", s.units};
    out.values.reserve(s.size());
    for (const auto& v : s.values) out.values.push_back(std::abs(v));
    return out;
}

/// Complex argument of each sample, atan2(Im, Re).
inline RealSeries phase(const ComplexSeries& s) {
    RealSeries out{s.t0, s.dt, {}, "arg " + s.label, "rad"};
    out.values.reserve(s.size());
    for (const auto& v : s.values) out.values.push_back(std::arg(v));
    return out;
}

}  // namespace polaron
