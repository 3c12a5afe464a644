#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>

#include "polaron/core/grid.hpp"
#include "polaron/observables/contrast.hpp"
#include "polaron/observables/energy.hpp"
#include "polaron/observables/frequency.hpp"
#include "polaron/observables/region.hpp"
#include "polaron/observables/spectral.hpp"
#include "polaron/observables/time_series.hpp"

using namespace polaron;

namespace {

ComplexSeries tones(std::initializer_list<std::pair<double, double>> modes, double t_max, double dt) {
    ComplexSeries s{0.0, dt, {}, "S", ""};
    const auto n = static_cast<std::size_t>(std::llround(t_max / dt)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        std::complex<double> v;
        for (auto [w, omega] : modes) v += w * std::polar(1.0, -omega * t);
        s.values.push_back(v);
    }
    return s;
}

}  // namespace

TEST(GeneralWeights, EqualWeightsReproduceModulus) {
    ComplexSeries s{0.0, 0.1, {{1.0, 0.0}, {0.3, -0.4}, {0.0, 0.2}}, "S", ""};
    const double a = std::numbers::sqrt2 / 2.0;
    auto out = general_weights_contrast(s, a, a);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(out.values[i], std::abs(s.values[i]), 1e-15);
}

TEST(GeneralWeights, NoInteractingBranch) {
    ComplexSeries s{0.0, 0.1, {{1.0, 0.0}, {0.3, -0.4}, {0.0, 0.0}}, "S", ""};
    auto out = general_weights_contrast(s, 1.0, 0.0);
    for (double v : out.values) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(GeneralWeights, VanishingContrast) {
    ComplexSeries s{0.0, 0.1, {{1.0, 0.0}, {0.0, 0.0}}, "S", ""};
    auto out = general_weights_contrast(s, 0.6, 0.8);
    EXPECT_NEAR(out.values[1], 0.28, 1e-14);
}

TEST(GeneralWeights, RejectsUnnormalizedWeights) {
    ComplexSeries s{0.0, 0.1, {{1.0, 0.0}, {0.5, 0.0}}, "S", ""};
    EXPECT_THROW(general_weights_contrast(s, 0.6, 0.6), DomainError);
    EXPECT_THROW(general_weights_contrast(s, -0.6, 0.8), DomainError);
}

TEST(GeneralWeights, MatchesDirectSpinExpectation) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::complex<double> ov(u(rng), u(rng));
        if (std::abs(ov) > 1.0) ov /= std::abs(ov) * 1.0001;
        const double theta = 0.5 * std::numbers::pi * (0.5 + 0.5 * u(rng));
        const double a = std::cos(theta), b = std::sin(theta);
        const auto direct = spin_expectation(a, b, ov).magnitude();
        EXPECT_NEAR(reweighted_contrast(std::abs(ov), a, b), direct, 1e-12);
    }
}

TEST(Spectral, SingleToneAtPolaronFrequency) {
    const double delta = 4.435;
    auto s = tones({{1.0, delta}}, 100.0, 0.05);
    auto spec = spectral_function(s, Window::none(), 8);
    auto peaks = peaks_by_height(find_peaks(spec, 0.5));
    ASSERT_FALSE(peaks.empty());
    EXPECT_NEAR(peaks.front().omega, delta, 2.0 * std::numbers::pi / (100.0 * 8));
    EXPECT_NEAR(spec.resolution, 2.0 * std::numbers::pi / 100.0, 1e-12);
    EXPECT_EQ(spec.window, "none");
}

TEST(Spectral, ConstantSignalPeaksAtZero) {
    auto s = tones({{1.0, 0.0}}, 100.0, 0.05);
    auto peaks = peaks_by_height(find_peaks(spectral_function(s), 0.5));
    ASSERT_FALSE(peaks.empty());
    EXPECT_NEAR(peaks.front().omega, 0.0, 1e-9);
}

TEST(Spectral, SumRule) {
    auto s = tones({{0.6, 8.482}, {0.4, 8.859}}, 100.0, 0.05);
    const auto spec = spectral_function(s, Window::none(), 8);
    EXPECT_NEAR(spec.integral(), 1.0, 0.02);
    // Holds for any window that equals 1 at t = 0.
    EXPECT_NEAR(spectral_function(s, Window::hann(), 8).integral(), 1.0, 0.02);
    EXPECT_NEAR(spectral_function(s, Window::exponential(0.1), 8).integral(), 1.0, 0.02);
}

TEST(Spectral, Linearity) {
    auto a = tones({{0.7, 3.0}}, 50.0, 0.05);
    auto b = tones({{0.3, -1.2}}, 50.0, 0.05);
    auto sum = tones({{0.7, 3.0}, {0.3, -1.2}}, 50.0, 0.05);
    // Each part scaled to S(0) = 1, then recombined with the weights.
    for (auto& v : a.values) v /= 0.7;
    for (auto& v : b.values) v /= 0.3;
    const auto sa = spectral_function(a), sb = spectral_function(b), ss = spectral_function(sum);
    ASSERT_EQ(sa.values.size(), ss.values.size());
    for (std::size_t k = 0; k < ss.values.size(); ++k) EXPECT_NEAR(ss.values[k], 0.7 * sa.values[k] + 0.3 * sb.values[k], 1e-10);
}

TEST(Spectral, ResolvesPolaronDoublet) {
    auto s = tones({{0.6, 8.482}, {0.4, 8.859}}, 100.0, 0.05);
    auto peaks = peaks_by_height(find_peaks(spectral_function(s, Window::none(), 8), 0.3));
    ASSERT_GE(peaks.size(), 2u);
    const double lo = std::min(peaks[0].omega, peaks[1].omega), hi = std::max(peaks[0].omega, peaks[1].omega);
    EXPECT_NEAR(lo, 8.482, 0.02);
    EXPECT_NEAR(hi, 8.859, 0.02);
    EXPECT_GT(hi - lo, 2.0 * std::numbers::pi / 100.0);
}

TEST(Spectral, HighThresholdKeepsTallestOnly) {
    auto s = tones({{0.7, 2.0}, {0.3, 5.0}}, 100.0, 0.05);
    auto peaks = find_peaks(spectral_function(s, Window::hann(), 8), 0.99);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_NEAR(peaks[0].omega, 2.0, 0.01);
}

TEST(Spectral, PeaksSortedByFrequencyAndWidthPositive) {
    auto s = tones({{0.5, 6.0}, {0.5, 1.0}}, 100.0, 0.05);
    auto peaks = find_peaks(spectral_function(s, Window::hann(), 8), 0.3);
    ASSERT_EQ(peaks.size(), 2u);
    EXPECT_LT(peaks[0].omega, peaks[1].omega);
    for (const auto& p : peaks) EXPECT_GT(p.width, 0.0);
}

TEST(Spectral, RejectsBadInput) {
    ComplexSeries s{0.0, 0.1, {{0.5, 0.0}, {0.4, 0.0}, {0.3, 0.0}}, "S", ""};
    EXPECT_THROW(spectral_function(s), AnalysisError);
    auto ok = tones({{1.0, 1.0}}, 10.0, 0.1);
    const auto spec = spectral_function(ok);
    EXPECT_THROW(find_peaks(spec, 0.0), DomainError);
    EXPECT_THROW(find_peaks(spec, 1.0), DomainError);
}

TEST(Spectral, EmptyPeakListIsAllowed) {
    SpectralFunction flat;
    flat.omegas = {0.0, 1.0, 2.0, 3.0};
    flat.values = {0.0, 0.0, 0.0, 0.0};
    flat.d_omega = 1.0;
    EXPECT_TRUE(find_peaks(flat, 0.5).empty());
}

TEST(Miscibility, IdenticalDisjointAndScaling) {
    auto g = Grid::build(201, 10.0);
    std::vector<double> a(g.size()), b(g.size()), c(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        a[i] = std::exp(-x * x);
        b[i] = x < -2.0 ? 1.0 : 0.0;
        c[i] = x > 2.0 ? std::exp(-(x - 4) * (x - 4)) : 0.0;
    }
    EXPECT_NEAR(miscibility_overlap(g, a, a), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(miscibility_overlap(g, b, c), 0.0);

    std::vector<double> d(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) d[i] = std::exp(-(g.x(i) - 1) * (g.x(i) - 1));
    const double lam = miscibility_overlap(g, a, d);
    EXPECT_GT(lam, 0.0);
    EXPECT_LT(lam, 1.0);
    EXPECT_NEAR(miscibility_overlap(g, d, a), lam, 1e-15);
    std::vector<double> a3(a), d7(d);
    for (auto& v : a3) v *= 3.0;
    for (auto& v : d7) v *= 0.07;
    EXPECT_NEAR(miscibility_overlap(g, a3, d7), lam, 1e-14);
}

TEST(Miscibility, RejectsZeroAndNegative) {
    auto g = Grid::build(101, 5.0);
    std::vector<double> zero(g.size(), 0.0), one(g.size(), 1.0), neg(g.size(), 1.0);
    neg[10] = -1e-3;
    EXPECT_THROW(miscibility_overlap(g, zero, one), DomainError);
    EXPECT_THROW(miscibility_overlap(g, neg, one), DomainError);
}

TEST(Virial, SyntheticViolation) {
    EnergyBreakdown e;
    e.kinetic_b = 1.0;
    e.potential_b = 1.0;
    e.kinetic_i = 0.25;
    e.potential_i = 0.25;
    EXPECT_NEAR(virial_check(e).residual, 0.0, 1e-15);
    e.intra_bb = 0.1;
    EXPECT_DOUBLE_EQ(virial_check(e).residual, 0.1);
    EXPECT_DOUBLE_EQ(e.total(), 2.6);
    EXPECT_DOUBLE_EQ(e.bath(), 2.1);
}

TEST(DominantFrequency, CleanAndNoisyCosine) {
    RealSeries s{0.0, 0.05, {}, "x2", ""};
    std::mt19937 rng(3);
    std::normal_distribution<double> noise(0.0, 0.02);
    for (int i = 0; i <= 2000; ++i) {
        const double t = 0.05 * i;
        s.values.push_back(2.0 + 0.3 * std::cos(1.4142 * t + 0.3) + noise(rng));
    }
    auto est = dominant_frequency(s);
    EXPECT_NEAR(est.omega, 1.4142, 0.01);
    EXPECT_EQ(est.method, "fft");
}

TEST(DominantFrequency, MergedPeaksUseFit) {
    RealSeries s{0.0, 0.05, {}, "x2", ""};
    for (int i = 0; i <= 600; ++i) {
        const double t = 0.05 * i;
        s.values.push_back(std::cos(1.0 * t) + 0.5 * std::cos(1.25 * t));
    }
    auto est = dominant_frequency(s);
    EXPECT_EQ(est.method, "damped-cosine");
    EXPECT_GT(est.omega, 0.9);
    EXPECT_LT(est.omega, 1.3);
}

TEST(DominantFrequency, FlatSignalIsAnalysisError) {
    RealSeries s{0.0, 0.05, std::vector<double>(500, 1.0), "flat", ""};
    EXPECT_THROW(dominant_frequency(s), AnalysisError);
}

TEST(TimeSeriesTest, PhaseUsesComplexArgument) {
    ComplexSeries s{0.0, 1.0, {{0.0, 1.0}, {-1.0, 0.0}}, "S", ""};
    auto p = phase(s);
    EXPECT_NEAR(p.values[0], std::numbers::pi / 2, 1e-15);
    EXPECT_NEAR(p.values[1], std::numbers::pi, 1e-15);
    EXPECT_EQ(s.index_at(0.99), 0u);
    EXPECT_EQ(s.index_at(1.0), 1u);
}

namespace {

RealSeries sampled(double t_max, double dt, const std::function<double(double)>& f) {
    RealSeries s{0.0, dt, {}, "|S|", ""};
    for (std::size_t i = 0; static_cast<double>(i) * dt <= t_max + 1e-9; ++i) s.values.push_back(f(static_cast<double>(i) * dt));
    return s;
}

}  // namespace

TEST(Region, FlatContrastIsFirstRegion) {
    auto r = classify_region(sampled(50.0, 0.05, [](double) { return 1.0; }), 0.0, 0.5);
    EXPECT_EQ(r.region, Region::I);
    EXPECT_DOUBLE_EQ(r.metrics.running_min, 1.0);
    EXPECT_DOUBLE_EQ(r.metrics.decay_rate, 0.0);
}

TEST(Region, ExponentialDecayIsThirdRegion) {
    auto r = classify_region(sampled(50.0, 0.05, [](double t) { return std::exp(-t / 5.0); }), 3.0, 0.5);
    EXPECT_EQ(r.region, Region::III);
    EXPECT_TRUE(r.metrics.monotone_envelope);
    EXPECT_NEAR(r.metrics.decay_rate, 0.2, 1e-10);
    EXPECT_NEAR(r.metrics.decay_exponent, 1.0, 1e-10);
}

TEST(Region, StretchedExponentRecovered) {
    auto r = classify_region(sampled(50.0, 0.05, [](double t) { return std::exp(-std::pow(t / 8.0, 0.6)); }), 2.0, 0.5);
    EXPECT_NEAR(r.metrics.decay_exponent, 0.6, 1e-10);
}

TEST(Region, DampedOscillationIsSecondRegion) {
    // Shallow but clearly damped swing: stays above the minimum threshold.
    auto r = classify_region(sampled(50.0, 0.05, [](double t) { return 0.85 + 0.15 * std::exp(-t / 20.0) * std::cos(2.0 * t); }), 1.0, 0.5);
    EXPECT_GT(r.metrics.running_min, 0.5);
    EXPECT_TRUE(r.metrics.damped);
    EXPECT_EQ(r.region, Region::II);
}

TEST(Region, DeepUndampedDipIsSecondRegion) {
    auto r = classify_region(sampled(50.0, 0.05, [](double t) { return 0.6 + 0.35 * std::cos(1.3 * t); }), 1.0, 0.5);
    EXPECT_FALSE(r.metrics.damped);
    EXPECT_EQ(r.region, Region::II);
}

TEST(Region, TinyRipplesAreNotDamping) {
    auto r = classify_region(sampled(50.0, 0.05, [](double t) { return 0.995 + 0.005 * std::exp(-t / 5.0) * std::cos(3.0 * t); }), 0.1, 0.5);
    EXPECT_FALSE(r.metrics.damped);
    EXPECT_EQ(r.region, Region::I);
}

TEST(Region, RevivalsBelowFinalThresholdAreBorderline) {
    auto r = classify_region(sampled(50.0, 0.05, [](double t) {
        const double r = std::sin(std::numbers::pi * t / 25.0);
        return std::exp(-t / 3.0) + 0.5 * r * r * t / 50.0 + 1e-3;
    }), 3.0, 0.5);
    ASSERT_LT(r.metrics.final_value, 0.1);
    EXPECT_FALSE(r.metrics.monotone_envelope);
    EXPECT_EQ(r.region, Region::Borderline);
    EXPECT_EQ(r.candidates, (std::vector<Region>{Region::II, Region::III}));
}

TEST(Region, MinimumNearThresholdIsBorderline) {
    auto r = classify_region(sampled(50.0, 0.05, [](double t) { return 0.75 + 0.24 * std::cos(t); }), 0.5, 0.5);
    EXPECT_EQ(r.region, Region::Borderline);
    EXPECT_EQ(r.candidates, (std::vector<Region>{Region::I, Region::II}));
}

TEST(Region, InvariantUnderUniformRescaling) {
    const std::vector<std::function<double(double)>> traces = {
        [](double) { return 1.0; },
        [](double t) { return std::exp(-t / 5.0); },
        [](double t) { return 0.85 + 0.15 * std::exp(-t / 20.0) * std::cos(2.0 * t); },
        [](double t) { return 0.6 + 0.35 * std::cos(1.3 * t); },
    };
    for (const auto& f : traces) {
        const auto base = classify_region(sampled(50.0, 0.05, f), 1.0, 0.5);
        for (double c : {1.0, 0.7, 0.2, 1e-3}) {
            const auto r = classify_region(sampled(50.0, 0.05, [&](double t) { return c * f(t); }), 1.0, 0.5);
            EXPECT_EQ(r.region, base.region) << "c = " << c;
            EXPECT_NEAR(r.metrics.running_min, base.metrics.running_min, 1e-12);
        }
    }
}

TEST(Region, ShortSeriesRejected) {
    EXPECT_THROW(classify_region(sampled(20.0, 0.05, [](double) { return 1.0; }), 0.0, 0.5), DomainError);
}
