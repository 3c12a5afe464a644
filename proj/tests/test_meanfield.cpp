#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "polaron/meanfield.hpp"
#include "polaron/observables.hpp"

using namespace polaron;

namespace {

const Grid& default_grid() {
    static const Grid g = Grid::build(450, 40.0);
    return g;
}

MeanFieldSystem bath_system(double g_bi = 0.0) {
    MeanFieldSystem s;
    s.n_bath = 100;
    s.g_bb = 0.5;
    s.g_bi = g_bi;
    return s;
}

const MeanFieldGroundState& relaxed() {
    static const MeanFieldGroundState gs = relax_ground_state(bath_system(), default_grid());
    return gs;
}

PropagationOptions quick(double t_max, double dt = 1e-3, std::size_t every = 50) {
    PropagationOptions o;
    o.t_max = t_max;
    o.dt = dt;
    o.record_every = every;
    return o;
}

}  // namespace

TEST(ThomasFermi, ClosedForm) {
    const auto tf = thomas_fermi(bath_system());
    EXPECT_NEAR(tf.mu, std::pow(3.0 * 100 * 0.5 / (4.0 * std::sqrt(2.0)), 2.0 / 3.0), 1e-12);
    EXPECT_NEAR(tf.mu, 8.87, 0.03);
    EXPECT_NEAR(tf.radius, 4.21, 0.01);
    EXPECT_NEAR(tf.density(0.0), 17.75, 0.05);
    EXPECT_NEAR(tf.particle_number(), 100.0, 1e-8);
    EXPECT_DOUBLE_EQ(tf.density(tf.radius + 0.1), 0.0);
}

TEST(ThomasFermi, EdgeOfSampledParabola) {
    const auto tf = thomas_fermi(bath_system());
    EXPECT_NEAR(density_drop_radius(tf.sample(default_grid())), tf.radius, default_grid().dx());
}

TEST(ThomasFermi, UndefinedWithoutBathInteraction) {
    auto s = bath_system();
    s.g_bb = 0.0;
    EXPECT_THROW(thomas_fermi(s), DomainError);
}

TEST(System, RejectsAttractiveCoupling) {
    auto s = bath_system(-0.1);
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Relax, ChemicalPotentialAndRadius) {
    const auto& gs = relaxed();
    EXPECT_NEAR(gs.state.mu_bath, 8.87, 0.02 * 8.87);
    RealField rho(default_grid(), gs.state.bath.density(100));
    EXPECT_NEAR(density_drop_radius(rho), 4.2, 0.05 * 4.2);
    EXPECT_NEAR(rho.integral(), 100.0, 1e-8);
}

TEST(Relax, NonInteractingOscillators) {
    auto s = bath_system();
    s.g_bb = 0.0;
    const auto gs = relax_ground_state(s, default_grid());
    EXPECT_NEAR(gs.state.energies.bath(), 50.0, 1e-8);
    EXPECT_NEAR(gs.state.energies.impurity_free(), 0.5, 1e-10);
    EXPECT_NEAR(gs.state.energies.kinetic_b, gs.state.energies.potential_b, 1e-7 * 50.0);
    EXPECT_LT(std::abs(virial_check(gs.state.energies).relative), 1e-7);
}

TEST(Relax, EnergyTraceIsMonotone) {
    const auto& trace = relaxed().report.energy_trace;
    ASSERT_GT(trace.size(), 3u);
    for (std::size_t i = 2; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-9 * std::abs(trace[i - 1])) << "check " << i;
}

TEST(Relax, BulkMatchesThomasFermi) {
    const auto tf = thomas_fermi(bath_system());
    const auto& g = default_grid();
    const auto rho = relaxed().state.bath.density(100);
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(g.x(i)) > 0.8 * tf.radius) continue;
        const double d = rho[i] - tf.density(g.x(i));
        diff += d * d;
        ref += tf.density(g.x(i)) * tf.density(g.x(i));
    }
    EXPECT_LT(std::sqrt(diff / ref), 0.03);
}

TEST(Relax, VirialAcrossCouplings) {
    for (double g_bi : {0.0, 0.5, 1.0, 2.0, 5.0}) {
        const auto gs = g_bi == 0.0 ? relaxed() : relax_ground_state(bath_system(g_bi), default_grid());
        EXPECT_LT(std::abs(virial_check(gs.state.energies).relative), 1e-5) << "g_BI = " << g_bi;
        const auto& e = gs.state.energies;
        EXPECT_NEAR(e.total(), e.kinetic_b + e.potential_b + e.kinetic_i + e.potential_i + e.intra_bb + e.inter_bi, 1e-10);
    }
}

TEST(Relax, NonConvergenceCarriesTrace) {
    RelaxOptions o;
    o.max_steps = 50;
    try {
        relax_ground_state(bath_system(), default_grid(), o);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_FALSE(e.trace().empty());
    }
}

TEST(Propagate, StationaryStateStaysPut) {
    const auto& gs = relaxed();
    const auto traj = propagate(gs.state, bath_system(), quick(5.0, 2.5e-4, 400));
    const auto r0 = gs.state.bath.density(100);
    double worst = 0.0;
    for (const auto& snap : traj.snapshots) {
        const auto r = snap.bath.density(100);
        for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - r0[i]));
    }
    EXPECT_LT(worst, 1e-7);
    EXPECT_LT(traj.max_norm_drift, 1e-10);

    const auto s = mean_field_contrast(traj, gs.state);
    EXPECT_NEAR(std::abs(s.values.front() - 1.0), 0.0, 1e-14);
    for (const auto& v : s.values) EXPECT_NEAR(std::abs(v), 1.0, 1e-8);
}

TEST(Propagate, QuenchBreathesAtThomasFermiFrequency) {
    const auto& gs = relaxed();
    const auto traj = propagate(gs.state, bath_system(0.25), quick(40.0));
    const auto var = traj.series([](const MeanFieldRecord& r) { return r.up.variance(); }, "var_x_up");
    const double expected = 2.0 * std::sqrt(1.0 - 0.25 / 0.5);
    EXPECT_NEAR(dominant_frequency(var).omega, expected, 0.05 * expected);
    EXPECT_LT(traj.max_energy_drift, 1e-6);
    EXPECT_LT(traj.max_norm_drift, 1e-10);

    const auto s = mean_field_contrast(traj, gs.state);
    for (const auto& v : s.values) EXPECT_LE(std::abs(v), 1.0 + 1e-12);
    // Two-branch spin expectation vs the reweighting identity.
    for (double alpha : {0.2, 0.6, std::numbers::sqrt2 / 2}) {
        const double beta = std::sqrt(1.0 - alpha * alpha);
        const auto re = general_weights_contrast(s, alpha, beta);
        for (std::size_t i = 0; i < s.size(); i += 37) {
            EXPECT_NEAR(re.values[i], spin_expectation(alpha, beta, s.values[i]).magnitude(), 1e-12);
        }
    }
}

TEST(Propagate, StrongerCouplingLosesContrastFaster) {
    const auto& gs = relaxed();
    const auto weak = mean_field_contrast(propagate(gs.state, bath_system(0.1), quick(5.0)), gs.state);
    const auto strong = mean_field_contrast(propagate(gs.state, bath_system(1.0), quick(5.0)), gs.state);
    EXPECT_LE(std::abs(strong.values.back()), std::abs(weak.values.back()));
}

TEST(Propagate, BathGainsEnergyAfterStrongQuench) {
    const auto& gs = relaxed();
    const auto traj = propagate(gs.state, bath_system(1.7), quick(10.0, 1e-3, 500));
    EXPECT_GT(traj.records.back().energies.bath(), traj.records.front().energies.bath());
    EXPECT_LT(traj.max_energy_drift, 1e-6);
}

TEST(Propagate, SpinDownFeelsOnlyTheTrap) {
    const auto& gs = relaxed();
    const auto traj = propagate(gs.state, bath_system(1.0), quick(2.0, 1e-3, 500));
    for (const auto& r : traj.records) {
        EXPECT_NEAR(std::abs(r.overlap_down), 1.0, 1e-9);
        EXPECT_NEAR(r.down.x2, traj.records.front().down.x2, 1e-9);
    }
}

TEST(Propagate, AbortsWhenStepTooLarge) {
    const auto& gs = relaxed();
    try {
        propagate(gs.state, bath_system(1.7), quick(2.0, 2e-2, 5));
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("retry with dt"), std::string::npos);
    }
}

TEST(Contrast, GridMismatchIsUsageError) {
    const auto& gs = relaxed();
    const auto traj = propagate(gs.state, bath_system(), quick(0.1, 1e-3, 10));
    auto other = relax_ground_state(bath_system(), Grid::build(300, 30.0));
    EXPECT_THROW(mean_field_contrast(traj, other.state), UsageError);
}

TEST(SoundHorizon, ReferenceValueAndCentreSpeed) {
    const auto& gs = relaxed();
    RealField rho(default_grid(), gs.state.bath.density(100));
    const auto h = sound_horizon(bath_system(), rho, 6.0);
    EXPECT_NEAR(h.time, 106.0, 0.15 * 106.0);
    EXPECT_NEAR(h.c0, std::sqrt(gs.state.mu_bath), 0.02 * std::sqrt(gs.state.mu_bath));
    EXPECT_EQ(h.clipped_samples, 0u);
}

TEST(SoundHorizon, MonotoneInDistance) {
    const auto& gs = relaxed();
    RealField rho(default_grid(), gs.state.bath.density(100));
    double prev = 0.0;
    for (double xb = 0.5; xb <= 8.0; xb += 0.5) {
        const double t = sound_horizon(bath_system(), rho, xb).time;
        EXPECT_GT(t, prev);
        prev = t;
    }
    EXPECT_THROW(sound_horizon(bath_system(), rho, 41.0), DomainError);
    EXPECT_THROW(sound_horizon(bath_system(), rho, -1.0), DomainError);
}

TEST(SoundHorizon, TruncatedThomasFermiLimit) {
    // For an exact TF profile the horizon inside the cloud is analytic:
    // T(x) = sqrt(2) asin(x / R) / omega.
    const auto tf = thomas_fermi(bath_system());
    const auto rho = tf.sample(default_grid());
    const double x = 3.0;
    EXPECT_NEAR(sound_horizon(bath_system(), rho, x).time, std::sqrt(2.0) * std::asin(x / tf.radius), 2e-3);
}
