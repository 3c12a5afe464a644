#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "polaron/core/grid.hpp"
#include "polaron/core/ho_basis.hpp"
#include "polaron/core/sine_transform.hpp"

using namespace polaron;

TEST(Grid, DefaultSpacing) {
    const Grid g = Grid::build(450, 40.0);
    EXPECT_NEAR(g.dx(), 80.0 / 449.0, 1e-15);
    EXPECT_NEAR(g.dx(), 0.17817, 1e-5);
    EXPECT_TRUE(g.is_default());
    EXPECT_FALSE(g.contains_origin());
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.x(i), -g.x(g.size() - 1 - i));
}

TEST(Grid, RejectsTooFewPoints) {
    EXPECT_THROW(Grid::build(3, 1.0), ConfigError);
    EXPECT_THROW(Grid::build(64, 0.0), ConfigError);
    EXPECT_THROW(Grid::build(64, -2.0), ConfigError);
}

TEST(Grid, OddGridContainsOrigin) {
    const Grid g = Grid::build(201, 10.0);
    EXPECT_TRUE(g.contains_origin());
    EXPECT_EQ(g.x(100), 0.0);
    EXPECT_FALSE(g.is_default());
}

TEST(Field, WallsAreZero) {
    const Grid g = Grid::build(64, 5.0);
    const Field f = Field::from_function(g, [](double) { return 1.0; });
    EXPECT_EQ(f[0], Complex{});
    EXPECT_EQ(f[63], Complex{});
}

TEST(HOBasis, GroundStateAtOrigin) {
    const Grid g = Grid::build(201, 10.0);
    const HOBasis b = ho_mode_basis(g, 4);
    EXPECT_NEAR(b.mode(0)[100], std::pow(std::numbers::pi, -0.25), 1e-14);
    EXPECT_NEAR(b.mode(0)[100], 0.7511, 1e-4);
    const auto e = b.energies();
    ASSERT_EQ(e.size(), 4u);
    EXPECT_DOUBLE_EQ(e[0], 0.5);
    EXPECT_DOUBLE_EQ(e[1], 1.5);
    EXPECT_DOUBLE_EQ(e[2], 2.5);
    EXPECT_DOUBLE_EQ(e[3], 3.5);
}

TEST(HOBasis, Orthonormal) {
    const Grid g = Grid::build(450, 40.0);
    const HOBasis b = ho_mode_basis(g, 40);
    for (std::size_t i = 0; i < b.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double s = std::real(inner(b.field(i), b.field(j)));
            EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-10) << i << "," << j;
        }
    }
    EXPECT_NEAR(std::abs(inner(b.field(0), b.field(1))), 0.0, 1e-12);
}

TEST(HOBasis, RejectsNarrowGrid) {
    const Grid g = Grid::build(128, 4.0);
    try {
        (void)ho_mode_basis(g, 20);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("need x_max >="), std::string::npos);
    }
    EXPECT_THROW(ho_mode_basis(Grid::build(450, 40.0), 41), ConfigError);
}

TEST(HOBasis, ReconstructsGroundState) {
    const Grid g = Grid::build(450, 40.0);
    const HOBasis b = ho_mode_basis(g, 20);
    const Field phi0 = Field::from_function(g, [](double x) { return std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x); });
    const Field back = b.reconstruct(b.project(phi0));
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(back[i] - phi0[i]));
    EXPECT_LT(worst, 1e-10);
}

TEST(Inner, Sesquilinear) {
    const Grid g = Grid::build(128, 6.0);
    const Field f = Field::from_function(g, [](double x) { return Complex(std::exp(-x * x), 0.3 * x * std::exp(-x * x)); });
    const Field h = Field::from_function(g, [](double x) { return Complex(std::cos(x) * std::exp(-0.5 * x * x), std::sin(x)); });
    const Complex a = inner(f, h);
    const Complex b = inner(h, f);
    EXPECT_NEAR(a.real(), b.real(), 1e-14);
    EXPECT_NEAR(a.imag(), -b.imag(), 1e-14);
    EXPECT_THROW(inner(f, Field(Grid::build(129, 6.0))), UsageError);
}

TEST(Kinetic, HarmonicGroundStateExpectation) {
    const Grid g = Grid::build(450, 40.0);
    const Field phi0 = ho_mode_basis(g, 1).field(0);
    const Field tphi = kinetic_apply(phi0, 1.0);
    EXPECT_NEAR(std::real(inner(phi0, tphi)), 0.25, 1e-6);
    const KineticOperator t(g, 1.0);
    EXPECT_NEAR(t.expectation(phi0), 0.25, 1e-6);
}

TEST(Kinetic, LowestBoxModeIsEigenfunction) {
    const Grid g = Grid::build(301, 7.5);
    const double xm = g.x_max();
    const Field f = Field::from_function(g, [&](double x) { return std::sin(std::numbers::pi * (x + xm) / (2 * xm)); });
    const Field tf = kinetic_apply(f, 1.0);
    const double lambda = std::numbers::pi * std::numbers::pi / (8 * xm * xm);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(std::abs(tf[i] - lambda * f[i]), 0.0, 1e-12);
}

TEST(Kinetic, LinearAndSymmetric) {
    const Grid g = Grid::build(256, 8.0);
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    // Random smooth fields: random combinations of localized bumps.
    auto random_field = [&] {
        const double c1 = nd(rng), c2 = nd(rng), s1 = nd(rng), s2 = nd(rng);
        return Field::from_function(g, [=](double x) {
            return Complex(c1 * std::exp(-(x - s1) * (x - s1)), c2 * x * std::exp(-0.5 * (x - s2) * (x - s2)));
        });
    };
    for (int trial = 0; trial < 10; ++trial) {
        const Field f = random_field();
        const Field h = random_field();
        const Complex lhs = inner(f, kinetic_apply(h, 1.0));
        const Complex rhs = inner(kinetic_apply(f, 1.0), h);
        EXPECT_LT(std::abs(lhs - rhs), 1e-10);

        const Complex a(0.7, -0.2), b(-1.3, 0.4);
        const Field combo = kinetic_apply(a * f + b * h, 1.0);
        const Field split = a * kinetic_apply(f, 1.0) + b * kinetic_apply(h, 1.0);
        for (std::size_t i = 0; i < g.size(); ++i) EXPECT_LT(std::abs(combo[i] - split[i]), 1e-10);
    }
}

TEST(Kinetic, Deterministic) {
    const Grid g = Grid::build(450, 40.0);
    const Field f = Field::from_function(g, [](double x) { return Complex(std::exp(-0.1 * x * x), std::sin(x) * std::exp(-0.2 * x * x)); });
    const Field a = kinetic_apply(f, 1.0);
    const Field b = kinetic_apply(f, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(a[i], b[i]);
}
