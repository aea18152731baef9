#include <cmath>

#include <gtest/gtest.h>

#include "aniso/energy.hpp"

using namespace aniso;

namespace {

SpaceTimeBox box(std::vector<double> half, double t_lo, double t_hi)
{
    SpaceTimeBox b;
    b.center.assign(half.size(), 0.0);
    b.half = std::move(half);
    b.t_lo = t_lo;
    b.t_hi = t_hi;
    b.hi_closed = true;
    return b;
}

CutoffSpec backward_pair()
{
    return {box({0.5, 0.6}, -0.5, 0.0), box({1.0, 1.2}, -1.0, 0.0)};
}

SpaceTimeField wavy(const Grid& g, double t0, double dt, std::size_t levels)
{
    return SpaceTimeField::sample(g, t0, dt, levels, [](std::span<const double> x, double t) {
        return 1.0 + 0.6 * std::sin(2.0 * x[0] + 0.5) * std::cos(1.5 * x[1]) + 0.3 * t;
    });
}

}  // namespace

TEST(Energy, ConstantAtLevelVanishes)
{
    const auto e = derive_exponents(make_pvector({3, 4}));
    SpaceTimeField c(Grid::cube(2, 1.5, 30), -1.0, 0.05, 21, 2.0);
    for (Sign s : {Sign::plus, Sign::minus}) {
        const auto r = energy_sides(c, 2.0, s, backward_pair(), e, -1.0, 0.0);
        EXPECT_EQ(r.lhs, 0.0);
        EXPECT_EQ(r.rhs, 0.0);
        EXPECT_EQ(r.ratio, 0.0);
    }
}

TEST(Energy, ConstantBelowLevelMatchesCutoffIntegrals)
{
    // v = k - c is constant, so the sup and time terms reduce to integrals of the cut-off.
    const auto e = derive_exponents(make_pvector({3, 3}));
    const double v = 0.5;
    SpaceTimeField c(Grid::cube(2, 1.5, 240), -1.0, 0.005, 201, 1.0);
    const auto spec = backward_pair();
    const auto r = energy_sides(c, 1.0 + v, Sign::minus, spec, e, -1.0, 0.0);
    // int eta_i^3 over the ramp of width w is 2(inner + w / 4)
    const double space = 2.0 * (0.5 + 0.5 / 4.0) * 2.0 * (0.6 + 0.6 / 4.0);
    EXPECT_NEAR(r.lhs_sup, v * v * space, 2e-2 * v * v * space);
    EXPECT_NEAR(r.rhs_time, v * v * space, 2e-2 * v * v * space);
    // axis 1: v^3 * int |eta_1'|^3 (= 2 * 0.5 * 2^3) * int eta_2^3 * int eta_t
    const double x_term = std::pow(v, 3.0) * 8.0 * (2.0 * (0.6 + 0.6 / 4.0)) * 0.75;
    EXPECT_NEAR(r.rhs_space[0], x_term, 5e-2 * x_term);
}

TEST(Energy, SidesAreNonnegativeAndDecompose)
{
    const auto e = derive_exponents(make_pvector({Rational(5, 2), Rational(7, 2)}));
    const auto u = wavy(Grid::cube(2, 1.5, 48), -1.0, 0.02, 51);
    const auto r = energy_sides(u, 1.1, Sign::plus, backward_pair(), e, -1.0, 0.0);
    double grad = 0.0, space = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_GE(r.lhs_gradient[i], 0.0);
        EXPECT_GE(r.rhs_space[i], 0.0);
        grad += r.lhs_gradient[i];
        space += r.rhs_space[i];
    }
    EXPECT_DOUBLE_EQ(r.lhs, r.lhs_sup + grad);
    EXPECT_DOUBLE_EQ(r.rhs, r.rhs_time + space);
    EXPECT_GT(r.rhs, 0.0);
    EXPECT_DOUBLE_EQ(r.ratio, r.lhs / r.rhs);
}

TEST(Energy, ScalingExponent)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    const Monomial m = energy_scaling_exponent(e);
    EXPECT_EQ(m.rho_exp, Rational(-2));
    EXPECT_EQ(m.m_exp, Rational(-8, 3));
}

TEST(Energy, BothSidesPickUpTheCommonFactorUnderScaling)
{
    const auto e = derive_exponents(make_pvector({Rational(5, 2), 4}));
    const auto u = wavy(Grid::cube(2, 2.0, 64), -1.0, 0.02, 51);
    const auto spec = backward_pair();
    for (auto [rho, m] : {std::pair{0.7, 1.0}, std::pair{1.3, 2.0}, std::pair{0.9, 0.5}}) {
        const auto s = make_time_neutral(rho, m, e);
        const auto tu = apply_scaling(u, s);
        const double factor = energy_scaling_exponent(e).eval(rho, m);
        for (Sign sign : {Sign::plus, Sign::minus}) {
            const double k = 1.05;
            const auto a = energy_sides(u, k, sign, spec, e, -1.0, 0.0);
            const auto b = energy_sides(tu, k / s.amplitude(), sign, pullback_cutoff(s, spec), e,
                                        -1.0 / s.time_factor(), 0.0);
            EXPECT_NEAR(b.lhs, factor * a.lhs, 1e-10 * factor * a.lhs);
            EXPECT_NEAR(b.rhs, factor * a.rhs, 1e-10 * factor * a.rhs);
            EXPECT_NEAR(b.ratio, a.ratio, 1e-10 * a.ratio);
        }
    }
}

TEST(Energy, FitConstant)
{
    EnergySides a, b, z;
    a.lhs = 1.0;
    a.rhs = 4.0;
    b.lhs = 3.0;
    b.rhs = 2.0;
    EXPECT_EQ(fit_energy_constant({a, b, z}), 1.5);
    EXPECT_EQ(fit_energy_constant({}), 0.0);
}

TEST(Energy, Errors)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    const auto u = wavy(Grid::cube(2, 1.0, 20), -1.0, 0.1, 11);
    // the outer cut-off box reaches the domain edge
    auto spec = backward_pair();
    EXPECT_THROW(energy_sides(u, 1.0, Sign::plus, spec, e, -1.0, 0.0), OutOfDomainError);
    const auto v = wavy(Grid::cube(2, 1.5, 20), -1.0, 0.1, 11);
    EXPECT_THROW(energy_sides(v, 1.0, Sign::plus, spec, e, -0.02, 0.0), DomainError);
}
