#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aniso/solver.hpp"

using namespace aniso;

namespace {

SolverConfig config(const AnisoExponents& e, double t_end)
{
    SolverConfig c;
    c.exps = e;
    c.t_end = t_end;
    return c;
}

GridField bump(const Grid& g)
{
    return GridField::sample(g, [](std::span<const double> x) {
        double v = 1.0;
        for (double xi : x)
            v *= std::max(0.0, 1.0 - xi * xi);
        return v * v;
    });
}

// 1-D explicit p-Laplacian with zero-flux ends, written out directly.
std::vector<double> oracle_1d(std::vector<double> u, double p, double h, double dt, std::size_t steps)
{
    const std::size_t n = u.size();
    std::vector<double> flux(n + 1, 0.0);
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t j = 1; j < n; ++j) {
            const double g = (u[j] - u[j - 1]) / h;
            flux[j] = std::pow(std::abs(g), p - 2.0) * g;
        }
        for (std::size_t j = 0; j < n; ++j)
            u[j] += dt * (flux[j + 1] - flux[j]) / h;
    }
    return u;
}

}  // namespace

TEST(Solver, StableDtForUnitSlope)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    auto cfg = config(e, 1.0);
    const Grid g(std::vector<Axis>{Axis::from_bounds(-1, 1, 32), Axis::from_bounds(-1, 1, 16)});
    auto slope = GridField::sample(g, [](std::span<const double> x) { return x[0] + x[1]; });
    const double h0 = g.axis(0).h, h1 = g.axis(1).h;
    EXPECT_NEAR(stable_dt(slope, cfg), 0.4 / (4.0 / (h0 * h0) + 4.0 / (h1 * h1)), 1e-15);

    const Grid fine(std::vector<Axis>{Axis::from_bounds(-1, 1, 64), Axis::from_bounds(-1, 1, 32)});
    auto slope_fine = GridField::sample(fine, [](std::span<const double> x) { return x[0] + x[1]; });
    EXPECT_NEAR(stable_dt(slope_fine, cfg) * 4.0, stable_dt(slope, cfg), 1e-15);
}

TEST(Solver, StableDtForConstantIsDtMax)
{
    const auto e = derive_exponents(make_pvector({3, 4}));
    auto cfg = config(e, 1.0);
    cfg.dt_max = 0.125;
    GridField c(Grid::cube(2, 1.0, 10), 3.0);
    EXPECT_EQ(stable_dt(c, cfg), 0.125);
    c.values[5] = std::nan("");
    EXPECT_THROW(stable_dt(c, cfg), NumericalError);
}

TEST(Solver, ConfigValidation)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    auto cfg = config(e, 1.0);
    cfg.cfl_safety = 1.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg.cfl_safety = 0.4;
    cfg.eps_reg = -1.0;
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg.eps_reg = 0.0;
    cfg.bc = BoundaryKind::dirichlet;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Solver, FluxMatchesGeneralFormula)
{
    for (double p : {2.5, 3.0, 4.0, 5.5}) {
        const Flux f(p, 0.0);
        const Flux r(p, 0.3);
        for (double g : {-2.0, -0.5, 0.0, 0.1, 1.7}) {
            EXPECT_NEAR(f(g), std::pow(std::abs(g), p - 2) * g, 1e-14);
            EXPECT_NEAR(r(g), std::pow(g * g + 0.09, (p - 2) / 2) * g, 1e-14);
        }
    }
}

TEST(Solver, ConstantIsPreserved)
{
    const auto e = derive_exponents(make_pvector({Rational(5, 2), 4}));
    auto cfg = config(e, 0.5);
    cfg.output_dt = 0.1;
    GridField c(Grid::cube(2, 1.0, 12), 1.25);
    EXPECT_EQ(step_explicit(c, 0.01, cfg).values, c.values);
    const auto res = solve(c, cfg);
    for (double v : res.field.values)
        EXPECT_EQ(v, 1.25);
    EXPECT_GE(res.field.t_last(), cfg.t_end - 1e-12);
}

TEST(Solver, MassConservedUnderZeroFlux)
{
    const auto e = derive_exponents(make_pvector({3, 4}));
    auto cfg = config(e, 0.05);
    const Grid g = Grid::cube(2, 1.2, 48);
    const auto u0 = bump(g);
    const auto res = solve(u0, cfg);
    EXPECT_GT(res.report.steps, 10u);
    EXPECT_LE(res.report.mass_drift, 1e-12 * static_cast<double>(res.report.steps));
}

TEST(Solver, PlanarDataMatchesOneDimensionalOracle)
{
    const auto e = derive_exponents(make_pvector({3, Rational(7, 2)}));
    const Grid g(std::vector<Axis>{Axis::from_bounds(-1, 1, 40), Axis::from_bounds(-1, 1, 7)});
    auto u0 = GridField::sample(g, [](std::span<const double> x) { return std::cos(2.0 * x[0]) + 0.3 * x[0]; });
    auto cfg = config(e, 0.02);
    const double dt = 0.5 * stable_dt(u0, cfg);
    const std::size_t steps = 40;
    cfg.t_end = dt * static_cast<double>(steps);
    cfg.fixed_dt = dt;
    const auto res = solve(u0, cfg);
    ASSERT_EQ(res.report.steps, steps);

    std::vector<double> line;
    for (std::size_t j = 0; j < g.axis(0).n; ++j)
        line.push_back(u0.values[j * g.stride(0)]);
    const auto oracle = oracle_1d(line, 3.0, g.axis(0).h, dt, steps);
    auto last = res.field.level(res.field.levels - 1);
    for (std::size_t k = 0; k < g.size(); ++k)
        EXPECT_NEAR(last[k], oracle[g.coord_index(k, 0)], 1e-13);
}

TEST(Solver, ComparisonPrincipleOnRandomPairs)
{
    const auto e = derive_exponents(make_pvector({3, 4}));
    const auto cfg = config(e, 1.0);
    const Grid g = Grid::cube(2, 1.0, 20);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        GridField u(g), v(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            u.values[k] = unif(rng);
            v.values[k] = u.values[k] + unif(rng) * unif(rng);
        }
        for (int s = 0; s < 50; ++s) {
            const double dt = std::min(stable_dt(u, cfg), stable_dt(v, cfg));
            u = step_explicit(u, dt, cfg);
            v = step_explicit(v, dt, cfg);
            for (std::size_t k = 0; k < g.size(); ++k)
                ASSERT_LE(u.values[k], v.values[k]);
        }
    }
}

TEST(Solver, MaximumPrinciple)
{
    const auto e = derive_exponents(make_pvector({Rational(5, 2), Rational(9, 2)}));
    auto cfg = config(e, 0.02);
    cfg.output_dt = 0.005;
    const Grid g = Grid::cube(2, 1.0, 24);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 2.0);
    GridField u0(g);
    for (auto& v : u0.values)
        v = unif(rng);
    const double lo = *std::min_element(u0.values.begin(), u0.values.end());
    const double hi = *std::max_element(u0.values.begin(), u0.values.end());
    const auto res = solve(u0, cfg);
    for (double v : res.field.values) {
        EXPECT_GE(v, lo);
        EXPECT_LE(v, hi);
    }
}

TEST(Solver, DirichletLinearSteadyState)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    auto cfg = config(e, 0.05);
    cfg.bc = BoundaryKind::dirichlet;
    auto lin = [](std::span<const double> x, double) { return 0.5 * x[0] - 0.25 * x[1] + 1.0; };
    cfg.dirichlet = lin;
    const Grid g = Grid::cube(2, 1.0, 20);
    const auto u0 = GridField::sample(g, [&](std::span<const double> x) { return lin(x, 0.0); });
    const auto res = solve(u0, cfg);
    auto last = res.field.level(res.field.levels - 1);
    for (std::size_t k = 0; k < g.size(); ++k)
        EXPECT_NEAR(last[k], u0.values[k], 1e-13);
}

TEST(Solver, InstabilityIsReported)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    const auto cfg = config(e, 1.0);
    auto u = bump(Grid::cube(2, 1.0, 16));
    const double dt = 1e3 * stable_dt(u, cfg);
    try {
        for (std::size_t s = 0; s < 500; ++s)
            u = step_explicit(u, dt, cfg, 0.0, s);
        FAIL() << "expected a non-finite blow-up";
    } catch (const NumericalError& err) {
        EXPECT_NE(std::string(err.what()).find("step"), std::string::npos);
    }
}

TEST(Solver, FixedDtAboveBoundRejected)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    auto cfg = config(e, 0.01);
    const auto u = bump(Grid::cube(2, 1.0, 30));
    cfg.fixed_dt = 10.0 * stable_dt(u, cfg);
    EXPECT_THROW(solve(u, cfg), NumericalError);
}

TEST(Solver, ThreadCountDoesNotChangeOutput)
{
    const auto e = derive_exponents(make_pvector({3, 4}));
    auto cfg = config(e, 0.02);
    const auto u0 = bump(Grid::cube(2, 1.0, 40));
    const auto a = solve(u0, cfg);
    cfg.threads = 4;
    const auto b = solve(u0, cfg);
    EXPECT_EQ(a.field.values, b.field.values);
}

namespace {

SpaceTimeField smooth_test_function(const SpaceTimeField& like, double seed_phase)
{
    return SpaceTimeField::sample(like.grid, like.t0, like.dt, like.levels, [&](std::span<const double> x, double t) {
        double v = 1.0;
        for (double xi : x) {
            const double r = std::max(0.0, 0.81 - xi * xi);
            v *= r * r;
        }
        return v * (1.0 + 0.5 * std::sin(3.0 * x[0] + seed_phase) * std::cos(2.0 * x[1] - t));
    });
}

}  // namespace

TEST(Solver, WeakResidualTrivialCases)
{
    const auto e = derive_exponents(make_pvector({3, 3}));
    const Grid g = Grid::cube(2, 1.0, 20);
    SpaceTimeField c(g, 0.0, 0.1, 11, 2.0);
    SpaceTimeField zero(g, 0.0, 0.1, 11, 0.0);
    EXPECT_EQ(weak_residual(c, zero, e, 0.0, 1.0).residual, 0.0);
    const auto phi = smooth_test_function(c, 0.3);
    const auto r = weak_residual(c, phi, e, 0.2, 0.9);
    EXPECT_LT(std::abs(r.residual), 1e-14);
    EXPECT_GT(r.scale, 0.1);

    SpaceTimeField bad(g, 0.0, 0.1, 11, 1.0);
    EXPECT_THROW(weak_residual(c, bad, e, 0.0, 1.0), DomainError);
    EXPECT_THROW(weak_residual(c, phi, e, 0.05, 1.0), DomainError);
}

TEST(Solver, WeakResidualDecreasesUnderRefinement)
{
    const auto e = derive_exponents(make_pvector({3, 4}));
    auto residual = [&](std::size_t n) {
        const Grid g = Grid::cube(2, 1.0, n);
        const auto u0 = bump(g);
        auto cfg = config(e, 0.02);
        const double dt = 0.5 * stable_dt(u0, cfg);
        const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / dt));
        cfg.fixed_dt = cfg.t_end / static_cast<double>(steps);
        cfg.output_dt = cfg.fixed_dt;
        const auto res = solve(u0, cfg);
        const auto phi = smooth_test_function(res.field, 0.7);
        return weak_residual(res.field, phi, e, 0.0, res.field.t_last()).relative;
    };
    const double coarse = residual(24);
    const double fine = residual(48);
    EXPECT_LT(fine, coarse);
    EXPECT_LT(fine, 1e-3);
}
