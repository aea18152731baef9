#ifndef ANISO_FOKKER_PLANCK_HPP
#define ANISO_FOKKER_PLANCK_HPP

// Steady states of the anisotropic Fokker-Planck equation
//     dw/dt = sum_i d_i( |d_i w|^{p_i - 2} d_i w + alpha_i y_i w )
// on a truncated box with zero-flux walls, and the self-similar solutions
// B(y, t) = t^{-alpha} w(t^{-alpha_i} y_i) they generate.

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "aniso/grid.hpp"
#include "aniso/parallel.hpp"
#include "aniso/params.hpp"
#include "aniso/scaling.hpp"
#include "aniso/solver.hpp"

namespace aniso {

struct FpConfig
{
    double cfl_safety = 0.4;
    double tol = 1e-8;
    std::size_t max_steps = 20'000'000;
    double eps_reg = 0.0;
    std::size_t history_every = 1000;
    int threads = 1;

    void validate() const
    {
        if (!(cfl_safety > 0.0 && cfl_safety < 1.0))
            throw ValidationError("fokker_planck cfl_safety must lie in (0, 1)");
        if (!(tol > 0.0))
            throw ValidationError("fokker_planck tol must be positive");
        if (max_steps == 0)
            throw ValidationError("fokker_planck max_steps must be positive");
    }
};

namespace detail {

// Face coordinate between nodes j and j + 1 of an axis.
inline double face(const Axis& a, std::size_t j)
{
    return a.center + (static_cast<double>(j) + 1.0 - 0.5 * static_cast<double>(a.n)) * a.h;
}

inline double max_face_speed(const Axis& a, double alpha)
{
    return std::abs(alpha) * std::max(std::abs(face(a, 0)), std::abs(face(a, a.n - 2)));
}

}  // namespace detail

// Combined diffusion + drift bound: cfl / sum_i (2 D_i / h_i^2 + alpha_i max|y_i| / h_i).
inline double fp_stable_dt(const GridField& w, const AnisoExponents& e, const FpConfig& cfg)
{
    if (!all_finite(w.values))
        throw NumericalError("fp_stable_dt: field contains non-finite values");
    const Grid& g = w.grid;
    double denom = 0.0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const Axis& a = g.axis(i);
        const Flux flux(e.p_d[i], cfg.eps_reg);
        const std::size_t s = g.stride(i);
        double dmax = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.coord_index(k, i) + 1 < a.n)
                dmax = std::max(dmax, flux.diffusivity((w.values[k + s] - w.values[k]) / a.h));
        denom += 2.0 * dmax / (a.h * a.h) + detail::max_face_speed(a, e.alpha_i_d[i]) / a.h;
    }
    return denom > 0.0 ? cfg.cfl_safety / denom : std::numeric_limits<double>::infinity();
}

namespace detail {

// Right-hand side of the conservative update; the drift velocity -alpha_i y
// is upwinded at each face.
inline void fp_rhs(const Grid& g, std::span<const double> w, const std::vector<Flux>& fluxes,
                   const std::vector<double>& alpha, std::span<double> out, int threads)
{
    const std::size_t n = g.dim();
    parallel_for(g.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Axis& a = g.axis(i);
                const std::size_t s = g.stride(i);
                const std::size_t j = g.coord_index(k, i);
                auto face_flux = [&](std::size_t lo_node, std::size_t jf) {
                    const double wl = w[lo_node];
                    const double wr = w[lo_node + s];
                    const double v = -alpha[i] * face(a, jf);
                    const double adv = v > 0.0 ? v * wl : v * wr;
                    return fluxes[i]((wr - wl) / a.h) - adv;
                };
                const double right = j + 1 < a.n ? face_flux(k, j) : 0.0;
                const double left = j > 0 ? face_flux(k - s, j - 1) : 0.0;
                acc += (right - left) / a.h;
            }
            out[k] = acc;
        }
    });
}

}  // namespace detail

inline GridField fp_step(const GridField& w, double dt, const AnisoExponents& e, const FpConfig& cfg = {},
                         std::size_t step_index = 0)
{
    check_same_dim(w.grid.dim(), e.dim(), "fp_step");
    GridField out(w.grid);
    detail::fp_rhs(w.grid, w.values, detail::make_fluxes(e, cfg.eps_reg), e.alpha_i_d, out.values, cfg.threads);
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = w.values[k] + dt * out.values[k];
    detail::check_finite_step(out.values, w.grid, step_index, "fp_step");
    return out;
}

struct FpHistoryEntry
{
    std::size_t step = 0;
    double time = 0.0;
    double rate = 0.0;
    double mass = 0.0;
};

struct FpResult
{
    GridField w;
    bool converged = false;
    std::size_t steps = 0;
    double time = 0.0;
    double rate = 0.0;  // final ||w^{n+1} - w^n||_inf / dt
    double mass_initial = 0.0;
    double mass_final = 0.0;
    double mass_drift = 0.0;  // relative
    std::vector<double> support_radius;
    bool touches_wall = false;
    std::vector<FpHistoryEntry> history;
    double runtime_s = 0.0;
};

// Largest |y_i - c_i| over nodes with w > threshold * max w, per axis.
inline std::vector<double> support_radius(const GridField& w, double threshold = 1e-10)
{
    const Grid& g = w.grid;
    const double cut = threshold * max_abs(w.values);
    std::vector<double> r(g.dim(), 0.0);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(w.values[k] > cut))
            continue;
        for (std::size_t i = 0; i < g.dim(); ++i) {
            const Axis& a = g.axis(i);
            r[i] = std::max(r[i], std::abs(a.node(g.coord_index(k, i)) - a.center));
        }
    }
    return r;
}

// Support reaches the two outermost node layers of some axis.
inline bool support_touches_wall(const GridField& w, double threshold = 1e-10)
{
    const Grid& g = w.grid;
    const double cut = threshold * max_abs(w.values);
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!(w.values[k] > cut))
            continue;
        for (std::size_t i = 0; i < g.dim(); ++i) {
            const std::size_t j = g.coord_index(k, i);
            if (j < 2 || j + 2 >= g.axis(i).n)
                return true;
        }
    }
    return false;
}

inline FpResult fp_solve_steady(const GridField& w0, const AnisoExponents& e, const FpConfig& cfg = {})
{
    cfg.validate();
    check_same_dim(w0.grid.dim(), e.dim(), "fp_solve_steady");
    for (double v : w0.values)
        if (!(v >= 0.0))
            throw DomainError("fp_solve_steady: initial data must be nonnegative and finite");
    const auto clock_start = std::chrono::steady_clock::now();
    FpResult res;
    res.mass_initial = integrate(w0);
    if (!(res.mass_initial > 0.0))
        throw DomainError("fp_solve_steady: initial data must have positive mass");

    const Grid& g = w0.grid;
    const auto fluxes = detail::make_fluxes(e, cfg.eps_reg);
    GridField w = w0;
    std::vector<double> rhs(g.size());
    while (res.steps < cfg.max_steps) {
        const double dt = fp_stable_dt(w, e, cfg);
        detail::fp_rhs(g, w.values, fluxes, e.alpha_i_d, rhs, cfg.threads);
        const double rate = max_abs(rhs);
        for (std::size_t k = 0; k < rhs.size(); ++k)
            w.values[k] += dt * rhs[k];
        detail::check_finite_step(w.values, g, res.steps, "fp_solve_steady");
        ++res.steps;
        res.time += dt;
        res.rate = rate;
        const bool done = rate < cfg.tol;
        if (cfg.history_every > 0 && (res.steps % cfg.history_every == 0 || res.steps == 1 || done))
            res.history.push_back({res.steps, res.time, rate, integrate(w)});
        if (done) {
            res.converged = true;
            break;
        }
    }
    res.mass_final = integrate(w);
    res.mass_drift = std::abs(res.mass_final - res.mass_initial) / res.mass_initial;
    res.support_radius = support_radius(w);
    res.touches_wall = support_touches_wall(w);
    res.w = std::move(w);
    res.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return res;
}

// Product of hat profiles of the given radius, scaled to unit discrete mass.
inline GridField default_fp_initial(const Grid& g, double radius = 1.0)
{
    GridField w = GridField::sample(g, [&](std::span<const double> y) {
        double v = 1.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            v *= std::max(0.0, 1.0 - std::abs(y[i] - g.axis(i).center) / radius);
        return v;
    });
    const double m = integrate(w);
    if (!(m > 0.0))
        throw DomainError("default_fp_initial: hat radius below grid resolution");
    for (double& v : w.values)
        v /= m;
    return w;
}

// Grid whose nodes map onto w's nodes under y -> t^{-alpha_i} y.
inline Grid barenblatt_grid(const Grid& g, double t, const AnisoExponents& e)
{
    std::vector<Axis> axes;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const double s = std::pow(t, e.alpha_i_d[i]);
        const Axis& a = g.axis(i);
        axes.push_back(Axis{a.center * s, a.h * s, a.n});
    }
    return Grid(std::move(axes));
}

// B(y, t) = t^{-alpha} w(t^{-alpha_i} y_i) on the target grid (default: the
// grid that maps exactly onto w's nodes).
inline GridField barenblatt_from_steady(const GridField& w, double t, const AnisoExponents& e,
                                        const std::optional<Grid>& target = std::nullopt)
{
    if (!(t > 0.0))
        throw DomainError("barenblatt_from_steady requires t > 0, got " + std::to_string(t));
    check_same_dim(w.grid.dim(), e.dim(), "barenblatt_from_steady");
    const Grid tgt = target ? *target : barenblatt_grid(w.grid, t, e);
    GridField out(tgt);
    const double amp = std::pow(t, -e.alpha_d);
    std::vector<AxisStencil> st(tgt.dim());
    std::vector<std::vector<AxisStencil>> axis_st(tgt.dim());
    for (std::size_t i = 0; i < tgt.dim(); ++i) {
        const Axis& a = tgt.axis(i);
        const double s = std::pow(t, -e.alpha_i_d[i]);
        axis_st[i].resize(a.n);
        for (std::size_t j = 0; j < a.n; ++j)
            if (!locate(w.grid.axis(i), s * a.node(j), axis_st[i][j]))
                throw OutOfDomainError("barenblatt_from_steady: rescaled node " + std::to_string(s * a.node(j)) +
                                       " on axis " + std::to_string(i) + " escapes the steady-state box");
    }
    for (std::size_t k = 0; k < tgt.size(); ++k) {
        for (std::size_t i = 0; i < tgt.dim(); ++i)
            st[i] = axis_st[i][tgt.coord_index(k, i)];
        out.values[k] = amp * interpolate(w.grid, w.values, st);
    }
    return out;
}

// The space-time family B(y, t) on a fixed grid. Points whose rescaled image
// leaves w's box take the value 0, which requires w to vanish on the box's
// outer node layer.
inline SpaceTimeField barenblatt_family(const GridField& w, const AnisoExponents& e, const Grid& grid, double t0,
                                        double dt, std::size_t levels)
{
    check_same_dim(w.grid.dim(), e.dim(), "barenblatt_family");
    if (!(t0 > 0.0))
        throw DomainError("barenblatt_family requires t0 > 0");
    const double peak = max_abs(w.values);
    for (std::size_t k = 0; k < w.grid.size(); ++k)
        if (w.grid.on_boundary(k) && std::abs(w.values[k]) > 1e-12 * peak)
            throw OutOfDomainError("barenblatt_family: steady state does not vanish at the box wall, "
                                   "cannot extend it by zero");
    SpaceTimeField out(grid, t0, dt, levels);
    const std::size_t n = grid.dim();
    std::vector<AxisStencil> st(n);
    std::vector<std::vector<AxisStencil>> axis_st(n);
    std::vector<std::vector<char>> inside(n);
    for (std::size_t l = 0; l < levels; ++l) {
        const double t = out.time(l);
        for (std::size_t i = 0; i < n; ++i) {
            const Axis& a = grid.axis(i);
            const double s = std::pow(t, -e.alpha_i_d[i]);
            axis_st[i].resize(a.n);
            inside[i].resize(a.n);
            for (std::size_t j = 0; j < a.n; ++j)
                inside[i][j] = locate(w.grid.axis(i), s * a.node(j), axis_st[i][j]);
        }
        const double amp = std::pow(t, -e.alpha_d);
        auto lv = out.level(l);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            bool in = true;
            for (std::size_t i = 0; i < n && in; ++i) {
                const std::size_t j = grid.coord_index(k, i);
                in = inside[i][j];
                st[i] = axis_st[i][j];
            }
            lv[k] = in ? amp * interpolate(w.grid, w.values, st) : 0.0;
        }
    }
    return out;
}

// max_l sum|W_l - W_0| / sum|W_0|: zero for a field constant in time.
inline double time_independence_defect(const SpaceTimeField& w)
{
    auto first = w.level(0);
    Accumulator norm;
    for (double v : first)
        norm.add(std::abs(v));
    if (norm.value() == 0.0)
        throw DomainError("time_independence_defect: first level vanishes identically");
    double worst = 0.0;
    for (std::size_t l = 1; l < w.levels; ++l) {
        auto lv = w.level(l);
        Accumulator d;
        for (std::size_t k = 0; k < lv.size(); ++k)
            d.add(std::abs(lv[k] - first[k]));
        worst = std::max(worst, d.value() / norm.value());
    }
    return worst;
}

}  // namespace aniso

#endif  // ANISO_FOKKER_PLANCK_HPP
