#ifndef ANISO_SOLVER_HPP
#define ANISO_SOLVER_HPP

// Explicit conservative finite differences for
//     du/dt = sum_i d_i( |d_i u|^{p_i - 2} d_i u )
// on a cell-centred tensor grid, and the discrete weak residual used to
// certify the output.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aniso/grid.hpp"
#include "aniso/parallel.hpp"
#include "aniso/params.hpp"

namespace aniso {

// Phi(g) = (g^2 + eps^2)^{(p-2)/2} g
class Flux
{
public:
    Flux(double p, double eps) : p_(p), q_(p - 2.0), eps2_(eps * eps)
    {
        if (eps2_ == 0.0 && q_ == 1.0)
            mode_ = Mode::cubic;
        else if (eps2_ == 0.0 && q_ == 2.0)
            mode_ = Mode::quartic;
    }

    double operator()(double g) const
    {
        switch (mode_) {
        case Mode::cubic:
            return std::abs(g) * g;
        case Mode::quartic:
            return g * g * g;
        case Mode::general:
            break;
        }
        if (g == 0.0)
            return 0.0;
        const double m = eps2_ == 0.0 ? std::abs(g) : std::sqrt(g * g + eps2_);
        return std::pow(m, q_) * g;
    }

    // Frozen-coefficient diffusivity bound (p - 1) |g|^{p-2}.
    double diffusivity(double g) const
    {
        const double m = eps2_ == 0.0 ? std::abs(g) : std::sqrt(g * g + eps2_);
        if (m == 0.0)
            return 0.0;
        return (p_ - 1.0) * (q_ == 1.0 ? m : std::pow(m, q_));
    }

    double p() const { return p_; }

private:
    enum class Mode { general, cubic, quartic };
    double p_;
    double q_;
    double eps2_;
    Mode mode_ = Mode::general;
};

enum class BoundaryKind { zero_flux, dirichlet };

inline const char* to_string(BoundaryKind b)
{
    return b == BoundaryKind::zero_flux ? "zero-flux" : "dirichlet";
}

// Boundary trace g(x, t), evaluated at ghost nodes one cell outside the grid.
using TraceFunction = std::function<double(std::span<const double>, double)>;

struct SolverConfig
{
    AnisoExponents exps;
    BoundaryKind bc = BoundaryKind::zero_flux;
    TraceFunction dirichlet;
    double cfl_safety = 0.4;
    double eps_reg = 0.0;
    double t0 = 0.0;
    double t_end = 1.0;
    double output_dt = 0.0;  // spacing of the stored levels; 0 stores only t0 and t_end
    double dt_max = 1.0;     // step used when the frozen diffusivity vanishes
    double fixed_dt = 0.0;   // > 0 forces this internal step (must satisfy the CFL bound)
    int threads = 1;

    void validate() const
    {
        if (!(cfl_safety > 0.0 && cfl_safety < 1.0))
            throw ValidationError("cfl_safety must lie in (0, 1), got " + std::to_string(cfl_safety));
        if (!(eps_reg >= 0.0))
            throw ValidationError("eps_reg must be >= 0, got " + std::to_string(eps_reg));
        if (!(t_end > t0))
            throw ValidationError("t_end must exceed t0");
        if (!(output_dt >= 0.0))
            throw ValidationError("output_dt must be >= 0");
        if (!(dt_max > 0.0))
            throw ValidationError("dt_max must be positive");
        if (!(fixed_dt >= 0.0))
            throw ValidationError("fixed_dt must be >= 0");
        if (bc == BoundaryKind::dirichlet && !dirichlet)
            throw ValidationError("dirichlet boundary requires trace data");
    }
};

namespace detail {

inline std::vector<Flux> make_fluxes(const AnisoExponents& e, double eps)
{
    std::vector<Flux> f;
    for (double p : e.p_d)
        f.emplace_back(p, eps);
    return f;
}

// Ghost values for a Dirichlet boundary: ghosts[i][2 * rest + side] holds the
// value one cell beyond the face on side 0 (low) or 1 (high) of axis i, for the
// line of nodes indexed by `rest` (the flat index with coordinate i set to 0).
struct Ghosts
{
    std::vector<std::vector<double>> values;
};

inline Ghosts make_ghosts(const Grid& g, const TraceFunction& trace, double t)
{
    Ghosts gh;
    gh.values.resize(g.dim());
    std::vector<double> x(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) {
        auto& v = gh.values[i];
        v.assign(2 * g.size(), 0.0);
        const Axis& a = g.axis(i);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (g.coord_index(k, i) != 0)
                continue;
            g.node(k, x);
            x[i] = a.first() - a.h;
            v[2 * k] = trace(x, t);
            x[i] = a.last() + a.h;
            v[2 * k + 1] = trace(x, t);
        }
    }
    return gh;
}

}  // namespace detail

// cfl / sum_i 2 max|Phi_i'(D_i^+ u)| / h_i^2, with Dirichlet ghost differences
// included; dt_max when every frozen diffusivity vanishes.
inline double stable_dt(const GridField& u, const SolverConfig& cfg, double t = 0.0)
{
    if (!all_finite(u.values))
        throw NumericalError("stable_dt: field contains non-finite values");
    const Grid& g = u.grid;
    check_same_dim(g.dim(), cfg.exps.dim(), "stable_dt");
    const auto fluxes = detail::make_fluxes(cfg.exps, cfg.eps_reg);
    std::optional<detail::Ghosts> ghosts;
    if (cfg.bc == BoundaryKind::dirichlet)
        ghosts = detail::make_ghosts(g, cfg.dirichlet, t);
    double denom = 0.0;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const Axis& a = g.axis(i);
        const std::size_t s = g.stride(i);
        double dmax = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const std::size_t j = g.coord_index(k, i);
            if (j + 1 < a.n)
                dmax = std::max(dmax, fluxes[i].diffusivity((u.values[k + s] - u.values[k]) / a.h));
            if (ghosts) {
                const std::size_t base = k - j * s;
                if (j == 0)
                    dmax = std::max(dmax, fluxes[i].diffusivity((u.values[k] - ghosts->values[i][2 * base]) / a.h));
                if (j + 1 == a.n)
                    dmax = std::max(dmax,
                                    fluxes[i].diffusivity((ghosts->values[i][2 * base + 1] - u.values[k]) / a.h));
            }
        }
        denom += 2.0 * dmax / (a.h * a.h);
    }
    if (denom == 0.0)
        return cfg.dt_max;
    return std::min(cfg.dt_max, cfg.cfl_safety / denom);
}

namespace detail {

// Divergence of the face fluxes at every node. A face flux is computed by the
// same expression from both sides, so the update telescopes and mirror images
// of the data give mirror images of the update.
inline void divergence(const Grid& g, std::span<const double> u, const std::vector<Flux>& fluxes,
                       const Ghosts* ghosts, std::span<double> out, int threads)
{
    const std::size_t n = g.dim();
    parallel_for(g.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const Axis& a = g.axis(i);
                const std::size_t s = g.stride(i);
                const std::size_t j = g.coord_index(k, i);
                double right = 0.0;
                double left = 0.0;
                if (j + 1 < a.n)
                    right = fluxes[i]((u[k + s] - u[k]) / a.h);
                else if (ghosts)
                    right = fluxes[i]((ghosts->values[i][2 * (k - j * s) + 1] - u[k]) / a.h);
                if (j > 0)
                    left = fluxes[i]((u[k] - u[k - s]) / a.h);
                else if (ghosts)
                    left = fluxes[i]((u[k] - ghosts->values[i][2 * k]) / a.h);
                acc += (right - left) / a.h;
            }
            out[k] = acc;
        }
    });
}

inline void check_finite_step(std::span<const double> v, const Grid& g, std::size_t step, const char* what)
{
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!std::isfinite(v[k]))
            throw NumericalError(std::string(what) + ": non-finite value at step " + std::to_string(step) +
                                 ", node " + std::to_string(k) + " " + format_point(g.node(k)) +
                                 " (time step above the stability bound?)");
}

}  // namespace detail

// u^{n+1} = u^n + dt sum_i D_i^-( Phi_i(D_i^+ u^n) )
inline GridField step_explicit(const GridField& u, double dt, const SolverConfig& cfg, double t = 0.0,
                               std::size_t step_index = 0)
{
    check_same_dim(u.grid.dim(), cfg.exps.dim(), "step_explicit");
    const auto fluxes = detail::make_fluxes(cfg.exps, cfg.eps_reg);
    std::optional<detail::Ghosts> ghosts;
    if (cfg.bc == BoundaryKind::dirichlet)
        ghosts = detail::make_ghosts(u.grid, cfg.dirichlet, t);
    GridField out(u.grid);
    detail::divergence(u.grid, u.values, fluxes, ghosts ? &*ghosts : nullptr, out.values, cfg.threads);
    for (std::size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = u.values[k] + dt * out.values[k];
    detail::check_finite_step(out.values, u.grid, step_index, "step_explicit");
    return out;
}

struct SolveReport
{
    std::size_t steps = 0;
    double dt_min = 0.0;
    double dt_max = 0.0;
    std::vector<std::size_t> steps_per_level;  // internal steps between consecutive stored levels
    double mass_initial = 0.0;
    double mass_final = 0.0;
    double mass_drift = 0.0;  // |mass_final - mass_initial| / sum |u0| cell-weighted
    double runtime_s = 0.0;
    std::string scheme = "explicit conservative face-flux, forward-Euler, frozen-coefficient CFL";
};

struct SolveResult
{
    SpaceTimeField field;
    SolveReport report;
};

// Marches from cfg.t0 to (at least) cfg.t_end, storing uniformly spaced levels.
inline SolveResult solve(const GridField& initial, const SolverConfig& cfg)
{
    cfg.validate();
    check_same_dim(initial.grid.dim(), cfg.exps.dim(), "solve");
    if (!all_finite(initial.values))
        throw NumericalError("solve: initial data contains non-finite values");
    const auto clock_start = std::chrono::steady_clock::now();

    const double span = cfg.t_end - cfg.t0;
    std::size_t intervals = 1;
    if (cfg.output_dt > 0.0) {
        const double r = span / cfg.output_dt;
        intervals = static_cast<std::size_t>(std::ceil(r - 1e-9 * std::max(1.0, r)));
        intervals = std::max<std::size_t>(intervals, 1);
    }
    const double out_dt = cfg.output_dt > 0.0 ? cfg.output_dt : span;

    SolveResult res{SpaceTimeField(initial.grid, cfg.t0, out_dt, intervals + 1), {}};
    SolveReport& rep = res.report;
    res.field.set_level(0, initial);

    const auto fluxes = detail::make_fluxes(cfg.exps, cfg.eps_reg);
    std::vector<double> u = initial.values;
    std::vector<double> div(u.size());
    Accumulator abs0;
    for (double v : u)
        abs0.add(std::abs(v));
    rep.mass_initial = integrate(initial);
    rep.dt_min = std::numeric_limits<double>::infinity();

    double t = cfg.t0;
    GridField view(initial.grid);
    for (std::size_t l = 1; l <= intervals; ++l) {
        const double target = cfg.t0 + static_cast<double>(l) * out_dt;
        std::size_t local = 0;
        while (t < target) {
            view.values = u;
            const double bound = stable_dt(view, cfg, t);
            double dt = bound;
            if (cfg.fixed_dt > 0.0) {
                if (cfg.fixed_dt > bound * (1.0 + 1e-12))
                    throw NumericalError("solve: fixed_dt " + std::to_string(cfg.fixed_dt) +
                                         " exceeds the stability bound " + std::to_string(bound) + " at step " +
                                         std::to_string(rep.steps));
                dt = cfg.fixed_dt;
            }
            const double remaining = target - t;
            if (dt >= remaining * (1.0 - 1e-12))
                dt = remaining;
            std::optional<detail::Ghosts> ghosts;
            if (cfg.bc == BoundaryKind::dirichlet)
                ghosts = detail::make_ghosts(initial.grid, cfg.dirichlet, t);
            detail::divergence(initial.grid, u, fluxes, ghosts ? &*ghosts : nullptr, div, cfg.threads);
            for (std::size_t k = 0; k < u.size(); ++k)
                u[k] += dt * div[k];
            detail::check_finite_step(u, initial.grid, rep.steps, "solve");
            t = dt == remaining ? target : t + dt;
            rep.dt_min = std::min(rep.dt_min, dt);
            rep.dt_max = std::max(rep.dt_max, dt);
            ++rep.steps;
            ++local;
        }
        rep.steps_per_level.push_back(local);
        std::copy(u.begin(), u.end(), res.field.level(l).begin());
    }
    view.values = u;
    rep.mass_final = integrate(view);
    const double scale = abs0.value() * initial.grid.cell_volume();
    rep.mass_drift = scale > 0.0 ? std::abs(rep.mass_final - rep.mass_initial) / scale : 0.0;
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return res;
}

struct WeakResidual
{
    double residual = 0.0;  // left side of the integral identity
    double scale = 0.0;     // sum of the magnitudes of its terms
    double relative = 0.0;  // residual / scale (0 when scale is 0)
    std::size_t level_lo = 0;
    std::size_t level_hi = 0;
};

// Discrete weak form on the stored levels between t1 and t2:
//   h^N [sum u phi]_{t1}^{t2} + sum_n dt h^N sum ( -u^n D_t^+ phi^n + sum_i Phi_i(D_i^+ u^n) D_i^+ phi^n ).
// phi must vanish on the boundary layer of nodes.
inline WeakResidual weak_residual(const SpaceTimeField& u, const SpaceTimeField& phi, const AnisoExponents& e,
                                  double t1, double t2, double eps_reg = 0.0)
{
    u.validate();
    phi.validate();
    if (!(u.grid == phi.grid) || u.levels != phi.levels || u.t0 != phi.t0 || u.dt != phi.dt)
        throw ValidationError("weak_residual: test function must share the field's grid and levels");
    check_same_dim(u.grid.dim(), e.dim(), "weak_residual");
    const Grid& g = u.grid;
    for (std::size_t l = 0; l < phi.levels; ++l) {
        auto lv = phi.level(l);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.on_boundary(k) && lv[k] != 0.0)
                throw DomainError("weak_residual: test function is not compactly supported (nonzero at boundary node " +
                                  format_point(g.node(k), phi.time(l)) + ")");
    }
    const double tol = time_eps(u.dt);
    const auto to_level = [&](double t) {
        const double r = (t - u.t0) / u.dt;
        const double j = std::round(r);
        if (std::abs(r - j) * u.dt > tol || j < 0 || j > static_cast<double>(u.levels - 1))
            throw DomainError("weak_residual: window endpoint t = " + std::to_string(t) +
                              " is not a stored level");
        return static_cast<std::size_t>(j);
    };
    WeakResidual res;
    res.level_lo = to_level(t1);
    res.level_hi = to_level(t2);
    if (!(res.level_lo < res.level_hi))
        throw DomainError("weak_residual: empty time window");

    const auto fluxes = detail::make_fluxes(e, eps_reg);
    const double hv = g.cell_volume();
    Accumulator total;
    Accumulator magnitude;
    auto add = [&](double v) {
        total.add(v);
        magnitude.add(std::abs(v));
    };
    {
        auto ub = u.level(res.level_hi);
        auto pb = phi.level(res.level_hi);
        auto ua = u.level(res.level_lo);
        auto pa = phi.level(res.level_lo);
        for (std::size_t k = 0; k < g.size(); ++k) {
            add(hv * ub[k] * pb[k]);
            add(-hv * ua[k] * pa[k]);
        }
    }
    for (std::size_t n = res.level_lo; n < res.level_hi; ++n) {
        auto un = u.level(n);
        auto pn = phi.level(n);
        auto pn1 = phi.level(n + 1);
        for (std::size_t k = 0; k < g.size(); ++k) {
            add(-hv * un[k] * (pn1[k] - pn[k]));
            for (std::size_t i = 0; i < g.dim(); ++i) {
                const Axis& a = g.axis(i);
                const std::size_t s = g.stride(i);
                if (g.coord_index(k, i) + 1 >= a.n)
                    continue;
                const double du = (un[k + s] - un[k]) / a.h;
                const double dp = (pn[k + s] - pn[k]) / a.h;
                if (dp != 0.0)
                    add(u.dt * hv * fluxes[i](du) * dp);
            }
        }
    }
    res.residual = total.value();
    res.scale = magnitude.value();
    res.relative = res.scale > 0.0 ? res.residual / res.scale : 0.0;
    return res;
}

}  // namespace aniso

#endif  // ANISO_SOLVER_HPP
