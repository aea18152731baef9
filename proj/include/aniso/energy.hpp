#ifndef ANISO_ENERGY_HPP
#define ANISO_ENERGY_HPP

// Both sides of the local energy estimate for truncations (u - k)_+- tested
// against product cut-offs, evaluated by node quadrature with forward
// differences.

#include <cmath>
#include <string>
#include <vector>

#include "aniso/cutoff.hpp"
#include "aniso/grid.hpp"
#include "aniso/params.hpp"
#include "aniso/scaling.hpp"

namespace aniso {

struct EnergySides
{
    double lhs = 0.0;
    double lhs_sup = 0.0;                 // sup over levels of int v^2 eta
    std::vector<double> lhs_gradient;     // int int |D_i^+(eta v)|^{p_i}
    double rhs_time = 0.0;                // int int v^2 |d_t eta|
    std::vector<double> rhs_space;        // int int v^{p_i} eta_hat_i |D_i^+ eta_i|^{p_i}
    double rhs = 0.0;                     // rhs_time + sum rhs_space
    double ratio = 0.0;                   // lhs / rhs (0 when rhs is 0)
    std::size_t level_lo = 0;
    std::size_t level_hi = 0;
};

// Window [s, t] snapped to stored levels; the double integrals use the
// left-point rule over levels lo .. hi-1, the sup runs over lo .. hi.
inline EnergySides energy_sides(const SpaceTimeField& u, double k, Sign sign, const CutoffSpec& spec,
                                const AnisoExponents& e, double s, double t)
{
    u.validate();
    check_same_dim(u.grid.dim(), e.dim(), "energy_sides");
    const Cutoff cut(spec, e);
    check_region(u, spec.outer);
    const Grid& g = u.grid;
    const std::size_t n = g.dim();
    const double tol = time_eps(u.dt);
    auto to_level = [&](double time, bool up) {
        const double r = (time - u.t0) / u.dt;
        double j = up ? std::ceil(r - tol / u.dt) : std::floor(r + tol / u.dt);
        j = std::clamp(j, 0.0, static_cast<double>(u.levels - 1));
        return static_cast<std::size_t>(j);
    };
    EnergySides out;
    out.level_lo = to_level(s, true);
    out.level_hi = to_level(t, false);
    if (!(out.level_lo < out.level_hi))
        throw DomainError("energy_sides: window [" + std::to_string(s) + ", " + std::to_string(t) +
                          "] contains fewer than two stored levels");

    // Separable cut-off factors at the nodes and at the forward neighbours.
    std::vector<std::vector<double>> eta_pow(n);   // eta_i(x_j)^{p_i}
    std::vector<std::vector<double>> deta(n);      // D_i^+ eta_i at node j
    for (std::size_t i = 0; i < n; ++i) {
        const Axis& a = g.axis(i);
        eta_pow[i].resize(a.n);
        deta[i].resize(a.n);
        for (std::size_t j = 0; j < a.n; ++j) {
            const double here = cut.eta_axis(i, a.node(j));
            const double next = cut.eta_axis(i, a.node(j) + a.h);
            eta_pow[i][j] = std::pow(here, e.p_d[i]);
            deta[i][j] = (next - here) / a.h;
        }
    }
    const double hv = g.cell_volume();
    out.lhs_gradient.assign(n, 0.0);
    out.rhs_space.assign(n, 0.0);
    std::vector<Accumulator> grad_acc(n);
    std::vector<Accumulator> space_acc(n);
    Accumulator time_acc;
    std::vector<double> eta_space(g.size());
    for (std::size_t k2 = 0; k2 < g.size(); ++k2) {
        double v = 1.0;
        for (std::size_t i = 0; i < n; ++i)
            v *= eta_pow[i][g.coord_index(k2, i)];
        eta_space[k2] = v;
    }

    for (std::size_t l = out.level_lo; l <= out.level_hi; ++l) {
        const double time = u.time(l);
        const double et = cut.eta_time(time);
        auto lv = u.level(l);
        Accumulator sup_acc;
        for (std::size_t q = 0; q < g.size(); ++q) {
            const double v = truncate(lv[q], k, sign);
            if (v != 0.0 && eta_space[q] != 0.0)
                sup_acc.add(v * v * et * eta_space[q]);
        }
        out.lhs_sup = std::max(out.lhs_sup, sup_acc.value() * hv);
        if (l == out.level_hi)
            break;

        const double det = (cut.eta_time(u.time(l + 1)) - et) / u.dt;
        for (std::size_t q = 0; q < g.size(); ++q) {
            const double v = truncate(lv[q], k, sign);
            if (det != 0.0 && v != 0.0)
                time_acc.add(v * v * std::abs(det) * eta_space[q]);
            for (std::size_t i = 0; i < n; ++i) {
                const Axis& a = g.axis(i);
                const std::size_t j = g.coord_index(q, i);
                // eta v at the forward neighbour; beyond the last node the
                // cut-off vanishes because the outer cylinder is interior.
                const double here = et * eta_space[q] * v;
                double next = 0.0;
                if (j + 1 < a.n) {
                    const double vn = truncate(lv[q + g.stride(i)], k, sign);
                    next = et * eta_space[q + g.stride(i)] * vn;
                }
                const double d = (next - here) / a.h;
                if (d != 0.0)
                    grad_acc[i].add(std::pow(std::abs(d), e.p_d[i]));
                if (v != 0.0 && deta[i][j] != 0.0) {
                    double hat = et;
                    for (std::size_t m = 0; m < n; ++m)
                        if (m != i)
                            hat *= eta_pow[m][g.coord_index(q, m)];
                    if (hat != 0.0)
                        space_acc[i].add(std::pow(v, e.p_d[i]) * hat * std::pow(std::abs(deta[i][j]), e.p_d[i]));
                }
            }
        }
    }
    const double w = hv * u.dt;
    double grad_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.lhs_gradient[i] = grad_acc[i].value() * w;
        out.rhs_space[i] = space_acc[i].value() * w;
        grad_total += out.lhs_gradient[i];
        out.rhs += out.rhs_space[i];
    }
    out.rhs_time = time_acc.value() * w;
    out.rhs += out.rhs_time;
    out.lhs = out.lhs_sup + grad_total;
    out.ratio = out.rhs > 0.0 ? out.lhs / out.rhs : 0.0;
    return out;
}

// Cut-off pair transported by the pullback of a scaling map.
inline CutoffSpec pullback_cutoff(const ScalingMap& s, const CutoffSpec& spec)
{
    return {pullback_box(s, spec.inner), pullback_box(s, spec.outer)};
}

// Common factor rho^{-N} M^{-[N(pbar-2)+2 pbar]/pbar} picked up by every
// term under the time-neutral change of variables.
inline Monomial energy_scaling_exponent(const AnisoExponents& e)
{
    const Rational n = static_cast<long>(e.dim());
    return {-n, -(n * (e.pbar - 2) + 2 * e.pbar) / e.pbar};
}

// Smallest constant with lhs <= Gamma * rhs across the given evaluations.
inline double fit_energy_constant(const std::vector<EnergySides>& sides)
{
    double g = 0.0;
    for (const auto& s : sides)
        if (s.rhs > 0.0)
            g = std::max(g, s.lhs / s.rhs);
    return g;
}

}  // namespace aniso

#endif  // ANISO_ENERGY_HPP
