#ifndef ANISO_SCALING_HPP
#define ANISO_SCALING_HPP

// The transformation group of the anisotropic equation.
//
// A ScalingMap acts on a function by pullback:
//     (T u)(x, t) = M^{-1} u(L_1 x_1, ..., L_N x_N, T t)
// with L_i = (M^{p_i - 2} T)^{1/p_i}, which is exactly the condition that makes
// T u a solution whenever u is one. The exponent of every factor is tracked as
// an exact monomial in the map's parameters (rho, M); numerical values are
// derived from those exponents.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "aniso/grid.hpp"
#include "aniso/params.hpp"
#include "aniso/parallel.hpp"
#include "aniso/rational.hpp"

namespace aniso {

enum class MapFamily { general, time_neutral, intrinsic, mass_preserving };

inline const char* to_string(MapFamily f)
{
    switch (f) {
    case MapFamily::general:
        return "general";
    case MapFamily::time_neutral:
        return "time-neutral";
    case MapFamily::intrinsic:
        return "intrinsic";
    case MapFamily::mass_preserving:
        return "mass";
    }
    return "?";
}

// Exponents of amplitude M, time factor T and space factors L_i as monomials
// in the parameters (rho, mu).
struct ExponentForm
{
    Monomial amplitude;
    Monomial time;
    std::vector<Monomial> space;
};

class ScalingMap
{
public:
    ScalingMap(MapFamily family, double rho, double mu, ExponentForm form, AnisoExponents exps)
        : family_(family), rho_(rho), mu_(mu), form_(std::move(form)), exps_(std::move(exps))
    {
        if (!(rho_ > 0.0) || !(mu_ > 0.0))
            throw DomainError("scaling parameters must be positive (rho = " + std::to_string(rho_) +
                              ", M = " + std::to_string(mu_) + ")");
        amplitude_ = form_.amplitude.eval(rho_, mu_);
        time_ = form_.time.eval(rho_, mu_);
        space_.resize(form_.space.size());
        for (std::size_t i = 0; i < space_.size(); ++i)
            space_[i] = form_.space[i].eval(rho_, mu_);
    }

    MapFamily family() const { return family_; }
    double rho() const { return rho_; }
    double mu() const { return mu_; }
    const ExponentForm& form() const { return form_; }
    const AnisoExponents& exponents() const { return exps_; }
    std::size_t dim() const { return space_.size(); }

    double amplitude() const { return amplitude_; }
    double time_factor() const { return time_; }
    const std::vector<double>& space_factors() const { return space_; }

    bool is_identity() const
    {
        if (amplitude_ != 1.0 || time_ != 1.0)
            return false;
        for (double l : space_)
            if (l != 1.0)
                return false;
        return true;
    }

    // M^{-1} T == L_i^{p_i} M^{1 - p_i} for every axis, checked on the exponents.
    bool homogeneity_exact() const
    {
        const Monomial lhs = form_.time - form_.amplitude;
        for (std::size_t i = 0; i < form_.space.size(); ++i) {
            const Rational& p = exps_.p[i];
            const Monomial rhs = p * form_.space[i] + Rational(1 - p) * form_.amplitude;
            if (!(rhs == lhs))
                return false;
        }
        return true;
    }

    // Exponent of the spatial mass factor M^{-1} prod_i L_i^{-1}.
    Monomial mass_factor_exponent() const
    {
        Monomial m = Rational(-1) * form_.amplitude;
        for (const auto& s : form_.space)
            m = m - s;
        return m;
    }

    double mass_factor() const { return mass_factor_exponent().eval(rho_, mu_); }

    // Applying *this and then `next` is the map with amplitude M1 M2 and time
    // factor T1 T2.
    ScalingMap then(const ScalingMap& next) const;

    ScalingMap inverse() const;

    // Forward action on points: the sampling point of (T u)(x, t).
    std::vector<double> map_point(std::span<const double> x) const
    {
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = space_[i] * x[i];
        return y;
    }
    double map_time(double t) const { return time_ * t; }

private:
    MapFamily family_;
    double rho_;
    double mu_;
    ExponentForm form_;
    AnisoExponents exps_;
    double amplitude_ = 1.0;
    double time_ = 1.0;
    std::vector<double> space_;
};

namespace detail {

inline void check_positive(double v, const char* name)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw DomainError(std::string(name) + " must be positive and finite, got " + std::to_string(v));
}

// T = rho^pbar, L_i = mu^{(p_i-2)/p_i} rho^{pbar/p_i}
inline ExponentForm time_neutral_form(const AnisoExponents& e)
{
    ExponentForm f;
    f.amplitude = {0, 1};
    f.time = {e.pbar, 0};
    for (std::size_t i = 0; i < e.dim(); ++i)
        f.space.push_back(half_side_monomial(e, i));
    return f;
}

}  // namespace detail

inline ScalingMap make_time_neutral(double rho, double m, const AnisoExponents& e)
{
    detail::check_positive(rho, "rho");
    detail::check_positive(m, "M");
    return ScalingMap(MapFamily::time_neutral, rho, m, detail::time_neutral_form(e), e);
}

// T = M^{2-pbar} rho^pbar, L_i = M^{(p_i-pbar)/p_i} rho^{pbar/p_i}
inline ScalingMap make_intrinsic(double rho, double m, const AnisoExponents& e)
{
    detail::check_positive(rho, "rho");
    detail::check_positive(m, "M");
    ExponentForm f;
    f.amplitude = {0, 1};
    f.time = {e.pbar, 2 - e.pbar};
    for (std::size_t i = 0; i < e.dim(); ++i)
        f.space.push_back({e.pbar / e.p[i], (e.p[i] - e.pbar) / e.p[i]});
    return ScalingMap(MapFamily::intrinsic, rho, m, std::move(f), e);
}

// M = rho^{-alpha pbar}: (T_rho u)(x,t) = rho^{alpha pbar} u(rho^{alpha_i pbar} x_i, rho^pbar t)
inline ScalingMap make_mass_preserving(double rho, const AnisoExponents& e)
{
    detail::check_positive(rho, "rho");
    ExponentForm f;
    const Rational m_exp = -e.alpha * e.pbar;
    f.amplitude = {m_exp, 0};
    f.time = {e.pbar, 0};
    for (std::size_t i = 0; i < e.dim(); ++i) {
        // M^{(p_i-2)/p_i} rho^{pbar/p_i} with M = rho^{-alpha pbar}
        const Monomial side = half_side_monomial(e, i);
        f.space.push_back({side.rho_exp + side.m_exp * m_exp, 0});
    }
    return ScalingMap(MapFamily::mass_preserving, rho, 1.0, std::move(f), e);
}

// General homogeneity-restoring map for given amplitude M and time factor T.
// It coincides with the time-neutral map at rho = T^{1/pbar}.
inline ScalingMap make_general(double m, double t, const AnisoExponents& e)
{
    detail::check_positive(m, "M");
    detail::check_positive(t, "T");
    const double rho = std::pow(t, 1.0 / e.pbar_d);
    return ScalingMap(MapFamily::general, rho, m, detail::time_neutral_form(e), e);
}

inline ScalingMap ScalingMap::then(const ScalingMap& next) const
{
    check_same_dim(dim(), next.dim(), "scaling composition");
    return make_general(amplitude_ * next.amplitude_, time_ * next.time_, exps_);
}

inline ScalingMap ScalingMap::inverse() const
{
    return make_general(1.0 / amplitude_, 1.0 / time_, exps_);
}

// Homogeneity of the equation in log-linear form: for log M = a, log T = b,
//   p_i * log L_i + (1 - p_i) a == b - a   with   log L_i = ((p_i - 2) a + b) / p_i.
// Returns the exact residual per axis (all zero for a consistent exponent set).
inline std::vector<Rational> homogeneity_residuals(const AnisoExponents& e, const Rational& log_m,
                                                   const Rational& log_t)
{
    std::vector<Rational> r;
    r.reserve(e.dim());
    for (const auto& p : e.p) {
        const Rational log_l = ((p - 2) * log_m + log_t) / p;
        r.push_back(p * log_l + (1 - p) * log_m - (log_t - log_m));
    }
    return r;
}

// Grid whose nodes are the preimages of g's nodes under x -> L x.
inline Grid preimage_grid(const Grid& g, const std::vector<double>& factors)
{
    std::vector<Axis> axes;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const Axis& a = g.axis(i);
        axes.push_back(Axis{a.center / factors[i], a.h / factors[i], a.n});
    }
    return Grid(std::move(axes));
}

// Target grid and time levels for a pullback.
struct SpaceTimeTarget
{
    Grid grid;
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t levels = 2;
};

inline SpaceTimeTarget preimage_target(const SpaceTimeField& f, const ScalingMap& s)
{
    return {preimage_grid(f.grid, s.space_factors()), f.t0 / s.time_factor(), f.dt / s.time_factor(), f.levels};
}

namespace detail {

// Separable pullback of a space-time field: value at target (x, t) is
// scale * f(a_i(x_i), b(t)) with per-axis coordinate maps.
template <class SpaceMap, class TimeMap, class Factor>
SpaceTimeField separable_pullback(const SpaceTimeField& f, const SpaceTimeTarget& target, SpaceMap&& space_map,
                                  TimeMap&& time_map, Factor&& factor, int threads, const char* what)
{
    check_same_dim(target.grid.dim(), f.grid.dim(), what);
    SpaceTimeField out(target.grid, target.t0, target.dt, target.levels);
    const std::size_t n = f.grid.dim();

    // Time stencils and spatial stencils per level (the space map may depend on t).
    for (std::size_t l = 0; l < out.levels; ++l) {
        const double t = out.time(l);
        const double src_t = time_map(t);
        AxisStencil ts;
        if (!locate_time(f, src_t, ts))
            throw OutOfDomainError(std::string(what) + ": target time " + std::to_string(t) +
                                   " maps to t = " + std::to_string(src_t) + " outside the stored levels [" +
                                   std::to_string(f.t0) + ", " + std::to_string(f.t_last()) + "]");
        std::vector<std::vector<AxisStencil>> st(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Axis& a = target.grid.axis(i);
            st[i].resize(a.n);
            for (std::size_t j = 0; j < a.n; ++j) {
                const double src = space_map(i, a.node(j), t);
                if (!locate(f.grid.axis(i), src, st[i][j])) {
                    std::vector<double> corner(n);
                    for (std::size_t q = 0; q < n; ++q) {
                        const Axis& aq = target.grid.axis(q);
                        corner[q] = q == i ? a.node(j) : aq.first();
                    }
                    throw OutOfDomainError(std::string(what) + ": target corner " + format_point(corner, t) +
                                           " pulls back outside the source domain along axis " + std::to_string(i) +
                                           " (coordinate " + std::to_string(src) + " not in [" +
                                           std::to_string(f.grid.axis(i).first()) + ", " +
                                           std::to_string(f.grid.axis(i).last()) + "])");
                }
            }
        }
        const double scale = factor(t);
        auto lo = f.level(ts.j);
        auto hi = f.level(ts.w == 0.0 ? ts.j : ts.j + 1);
        auto dst = out.level(l);
        parallel_for(out.grid.size(), threads, [&](std::size_t begin, std::size_t end) {
            std::vector<AxisStencil> cell(n);
            for (std::size_t k = begin; k < end; ++k) {
                for (std::size_t i = 0; i < n; ++i)
                    cell[i] = st[i][out.grid.coord_index(k, i)];
                double v = interpolate(f.grid, lo, cell);
                if (ts.w != 0.0)
                    v = (1.0 - ts.w) * v + ts.w * interpolate(f.grid, hi, cell);
                dst[k] = scale == 1.0 ? v : scale * v;
            }
        });
    }
    return out;
}

}  // namespace detail

// (T u)(x, t) = M^{-1} u(L x, T t) sampled on the target (default: the exact
// preimage of u's grid and levels).
inline SpaceTimeField apply_scaling(const SpaceTimeField& f, const ScalingMap& s,
                                    const std::optional<SpaceTimeTarget>& target = std::nullopt, int threads = 1)
{
    check_same_dim(f.grid.dim(), s.dim(), "apply_scaling");
    const SpaceTimeTarget tgt = target ? *target : preimage_target(f, s);
    const auto& L = s.space_factors();
    const double inv_m = 1.0 / s.amplitude();
    return detail::separable_pullback(
        f, tgt, [&](std::size_t i, double x, double) { return L[i] * x; },
        [&](double t) { return s.time_factor() * t; }, [&](double) { return inv_m; }, threads, "apply_scaling");
}

// Spatial action on a single time slice: M^{-1} u(L x).
inline GridField apply_scaling(const GridField& f, const ScalingMap& s, const std::optional<Grid>& target = std::nullopt)
{
    check_same_dim(f.grid.dim(), s.dim(), "apply_scaling");
    const Grid tgt = target ? *target : preimage_grid(f.grid, s.space_factors());
    check_same_dim(tgt.dim(), f.grid.dim(), "apply_scaling target");
    const auto& L = s.space_factors();
    const std::size_t n = f.grid.dim();
    std::vector<std::vector<AxisStencil>> st(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Axis& a = tgt.axis(i);
        st[i].resize(a.n);
        for (std::size_t j = 0; j < a.n; ++j)
            if (!locate(f.grid.axis(i), L[i] * a.node(j), st[i][j]))
                throw OutOfDomainError("apply_scaling: target node " + std::to_string(a.node(j)) + " on axis " +
                                       std::to_string(i) + " pulls back to " + std::to_string(L[i] * a.node(j)) +
                                       " outside the source domain");
    }
    GridField out(tgt);
    const double inv_m = 1.0 / s.amplitude();
    std::vector<AxisStencil> cell(n);
    for (std::size_t k = 0; k < tgt.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i)
            cell[i] = st[i][tgt.coord_index(k, i)];
        const double v = interpolate(f.grid, f.values, cell);
        out.values[k] = inv_m == 1.0 ? v : inv_m * v;
    }
    return out;
}

// T~_{rho,M} maps Q_{rho'}(M') onto Q_{rho rho'}(M M') (centers map forward).
inline IntrinsicCylinder pushforward_cylinder(const ScalingMap& s, const IntrinsicCylinder& c)
{
    check_same_dim(c.center.size(), s.dim(), "pushforward_cylinder");
    const AnisoExponents& e = s.exponents();
    IntrinsicCylinder out = c;
    out.center = s.map_point(c.center);
    out.t0 = s.map_time(c.t0);
    out.rho = c.rho * std::pow(s.time_factor(), 1.0 / e.pbar_d);
    out.m = c.m * s.amplitude();
    return out;
}

// Preimage box T~^{-1}(box): the domain of T u when u lives on box.
inline SpaceTimeBox pullback_box(const ScalingMap& s, const SpaceTimeBox& b)
{
    SpaceTimeBox out = b;
    for (std::size_t i = 0; i < b.dim(); ++i) {
        out.center[i] = b.center[i] / s.space_factors()[i];
        out.half[i] = b.half[i] / s.space_factors()[i];
    }
    out.t_lo = b.t_lo / s.time_factor();
    out.t_hi = b.t_hi / s.time_factor();
    return out;
}

// w(x, t) = e^{alpha t} u(e^{alpha_i t} x_i, e^t)
inline SpaceTimeField phi_forward(const SpaceTimeField& u, const AnisoExponents& e, const SpaceTimeTarget& target,
                                  int threads = 1)
{
    if (!(u.t0 > 0.0))
        throw DomainError("phi_forward needs a field on strictly positive times, first level t = " +
                          std::to_string(u.t0));
    return detail::separable_pullback(
        u, target, [&](std::size_t i, double x, double t) { return std::exp(e.alpha_i_d[i] * t) * x; },
        [&](double t) { return std::exp(t); }, [&](double t) { return std::exp(e.alpha_d * t); }, threads,
        "phi_forward");
}

// u(y, s) = s^{-alpha} w(s^{-alpha_i} y_i, log s)
inline SpaceTimeField phi_inverse(const SpaceTimeField& w, const AnisoExponents& e, const SpaceTimeTarget& target,
                                  int threads = 1)
{
    if (!(target.t0 > 0.0))
        throw DomainError("phi_inverse is defined for s > 0 only, first target time s = " + std::to_string(target.t0));
    return detail::separable_pullback(
        w, target, [&](std::size_t i, double y, double s) { return std::pow(s, -e.alpha_i_d[i]) * y; },
        [&](double s) { return std::log(s); }, [&](double s) { return std::pow(s, -e.alpha_d); }, threads,
        "phi_inverse");
}

// Relative discrete L1 distance between T_rho U and U over the nodes of U
// whose image under the mass-preserving map stays inside U's domain.
inline double self_similarity_residual(const SpaceTimeField& u, double rho, const AnisoExponents& e)
{
    const ScalingMap s = make_mass_preserving(rho, e);
    if (s.is_identity())
        return 0.0;
    const auto& L = s.space_factors();
    const std::size_t n = u.grid.dim();
    std::vector<std::vector<AxisStencil>> st(n);
    std::vector<std::vector<char>> ok(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Axis& a = u.grid.axis(i);
        st[i].resize(a.n);
        ok[i].resize(a.n);
        for (std::size_t j = 0; j < a.n; ++j)
            ok[i][j] = locate(a, L[i] * a.node(j), st[i][j]);
    }
    const double inv_m = 1.0 / s.amplitude();
    Accumulator diff;
    Accumulator norm;
    std::size_t common = 0;
    std::vector<AxisStencil> cell(n);
    for (std::size_t l = 0; l < u.levels; ++l) {
        AxisStencil ts;
        if (!locate_time(u, s.time_factor() * u.time(l), ts))
            continue;
        auto here = u.level(l);
        for (std::size_t k = 0; k < u.grid.size(); ++k) {
            bool inside = true;
            for (std::size_t i = 0; i < n && inside; ++i) {
                const std::size_t j = u.grid.coord_index(k, i);
                inside = ok[i][j];
                cell[i] = st[i][j];
            }
            if (!inside)
                continue;
            double v = interpolate(u.grid, u.level(ts.j), cell);
            if (ts.w != 0.0)
                v = (1.0 - ts.w) * v + ts.w * interpolate(u.grid, u.level(ts.j + 1), cell);
            diff.add(std::abs(inv_m * v - here[k]));
            norm.add(std::abs(here[k]));
            ++common;
        }
    }
    if (common == 0)
        throw DomainError("self_similarity_residual: T_rho maps every node outside the field's domain");
    if (norm.value() == 0.0)
        return diff.value() == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff.value() / norm.value();
}

}  // namespace aniso

#endif  // ANISO_SCALING_HPP
