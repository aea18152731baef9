#ifndef ANISO_DEGIORGI_HPP
#define ANISO_DEGIORGI_HPP

// De Giorgi levels and nested cylinders, the smallness threshold nu*, the
// fast geometric recursion, and the measured critical-mass implication.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "aniso/grid.hpp"
#include "aniso/params.hpp"
#include "aniso/scaling.hpp"

namespace aniso {

struct DeGiorgiParams
{
    // Sign::minus: super-solution case, mu is the lower bound mu^- and the
    // levels are k_n = mu + xi_n omega. Sign::plus: sub-solution case, mu is
    // mu^+ and k_n = mu - xi_n omega.
    Sign side = Sign::minus;
    double mu = 0.0;
    double omega = 1.0;
    double xi = 1.0;
    double a = 0.5;
    double theta = 1.0;
    double rho = 1.0;
    double gamma = 1.0;
    std::vector<double> center;
    double t0 = 0.0;
    Orientation orientation = Orientation::backward;

    void validate(std::size_t dim) const
    {
        if (!(omega > 0.0))
            throw ValidationError("degiorgi: omega must be positive");
        if (!(xi > 0.0 && xi <= 1.0))
            throw ValidationError("degiorgi: xi must lie in (0, 1]");
        if (!(a > 0.0 && a < 1.0))
            throw ValidationError("degiorgi: a must lie in (0, 1)");
        if (!(theta > 0.0))
            throw ValidationError("degiorgi: theta must be positive");
        if (!(rho > 0.0))
            throw ValidationError("degiorgi: rho must be positive");
        if (!(gamma > 0.0))
            throw ValidationError("degiorgi: gamma must be positive");
        if (!center.empty())
            check_same_dim(center.size(), dim, "degiorgi center");
    }

    std::vector<double> center_or_origin(std::size_t dim) const
    {
        return center.empty() ? std::vector<double>(dim, 0.0) : center;
    }
};

struct DeGiorgiLevel
{
    std::size_t n = 0;
    double xi_n = 0.0;
    double k_n = 0.0;
    double rho_n = 0.0;
    SpaceTimeBox cylinder;
    double volume = 0.0;
};

struct DeGiorgiSchedule
{
    std::size_t n_bar = 0;
    double k_limit = 0.0;  // mu +- a xi omega
    std::vector<DeGiorgiLevel> levels;
};

// Smallest integer nbar with 1 + 2^{-nbar} <= 2^{pbar/p_N}, which places K_0
// inside K_{2 rho}(theta) along every axis.
inline std::size_t degiorgi_nbar(const AnisoExponents& e)
{
    const double bound = std::pow(2.0, e.pbar_d / e.p_d.back());
    std::size_t nb = 0;
    while (1.0 + std::ldexp(1.0, -static_cast<int>(nb)) > bound * (1.0 + 1e-15))
        ++nb;
    return nb;
}

namespace detail {

inline SpaceTimeBox oriented_box(std::vector<double> center, std::vector<double> half, double t0, double depth,
                                 Orientation o)
{
    SpaceTimeBox b;
    b.center = std::move(center);
    b.half = std::move(half);
    switch (o) {
    case Orientation::backward:
        b.t_lo = t0 - depth;
        b.t_hi = t0;
        b.lo_closed = false;
        b.hi_closed = true;
        break;
    case Orientation::forward:
        b.t_lo = t0;
        b.t_hi = t0 + depth;
        b.lo_closed = true;
        b.hi_closed = false;
        break;
    case Orientation::full:
        b.t_lo = t0 - depth;
        b.t_hi = t0 + depth;
        b.lo_closed = false;
        b.hi_closed = true;
        break;
    }
    return b;
}

inline double level_at(const DeGiorgiParams& p, double xi_n)
{
    return p.side == Sign::minus ? p.mu + xi_n * p.omega : p.mu - xi_n * p.omega;
}

}  // namespace detail

// rho_n = rho (1 + 2^{-n}); K_n half-sides theta^{(p_i-2)/p_i} rho^{pbar/p_i} (1 + 2^{-(n+nbar)});
// Q_n = K_n x (-rho_n^pbar, 0]; xi_n = a xi + (1 - a) xi / 2^n.
inline DeGiorgiSchedule degiorgi_schedule(const DeGiorgiParams& p, const AnisoExponents& e, std::size_t n_max)
{
    p.validate(e.dim());
    if (n_max < 1)
        throw ValidationError("degiorgi_schedule: n_max must be at least 1");
    DeGiorgiSchedule s;
    s.n_bar = degiorgi_nbar(e);
    s.k_limit = detail::level_at(p, p.a * p.xi);
    const auto center = p.center_or_origin(e.dim());
    IntrinsicCylinder base{center, p.t0, p.rho, p.theta, p.orientation};
    std::vector<double> side(e.dim());
    for (std::size_t i = 0; i < e.dim(); ++i)
        side[i] = half_side(base, e, i);
    for (std::size_t n = 0; n <= n_max; ++n) {
        DeGiorgiLevel lv;
        lv.n = n;
        const double two_n = std::ldexp(1.0, -static_cast<int>(n));
        lv.xi_n = p.a * p.xi + (1.0 - p.a) * p.xi * two_n;
        lv.k_n = detail::level_at(p, lv.xi_n);
        lv.rho_n = p.rho * (1.0 + two_n);
        const double stretch = 1.0 + std::ldexp(1.0, -static_cast<int>(n + s.n_bar));
        std::vector<double> half(e.dim());
        for (std::size_t i = 0; i < e.dim(); ++i)
            half[i] = side[i] * stretch;
        lv.cylinder = detail::oriented_box(center, std::move(half), p.t0, std::pow(lv.rho_n, e.pbar_d), p.orientation);
        lv.volume = lv.cylinder.volume();
        s.levels.push_back(std::move(lv));
    }
    return s;
}

// Q_{2 rho}(theta) with the schedule's center and orientation.
inline SpaceTimeBox degiorgi_outer_cylinder(const DeGiorgiParams& p, const AnisoExponents& e)
{
    IntrinsicCylinder c{p.center_or_origin(e.dim()), p.t0, 2.0 * p.rho, p.theta, p.orientation};
    return to_box(c, e);
}

// Q_rho(theta), where the conclusion is checked.
inline SpaceTimeBox degiorgi_inner_cylinder(const DeGiorgiParams& p, const AnisoExponents& e)
{
    IntrinsicCylinder c{p.center_or_origin(e.dim()), p.t0, p.rho, p.theta, p.orientation};
    return to_box(c, e);
}

// |Q_{2 rho}(theta)| / |Q_0|
inline double degiorgi_volume_ratio(const DeGiorgiParams& p, const AnisoExponents& e)
{
    const auto s = degiorgi_schedule(p, e, 1);
    return degiorgi_outer_cylinder(p, e).volume() / s.levels.front().volume;
}

struct NuStarTerms
{
    // nu* = 2^{-(N/pbar)(2N+pbar+2)} * B^{-N/pbar},
    // B = gamma r^{2-pbar} (1-a)^{-(pbar/N)(N+2)} (1 + sum r^{p_i-2})^{(N+pbar)/N},  r = xi omega / theta
    Rational two_exponent;
    Rational bracket_exponent;
    Rational r_exponent;
    Rational one_minus_a_exponent;
    Rational sum_exponent;
    long double ratio = 1.0L;
    long double bracket = 0.0L;
    long double value = 0.0L;
};

inline NuStarTerms nu_star_terms(const AnisoExponents& e, double theta, double xiomega, double a, double gamma)
{
    if (!(theta > 0.0) || !(xiomega > 0.0) || !(gamma > 0.0))
        throw DomainError("nu_star: theta, xi*omega and gamma must be positive");
    if (!(a > 0.0 && a < 1.0))
        throw DomainError("nu_star: a must lie in (0, 1)");
    const Rational n = static_cast<long>(e.dim());
    NuStarTerms t;
    t.two_exponent = -(n / e.pbar) * (2 * n + e.pbar + 2);
    t.bracket_exponent = -n / e.pbar;
    t.r_exponent = 2 - e.pbar;
    t.one_minus_a_exponent = -(e.pbar / n) * (n + 2);
    t.sum_exponent = (n + e.pbar) / n;

    auto lpow = [](long double b, const Rational& q) {
        return q == 0 ? 1.0L : std::pow(b, to_long_double(q));
    };
    t.ratio = static_cast<long double>(xiomega) / static_cast<long double>(theta);
    long double sum = 1.0L;
    for (const auto& p : e.p)
        sum += lpow(t.ratio, p - 2);
    t.bracket = static_cast<long double>(gamma) * lpow(t.ratio, t.r_exponent) *
                lpow(1.0L - static_cast<long double>(a), t.one_minus_a_exponent) * lpow(sum, t.sum_exponent);
    t.value = lpow(2.0L, t.two_exponent) * lpow(t.bracket, t.bracket_exponent);
    return t;
}

inline double nu_star(const AnisoExponents& e, double theta, double xiomega, double a, double gamma = 1.0)
{
    return static_cast<double>(nu_star_terms(e, theta, xiomega, a, gamma).value);
}

// nu^- = nu* / (|Q_{2 rho}(theta)| / |Q_0|)
inline double nu_minus(const DeGiorgiParams& p, const AnisoExponents& e)
{
    return nu_star(e, p.theta, p.xi * p.omega, p.a, p.gamma) / degiorgi_volume_ratio(p, e);
}

struct GeometricIteration
{
    std::vector<double> log10_y;  // log10 Y_n for n = 0 .. last computed
    bool converged = false;       // some Y_n < 1e-30 within n_max
    std::size_t n_converged = 0;
    double threshold = 0.0;       // C^{-1/delta} b^{-1/delta^2}
    double log_threshold = 0.0;
};

// Y_{n+1} = C b^n Y_n^{1+delta}, tracked in logarithms. Writing
//   log Y_n = l* - n log(b) / delta + e_n,   l* = log threshold,
// turns the recursion into e_{n+1} = (1 + delta) e_n, which stays exact at
// the threshold itself (e_0 = 0) where the direct form amplifies rounding.
inline GeometricIteration fast_geometric_iterate(double y0, double c, double b, double delta,
                                                 std::size_t n_max = 10000)
{
    if (!(c >= 1.0) || !(b >= 1.0) || !(delta > 0.0))
        throw DomainError("fast_geometric_iterate: requires C >= 1, b >= 1, delta > 0");
    if (!(y0 >= 0.0 && y0 <= 1.0))
        throw DomainError("fast_geometric_iterate: Y0 must lie in [0, 1]");
    GeometricIteration it;
    const long double lc = std::log(static_cast<long double>(c));
    const long double lb = std::log(static_cast<long double>(b));
    const long double d = delta;
    const long double lthr = -lc / d - lb / (d * d);
    it.log_threshold = static_cast<double>(lthr);
    it.threshold = static_cast<double>(std::exp(lthr));
    const long double ln10 = std::log(10.0L);
    const long double target = -30.0L * ln10;
    if (y0 == 0.0) {
        it.log10_y.push_back(-std::numeric_limits<double>::infinity());
        it.converged = true;
        return it;
    }
    const long double l0 = std::log(static_cast<long double>(y0));
    // e_0 is exactly zero when Y0 is the threshold rounded to double.
    long double e = y0 == it.threshold ? 0.0L : l0 - lthr;
    for (std::size_t n = 0; n <= n_max; ++n) {
        const long double l = n == 0 ? l0 : lthr - static_cast<long double>(n) * lb / d + e;
        it.log10_y.push_back(static_cast<double>(l / ln10));
        if (l < target) {
            it.converged = true;
            it.n_converged = n;
            return it;
        }
        if (e > 0.0L && e > 1e6L)
            break;  // diverged far above 1: Y_n = +inf for all later n
        e *= 1.0L + d;
    }
    return it;
}

struct DeGiorgiTrace
{
    DeGiorgiSchedule schedule;
    std::vector<double> y;        // Y_n = |[u < k_n] cap Q_n| / |Q_n| (or [u > k_n])
    std::vector<double> measure;  // |[u < k_n] cap Q_n|
    bool converged = false;       // measured Y_n reaches 0 within n_max
    double fitted_constant = 0.0; // max Y_{n+1} / (b^n Y_n^{1+delta})
    double b = 0.0;
    double delta = 0.0;
};

inline DeGiorgiTrace degiorgi_trace(const SpaceTimeField& u, const DeGiorgiParams& p, const AnisoExponents& e,
                                    std::size_t n_max)
{
    DeGiorgiTrace tr;
    tr.schedule = degiorgi_schedule(p, e, n_max);
    const Compare cmp = p.side == Sign::minus ? Compare::lt : Compare::gt;
    for (const auto& lv : tr.schedule.levels) {
        const double m = sublevel_measure(u, lv.k_n, lv.cylinder, cmp);
        const double vol = region_measure(u, lv.cylinder);
        tr.measure.push_back(m);
        tr.y.push_back(vol > 0.0 ? m / vol : 0.0);
    }
    const double nd = static_cast<double>(e.dim());
    tr.delta = e.pbar_d / nd;
    tr.b = std::pow(2.0, (2.0 * nd + e.pbar_d + 2.0) * e.pbar_d / nd);
    for (std::size_t n = 0; n + 1 < tr.y.size(); ++n)
        if (tr.y[n] > 0.0)
            tr.fitted_constant = std::max(
                tr.fitted_constant, tr.y[n + 1] / (std::pow(tr.b, static_cast<double>(n)) * std::pow(tr.y[n], 1.0 + tr.delta)));
    tr.converged = tr.y.back() == 0.0;
    return tr;
}

struct CriticalMassReport
{
    double gamma = 1.0;
    double nu = 0.0;                 // nu^- used in the hypothesis
    double hypothesis_ratio = 0.0;   // |[u <= mu + xi omega] cap Q_{2rho}| / |Q_{2rho}|
    bool hypothesis_holds = false;
    double level = 0.0;              // mu +- a xi omega
    double extreme = 0.0;            // min (or max) of u over the nodes of Q_rho(theta)
    bool conclusion_holds = false;
    double margin = 0.0;             // extreme - level (or level - extreme)
    std::string verdict;
};

// Report-only check of hypothesis => conclusion on a discrete field.
inline CriticalMassReport verify_critical_mass(const SpaceTimeField& u, const DeGiorgiParams& p,
                                               const AnisoExponents& e)
{
    p.validate(e.dim());
    CriticalMassReport r;
    r.gamma = p.gamma;
    r.nu = nu_minus(p, e);
    const SpaceTimeBox outer = degiorgi_outer_cylinder(p, e);
    const bool lower = p.side == Sign::minus;
    const double k0 = detail::level_at(p, p.xi);
    const double m = sublevel_measure(u, k0, outer, lower ? Compare::le : Compare::ge);
    const double vol = region_measure(u, outer);
    r.hypothesis_ratio = vol > 0.0 ? m / vol : 0.0;
    r.hypothesis_holds = r.hypothesis_ratio <= r.nu;

    const SpaceTimeBox inner = degiorgi_inner_cylinder(p, e);
    check_region(u, inner);
    r.level = detail::level_at(p, p.a * p.xi);
    const auto mask = node_mask(u.grid, inner);
    r.extreme = lower ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t l : levels_in(u, inner)) {
        auto lv = u.level(l);
        for (std::size_t k = 0; k < lv.size(); ++k) {
            if (!mask[k])
                continue;
            any = true;
            r.extreme = lower ? std::min(r.extreme, lv[k]) : std::max(r.extreme, lv[k]);
        }
    }
    if (!any)
        throw DomainError("verify_critical_mass: Q_rho(theta) contains no grid nodes");
    r.margin = lower ? r.extreme - r.level : r.level - r.extreme;
    r.conclusion_holds = r.margin >= 0.0;
    if (!r.hypothesis_holds)
        r.verdict = "hypothesis not met";
    else
        r.verdict = r.conclusion_holds ? "implication held" : "implication violated";
    return r;
}

// Parameters seen by T(u) for the time-neutral map with (rho, theta): the
// cylinders become unit cylinders and every level is divided by theta.
inline DeGiorgiParams rescale_params(const DeGiorgiParams& p, const ScalingMap& s)
{
    DeGiorgiParams q = p;
    const double m = s.amplitude();
    q.mu = p.mu / m;
    q.omega = p.omega / m;
    q.theta = p.theta / m;
    q.rho = p.rho / std::pow(s.time_factor(), 1.0 / s.exponents().pbar_d);
    const auto c = p.center_or_origin(s.dim());
    q.center.resize(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        q.center[i] = c[i] / s.space_factors()[i];
    q.t0 = p.t0 / s.time_factor();
    return q;
}

}  // namespace aniso

#endif  // ANISO_DEGIORGI_HPP
