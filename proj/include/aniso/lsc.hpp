#ifndef ANISO_LSC_HPP
#define ANISO_LSC_HPP

// The quasi-metric d((x,t),(y,s)) = max{|x_i - y_i|^{p_i/pbar}, |t - s|^{1/pbar}},
// its balls, the lower semi-continuous regularization by minima over
// shrinking balls, and Lebesgue-point defects.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "aniso/degiorgi.hpp"
#include "aniso/grid.hpp"
#include "aniso/params.hpp"

namespace aniso {

inline double d_distance(std::span<const double> x, double t, std::span<const double> y, double s,
                         const AnisoExponents& e)
{
    check_same_dim(x.size(), y.size(), "d_distance");
    check_same_dim(x.size(), e.dim(), "d_distance exponents");
    double d = std::pow(std::abs(t - s), 1.0 / e.pbar_d);
    for (std::size_t i = 0; i < x.size(); ++i)
        d = std::max(d, std::pow(std::abs(x[i] - y[i]), e.p_d[i] / e.pbar_d));
    return d;
}

// {d((x,t), .) < rho}: |dx_i| < rho^{pbar/p_i}, |dt| < rho^pbar. Both time
// faces are open, unlike the full intrinsic cylinder which is closed on top.
inline SpaceTimeBox d_ball(std::span<const double> x, double t, double rho, const AnisoExponents& e)
{
    if (!(rho > 0.0))
        throw DomainError("d_ball: radius must be positive");
    SpaceTimeBox b;
    b.center.assign(x.begin(), x.end());
    for (std::size_t i = 0; i < e.dim(); ++i)
        b.half.push_back(std::pow(rho, e.pbar_d / e.p_d[i]));
    const double tau = std::pow(rho, e.pbar_d);
    b.t_lo = t - tau;
    b.t_hi = t + tau;
    b.lo_closed = false;
    b.hi_closed = false;
    return b;
}

inline double doubling_ratio(const AnisoExponents& e)
{
    return rpow(2.0, static_cast<long>(e.dim()) + e.pbar);
}

struct DoublingCheck
{
    double exact = 0.0;
    double measured = 0.0;
    double relative_error = 0.0;
    double tolerance = 0.0;  // first-order cell-counting bound
    bool within = false;
};

namespace detail {

// Largest integer m with m h < r (offsets within 1e-9 h of r count as on the
// open face and are excluded).
inline std::size_t window(double r, double h)
{
    const double q = r / h;
    double m = std::ceil(q) - 1.0;
    if (std::abs(q - std::round(q)) < 1e-9)
        m = std::round(q) - 1.0;
    return m < 0.0 ? 0 : static_cast<std::size_t>(m);
}

}  // namespace detail

// Cell-counted measures of B_rho and B_{2 rho} on a lattice with spacings h_i
// and dt centred on a node.
inline DoublingCheck doubling_check(const AnisoExponents& e, double rho, std::span<const double> h, double dt)
{
    check_same_dim(h.size(), e.dim(), "doubling_check");
    auto measure = [&](double r) {
        double v = (2.0 * static_cast<double>(detail::window(std::pow(r, e.pbar_d), dt)) + 1.0) * dt;
        for (std::size_t i = 0; i < h.size(); ++i)
            v *= (2.0 * static_cast<double>(detail::window(std::pow(r, e.pbar_d / e.p_d[i]), h[i])) + 1.0) * h[i];
        return v;
    };
    DoublingCheck c;
    c.exact = doubling_ratio(e);
    c.measured = measure(2.0 * rho) / measure(rho);
    c.relative_error = std::abs(c.measured - c.exact) / c.exact;
    double tol = 2.0 * dt / std::pow(rho, e.pbar_d);
    for (std::size_t i = 0; i < h.size(); ++i)
        tol += 2.0 * h[i] / std::pow(rho, e.pbar_d / e.p_d[i]);
    c.tolerance = 2.0 * tol;
    c.within = c.relative_error <= c.tolerance;
    return c;
}

// Dyadic radii rho0 / 2^j down to twice the coarsest grid spacing measured in
// d, then a final radius below the finest spacing whose ball is the node alone.
inline std::vector<double> default_rho_sequence(const SpaceTimeField& u, const AnisoExponents& e, double rho0,
                                                bool node_scale = true)
{
    double coarse = std::pow(u.dt, 1.0 / e.pbar_d);
    double fine = coarse;
    for (std::size_t i = 0; i < u.grid.dim(); ++i) {
        const double s = std::pow(u.grid.axis(i).h, e.p_d[i] / e.pbar_d);
        coarse = std::max(coarse, s);
        fine = std::min(fine, s);
    }
    const double floor = 2.0 * coarse;
    std::vector<double> seq;
    for (double r = rho0; r >= floor * (1.0 - 1e-12); r *= 0.5)
        seq.push_back(r);
    if (seq.empty())
        seq.push_back(rho0);
    if (node_scale && 0.5 * fine < seq.back())
        seq.push_back(0.5 * fine);
    return seq;
}

namespace detail {

inline void check_rho_sequence(const std::vector<double>& seq)
{
    if (seq.empty())
        throw ValidationError("rho sequence must not be empty");
    for (std::size_t j = 0; j < seq.size(); ++j) {
        if (!(seq[j] > 0.0))
            throw ValidationError("rho sequence entries must be positive");
        if (j > 0 && !(seq[j] < seq[j - 1]))
            throw ValidationError("rho sequence must be strictly decreasing");
    }
}

// Running minimum over offsets |m| <= w along one lattice direction,
// truncated at the ends.
inline void min_filter_line(std::vector<double>& data, std::size_t start, std::size_t stride, std::size_t count,
                            std::size_t w, std::vector<double>& scratch)
{
    scratch.resize(count);
    for (std::size_t j = 0; j < count; ++j)
        scratch[j] = data[start + j * stride];
    for (std::size_t j = 0; j < count; ++j) {
        const std::size_t lo = j >= w ? j - w : 0;
        const std::size_t hi = std::min(count - 1, j + w);
        double m = scratch[lo];
        for (std::size_t q = lo + 1; q <= hi; ++q)
            m = std::min(m, scratch[q]);
        data[start + j * stride] = m;
    }
}

}  // namespace detail

// Minimum of u over (node) + B_rho for every node, truncated at the domain.
inline SpaceTimeField ball_minimum(const SpaceTimeField& u, double rho, const AnisoExponents& e)
{
    check_same_dim(u.grid.dim(), e.dim(), "ball_minimum");
    SpaceTimeField out = u;
    const Grid& g = u.grid;
    const std::size_t size = g.size();
    std::vector<double> scratch;
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const std::size_t w = detail::window(std::pow(rho, e.pbar_d / e.p_d[i]), g.axis(i).h);
        if (w == 0)
            continue;
        const std::size_t s = g.stride(i);
        const std::size_t n = g.axis(i).n;
        for (std::size_t l = 0; l < u.levels; ++l)
            for (std::size_t k = 0; k < size; ++k)
                if (g.coord_index(k, i) == 0)
                    detail::min_filter_line(out.values, l * size + k, s, n, w, scratch);
    }
    const std::size_t wt = detail::window(std::pow(rho, e.pbar_d), u.dt);
    if (wt > 0)
        for (std::size_t k = 0; k < size; ++k)
            detail::min_filter_line(out.values, k, size, u.levels, wt, scratch);
    return out;
}

// u* = minimum over the ball of the smallest radius in the sequence, as the
// balls of a decreasing sequence are nested.
inline SpaceTimeField lsc_regularize(const SpaceTimeField& u, const std::vector<double>& rho_sequence,
                                     const AnisoExponents& e)
{
    detail::check_rho_sequence(rho_sequence);
    return ball_minimum(u, rho_sequence.back(), e);
}

struct DefectEntry
{
    double rho = 0.0;
    double defect = 0.0;     // mean of |U(node) - U| over the ball
    std::size_t count = 0;   // nodes averaged
    bool truncated = false;  // the ball left the domain
};

// Node given by (flat spatial index, level).
inline std::vector<DefectEntry> lebesgue_defect(const SpaceTimeField& u, std::size_t node, std::size_t level,
                                                const std::vector<double>& rho_sequence, const AnisoExponents& e)
{
    detail::check_rho_sequence(rho_sequence);
    const Grid& g = u.grid;
    if (node >= g.size() || level >= u.levels)
        throw DomainError("lebesgue_defect: node outside the field");
    const double here = u.level(level)[node];
    std::vector<DefectEntry> out;
    const std::size_t n = g.dim();
    for (double rho : rho_sequence) {
        DefectEntry d;
        d.rho = rho;
        std::vector<std::size_t> lo(n), hi(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t w = detail::window(std::pow(rho, e.pbar_d / e.p_d[i]), g.axis(i).h);
            const std::size_t j = g.coord_index(node, i);
            if (j < w || j + w >= g.axis(i).n)
                d.truncated = true;
            lo[i] = j >= w ? j - w : 0;
            hi[i] = std::min(g.axis(i).n - 1, j + w);
        }
        const std::size_t wt = detail::window(std::pow(rho, e.pbar_d), u.dt);
        if (level < wt || level + wt >= u.levels)
            d.truncated = true;
        const std::size_t l_lo = level >= wt ? level - wt : 0;
        const std::size_t l_hi = std::min(u.levels - 1, level + wt);
        Accumulator acc;
        std::vector<std::size_t> idx(lo);
        for (std::size_t l = l_lo; l <= l_hi; ++l) {
            auto lv = u.level(l);
            idx = lo;
            while (true) {
                acc.add(std::abs(here - lv[g.flat_index(idx)]));
                ++d.count;
                std::size_t i = 0;
                while (i < n && idx[i] == hi[i]) {
                    idx[i] = lo[i];
                    ++i;
                }
                if (i == n)
                    break;
                ++idx[i];
            }
        }
        d.defect = acc.value() / static_cast<double>(d.count);
        out.push_back(d);
    }
    return out;
}

struct LscParams
{
    std::vector<double> rho_sequence;  // empty: default_rho_sequence(rho0)
    double rho0 = 0.0;                 // 0: rho_sequence.front(), else a quarter of the smallest domain extent in d
    double b = 0.1;
    double r = 0.0;                    // 0: rho0
    double a = 0.5;
    double gamma = 1.0;
    std::size_t max_samples = 64;
    std::uint64_t seed = 1;
    std::size_t triangle_samples = 10000;
};

struct LscNodeCheck
{
    std::size_t node = 0;
    std::size_t level = 0;
    double u = 0.0;
    double u_star = 0.0;
    double mu_minus = 0.0;  // minimum over (node) + B_r
    double best_ratio = 1.0;  // smallest |[u <= mu_- + b] cap B_rho| / |B_rho| over rho < r
    bool triggered = false;   // ratio <= nu for some rho < r
};

struct LscReport
{
    std::vector<double> rho_sequence;
    std::size_t interior_nodes = 0;
    std::size_t equal_nodes = 0;
    double equality_fraction = 0.0;
    bool below_everywhere = true;  // u* <= U at every node
    double nu = 0.0;
    std::vector<LscNodeCheck> gaps;
    std::size_t gap_nodes = 0;     // nodes with u* < U - b
    DoublingCheck doubling;
    double worst_triangle_ratio = 0.0;  // max d(x,z) / (d(x,y) + d(y,z))
    std::string note = "essential infimum taken as the minimum over nodes; mu_- over the M = 1 ball";
};

inline double default_rho0(const SpaceTimeField& u, const AnisoExponents& e)
{
    double r = std::pow(0.25 * (u.t_last() - u.t0), 1.0 / e.pbar_d);
    for (std::size_t i = 0; i < u.grid.dim(); ++i) {
        const Axis& a = u.grid.axis(i);
        r = std::min(r, std::pow(0.25 * (a.last() - a.first()), e.p_d[i] / e.pbar_d));
    }
    return r;
}

// Largest d(x,z) / (d(x,y) + d(y,z)) over random triples in a unit box.
inline double worst_triangle_ratio(const AnisoExponents& e, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const std::size_t n = e.dim();
    std::vector<double> x(n), y(n), z(n);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = unit(rng);
            y[i] = unit(rng);
            z[i] = unit(rng);
        }
        const double tx = unit(rng), ty = unit(rng), tz = unit(rng);
        const double den = d_distance(x, tx, y, ty, e) + d_distance(y, ty, z, tz, e);
        if (den > 0.0)
            worst = std::max(worst, d_distance(x, tx, z, tz, e) / den);
    }
    return worst;
}

inline LscReport verify_lsc_theorem(const SpaceTimeField& u, const AnisoExponents& e, const LscParams& prm = {})
{
    LscReport rep;
    double rho0 = prm.rho0 > 0.0 ? prm.rho0 : default_rho0(u, e);
    if (prm.rho0 <= 0.0 && !prm.rho_sequence.empty())
        rho0 = prm.rho_sequence.front();
    rep.rho_sequence = prm.rho_sequence.empty() ? default_rho_sequence(u, e, rho0) : prm.rho_sequence;
    const SpaceTimeField us = lsc_regularize(u, rep.rho_sequence, e);
    const Grid& g = u.grid;
    for (std::size_t l = 0; l < u.levels; ++l) {
        auto a = u.level(l);
        auto b = us.level(l);
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (!(b[k] <= a[k]))
                rep.below_everywhere = false;
            if (l == 0 || l + 1 == u.levels || g.on_boundary(k))
                continue;
            ++rep.interior_nodes;
            if (b[k] == a[k])
                ++rep.equal_nodes;
        }
    }
    rep.equality_fraction =
        rep.interior_nodes ? static_cast<double>(rep.equal_nodes) / static_cast<double>(rep.interior_nodes) : 1.0;

    // Nodes where the regularization drops by more than b: either a small ball
    // sees little mass near mu_- (triggered) or the drop is unexplained.
    const double r = prm.r > 0.0 ? prm.r : rho0;
    rep.nu = nu_star(e, 1.0, prm.b, prm.a, prm.gamma);
    const SpaceTimeField mu_r = ball_minimum(u, r, e);
    std::vector<double> smaller;
    for (double rho : rep.rho_sequence)
        if (rho < r)
            smaller.push_back(rho);
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t l = 0; l < u.levels; ++l)
        for (std::size_t k = 0; k < g.size(); ++k)
            if (us.level(l)[k] < u.level(l)[k] - prm.b)
                candidates.emplace_back(k, l);
    rep.gap_nodes = candidates.size();
    if (candidates.size() > prm.max_samples) {
        std::mt19937_64 rng(prm.seed);
        std::shuffle(candidates.begin(), candidates.end(), rng);
        candidates.resize(prm.max_samples);
        std::sort(candidates.begin(), candidates.end(),
                  [](const auto& x, const auto& y) { return x.second != y.second ? x.second < y.second : x.first < y.first; });
    }
    for (auto [k, l] : candidates) {
        LscNodeCheck c;
        c.node = k;
        c.level = l;
        c.u = u.level(l)[k];
        c.u_star = us.level(l)[k];
        c.mu_minus = mu_r.level(l)[k];
        const std::vector<double> x = g.node(k);
        for (double rho : smaller) {
            SpaceTimeBox ball = d_ball(x, u.time(l), rho, e);
            // Truncate to the stored domain.
            const SpaceTimeBox dom = domain_box(u);
            for (std::size_t i = 0; i < g.dim(); ++i) {
                const double lo = std::max(ball.center[i] - ball.half[i], dom.center[i] - dom.half[i]);
                const double hi = std::min(ball.center[i] + ball.half[i], dom.center[i] + dom.half[i]);
                ball.center[i] = 0.5 * (lo + hi);
                ball.half[i] = 0.5 * (hi - lo);
            }
            ball.t_lo = std::max(ball.t_lo, u.t0 - u.dt);
            ball.t_hi = std::min(ball.t_hi, u.t_last() + u.dt);
            double count = 0.0, hits = 0.0;
            const auto mask = node_mask(g, ball);
            for (std::size_t lv = 0; lv < u.levels; ++lv) {
                if (!ball.contains_time(u.time(lv), time_eps(u.dt)))
                    continue;
                auto vals = u.level(lv);
                for (std::size_t q = 0; q < g.size(); ++q) {
                    if (!mask[q])
                        continue;
                    count += 1.0;
                    if (vals[q] <= c.mu_minus + prm.b)
                        hits += 1.0;
                }
            }
            const double ratio = count > 0.0 ? hits / count : 1.0;
            c.best_ratio = std::min(c.best_ratio, ratio);
            if (ratio <= rep.nu)
                c.triggered = true;
        }
        rep.gaps.push_back(c);
    }

    std::vector<double> h;
    for (const auto& a : g.axes())
        h.push_back(a.h);
    rep.doubling = doubling_check(e, rho0, h, u.dt);
    rep.worst_triangle_ratio = worst_triangle_ratio(e, prm.triangle_samples, prm.seed);
    return rep;
}

}  // namespace aniso

#endif  // ANISO_LSC_HPP
