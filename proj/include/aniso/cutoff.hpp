#ifndef ANISO_CUTOFF_HPP
#define ANISO_CUTOFF_HPP

// Product cut-off functions eta = eta_t(t) * prod_i eta_i(x_i)^{p_i} with
// piecewise-linear factors: 1 on the inner cylinder, 0 outside the outer one.

#include <algorithm>
#include <cmath>
#include <vector>

#include "aniso/box.hpp"
#include "aniso/grid.hpp"
#include "aniso/params.hpp"

namespace aniso {

struct CutoffSpec
{
    SpaceTimeBox inner;
    SpaceTimeBox outer;
};

class Cutoff
{
public:
    Cutoff(CutoffSpec spec, const AnisoExponents& e) : spec_(std::move(spec)), p_(e.p_d)
    {
        const auto& in = spec_.inner;
        const auto& out = spec_.outer;
        check_same_dim(in.dim(), e.dim(), "cutoff inner cylinder");
        check_same_dim(out.dim(), e.dim(), "cutoff outer cylinder");
        for (std::size_t i = 0; i < e.dim(); ++i) {
            const double scale = std::max(1.0, std::abs(out.half[i]));
            if (std::abs(in.center[i] - out.center[i]) > 1e-12 * scale)
                throw ValidationError("cutoff cylinders must share their center");
            if (!(in.half[i] < out.half[i]))
                throw DomainError("cutoff gap along axis " + std::to_string(i) + " is degenerate (inner half-side " +
                                  std::to_string(in.half[i]) + " >= outer " + std::to_string(out.half[i]) + ")");
        }
        lower_gap_ = in.t_lo - out.t_lo;
        upper_gap_ = out.t_hi - in.t_hi;
        if (lower_gap_ < 0.0 || upper_gap_ < 0.0)
            throw DomainError("inner cylinder must lie inside the outer one in time");
        if (!(lower_gap_ > 0.0) && !(upper_gap_ > 0.0))
            throw DomainError("cutoff time gap is degenerate (inner and outer time extents coincide)");
    }

    const CutoffSpec& spec() const { return spec_; }
    std::size_t dim() const { return p_.size(); }

    // Linear ramp: 1 for |x - c| <= inner half, 0 for |x - c| >= outer half.
    double eta_axis(std::size_t i, double x) const
    {
        const double d = std::abs(x - spec_.outer.center[i]);
        const double r = (spec_.outer.half[i] - d) / (spec_.outer.half[i] - spec_.inner.half[i]);
        return std::clamp(r, 0.0, 1.0);
    }

    // Time factor: ramps up across the lower gap and down across the upper gap.
    // A closed time face of the outer cylinder is a face where eta_t stays 1.
    double eta_time(double t) const
    {
        const double tol = 1e-12 * std::max({1.0, std::abs(spec_.outer.t_lo), std::abs(spec_.outer.t_hi)});
        if (t < spec_.outer.t_lo - tol || t > spec_.outer.t_hi + tol)
            return 0.0;
        double v = 1.0;
        if (lower_gap_ > 0.0)
            v = std::min(v, std::clamp((t - spec_.outer.t_lo) / lower_gap_, 0.0, 1.0));
        if (upper_gap_ > 0.0)
            v = std::min(v, std::clamp((spec_.outer.t_hi - t) / upper_gap_, 0.0, 1.0));
        return v;
    }

    double eta_hat(std::span<const double> x, double t, std::size_t skip) const
    {
        double v = eta_time(t);
        for (std::size_t i = 0; i < p_.size(); ++i)
            if (i != skip)
                v *= std::pow(eta_axis(i, x[i]), p_[i]);
        return v;
    }

    double eta(std::span<const double> x, double t) const { return eta_hat(x, t, p_.size()); }

    // sup |d eta_i / dx_i| = 1 / gap_i
    std::vector<double> gradient_bounds() const
    {
        std::vector<double> g(p_.size());
        for (std::size_t i = 0; i < p_.size(); ++i)
            g[i] = 1.0 / (spec_.outer.half[i] - spec_.inner.half[i]);
        return g;
    }

    double time_gradient_bound() const
    {
        double g = 0.0;
        if (lower_gap_ > 0.0)
            g = std::max(g, 1.0 / lower_gap_);
        if (upper_gap_ > 0.0)
            g = std::max(g, 1.0 / upper_gap_);
        return g;
    }

    SpaceTimeField field(const Grid& g, double t0, double dt, std::size_t levels) const
    {
        return SpaceTimeField::sample(g, t0, dt, levels,
                                      [&](std::span<const double> x, double t) { return eta(x, t); });
    }

private:
    CutoffSpec spec_;
    std::vector<double> p_;
    double lower_gap_ = 0.0;
    double upper_gap_ = 0.0;
};

inline SpaceTimeField cutoff(const CutoffSpec& spec, const AnisoExponents& e, const SpaceTimeField& like)
{
    return Cutoff(spec, e).field(like.grid, like.t0, like.dt, like.levels);
}

}  // namespace aniso

#endif  // ANISO_CUTOFF_HPP
