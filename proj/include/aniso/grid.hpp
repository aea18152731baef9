#ifndef ANISO_GRID_HPP
#define ANISO_GRID_HPP

// Uniform tensor-product grids and the fields sampled on them.
//
// Grids are cell-centred: node j of an axis sits at the centre of the cell
// [lo + j h, lo + (j+1) h]. Node coordinates are computed from the axis centre,
// so a grid centred at 0 is exactly mirror-symmetric in floating point.
// Each node carries the measure of its cell (prod h_i, times dt for space-time
// fields); all quadratures and measures below are node sums with that weight.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aniso/box.hpp"
#include "aniso/errors.hpp"

namespace aniso {

struct Axis
{
    double center = 0.0;
    double h = 1.0;
    std::size_t n = 2;

    static Axis from_bounds(double lo, double hi, std::size_t n)
    {
        if (!(hi > lo))
            throw ValidationError("axis bounds must satisfy lo < hi");
        if (n < 2)
            throw ValidationError("an axis needs at least 2 nodes");
        return Axis{0.5 * (lo + hi), (hi - lo) / static_cast<double>(n), n};
    }

    double node(std::size_t j) const
    {
        return center + (static_cast<double>(j) + 0.5 - 0.5 * static_cast<double>(n)) * h;
    }
    double lo() const { return center - 0.5 * static_cast<double>(n) * h; }
    double hi() const { return center + 0.5 * static_cast<double>(n) * h; }
    double first() const { return node(0); }
    double last() const { return node(n - 1); }

    friend bool operator==(const Axis& a, const Axis& b)
    {
        return a.center == b.center && a.h == b.h && a.n == b.n;
    }
};

class Grid
{
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes) : axes_(std::move(axes))
    {
        if (axes_.empty())
            throw ValidationError("grid needs at least one axis");
        strides_.resize(axes_.size());
        std::size_t s = 1;
        for (std::size_t i = 0; i < axes_.size(); ++i) {
            if (!(axes_[i].h > 0.0) || axes_[i].n < 2)
                throw ValidationError("axis " + std::to_string(i) + " needs h > 0 and n >= 2");
            strides_[i] = s;
            s *= axes_[i].n;
        }
        size_ = s;
    }

    // Cube [-half, half]^dim with n nodes per axis.
    static Grid cube(std::size_t dim, double half, std::size_t n)
    {
        return Grid(std::vector<Axis>(dim, Axis::from_bounds(-half, half, n)));
    }

    std::size_t dim() const { return axes_.size(); }
    std::size_t size() const { return size_; }
    const Axis& axis(std::size_t i) const { return axes_[i]; }
    const std::vector<Axis>& axes() const { return axes_; }
    std::size_t stride(std::size_t i) const { return strides_[i]; }

    // cell measure prod h_i
    double cell_volume() const
    {
        double v = 1.0;
        for (const auto& a : axes_)
            v *= a.h;
        return v;
    }

    std::size_t coord_index(std::size_t flat, std::size_t i) const { return (flat / strides_[i]) % axes_[i].n; }

    void node(std::size_t flat, std::span<double> out) const
    {
        for (std::size_t i = 0; i < axes_.size(); ++i)
            out[i] = axes_[i].node(coord_index(flat, i));
    }

    std::vector<double> node(std::size_t flat) const
    {
        std::vector<double> x(dim());
        node(flat, x);
        return x;
    }

    std::size_t flat_index(std::span<const std::size_t> idx) const
    {
        std::size_t f = 0;
        for (std::size_t i = 0; i < axes_.size(); ++i)
            f += idx[i] * strides_[i];
        return f;
    }

    // Node touches the outer layer of the grid along some axis.
    bool on_boundary(std::size_t flat) const
    {
        for (std::size_t i = 0; i < axes_.size(); ++i) {
            std::size_t j = coord_index(flat, i);
            if (j == 0 || j + 1 == axes_[i].n)
                return true;
        }
        return false;
    }

    friend bool operator==(const Grid& a, const Grid& b) { return a.axes_ == b.axes_; }

private:
    std::vector<Axis> axes_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

struct GridField
{
    Grid grid;
    std::vector<double> values;

    GridField() = default;
    GridField(Grid g, double fill = 0.0) : grid(std::move(g)), values(grid.size(), fill) {}
    GridField(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v))
    {
        if (values.size() != grid.size())
            throw ValidationError("field value count does not match grid size");
    }

    template <class F>
    static GridField sample(const Grid& g, F&& f)
    {
        GridField out(g);
        std::vector<double> x(g.dim());
        for (std::size_t k = 0; k < g.size(); ++k) {
            g.node(k, x);
            out.values[k] = f(std::span<const double>(x));
        }
        return out;
    }
};

// Space grid plus uniformly spaced time levels t_k = t0 + k dt.
struct SpaceTimeField
{
    Grid grid;
    double t0 = 0.0;
    double dt = 1.0;
    std::size_t levels = 0;
    std::vector<double> values;  // level-major

    SpaceTimeField() = default;
    SpaceTimeField(Grid g, double t0_, double dt_, std::size_t levels_, double fill = 0.0)
        : grid(std::move(g)), t0(t0_), dt(dt_), levels(levels_), values(grid.size() * levels_, fill)
    {
        validate();
    }

    void validate() const
    {
        if (levels < 2)
            throw ValidationError("a space-time field needs at least 2 time levels");
        if (!(dt > 0.0))
            throw ValidationError("time step between levels must be positive");
        if (values.size() != grid.size() * levels)
            throw ValidationError("space-time value count does not match grid size x levels");
    }

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * dt; }
    double t_last() const { return time(levels - 1); }

    std::span<double> level(std::size_t k) { return {values.data() + k * grid.size(), grid.size()}; }
    std::span<const double> level(std::size_t k) const { return {values.data() + k * grid.size(), grid.size()}; }

    GridField level_field(std::size_t k) const
    {
        auto l = level(k);
        return GridField(grid, std::vector<double>(l.begin(), l.end()));
    }

    void set_level(std::size_t k, const GridField& f)
    {
        if (!(f.grid == grid))
            throw ValidationError("level grid mismatch");
        std::copy(f.values.begin(), f.values.end(), level(k).begin());
    }

    template <class F>
    static SpaceTimeField sample(const Grid& g, double t0, double dt, std::size_t levels, F&& f)
    {
        SpaceTimeField out(g, t0, dt, levels);
        std::vector<double> x(g.dim());
        for (std::size_t l = 0; l < levels; ++l) {
            const double t = out.time(l);
            auto lv = out.level(l);
            for (std::size_t k = 0; k < g.size(); ++k) {
                g.node(k, x);
                lv[k] = f(std::span<const double>(x), t);
            }
        }
        return out;
    }
};

// Compensated (Neumaier) running sum; fixed summation order keeps results
// deterministic.
class Accumulator
{
public:
    void add(double v)
    {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Snap tolerances used for node-versus-face comparisons.
inline double space_eps(const Axis& a)
{
    return 1e-9 * a.h;
}
inline double time_eps(double dt)
{
    return 1e-9 * dt;
}

// Box covering the whole spatial cell extent of the grid; the time interval is
// (t0, t_last] for space-time use.
inline SpaceTimeBox domain_box(const Grid& g, double t_lo = 0.0, double t_hi = 0.0)
{
    SpaceTimeBox b;
    for (const auto& a : g.axes()) {
        b.center.push_back(a.center);
        b.half.push_back(0.5 * static_cast<double>(a.n) * a.h);
    }
    b.t_lo = t_lo;
    b.t_hi = t_hi;
    return b;
}

inline SpaceTimeBox domain_box(const SpaceTimeField& f)
{
    return domain_box(f.grid, f.t0, f.t_last());
}

inline void check_region_space(const Grid& g, const SpaceTimeBox& r)
{
    check_same_dim(r.dim(), g.dim(), "region");
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const Axis& a = g.axis(i);
        const double tol = 1e-9 * a.h;
        if (r.center[i] - r.half[i] < a.lo() - tol || r.center[i] + r.half[i] > a.hi() + tol)
            throw OutOfDomainError("region escapes the grid along axis " + std::to_string(i) + ": [" +
                                   std::to_string(r.center[i] - r.half[i]) + ", " +
                                   std::to_string(r.center[i] + r.half[i]) + "] vs [" + std::to_string(a.lo()) +
                                   ", " + std::to_string(a.hi()) + "]");
    }
}

inline void check_region(const SpaceTimeField& f, const SpaceTimeBox& r)
{
    check_region_space(f.grid, r);
    const double tol = time_eps(f.dt);
    if (r.t_lo < f.t0 - tol || r.t_hi > f.t_last() + tol)
        throw OutOfDomainError("region time interval [" + std::to_string(r.t_lo) + ", " + std::to_string(r.t_hi) +
                               "] escapes the stored levels [" + std::to_string(f.t0) + ", " +
                               std::to_string(f.t_last()) + "]");
}

// Per-axis membership masks; box membership is separable.
inline std::vector<std::vector<char>> axis_masks(const Grid& g, const SpaceTimeBox& r)
{
    std::vector<std::vector<char>> masks(g.dim());
    for (std::size_t i = 0; i < g.dim(); ++i) {
        const Axis& a = g.axis(i);
        masks[i].resize(a.n);
        for (std::size_t j = 0; j < a.n; ++j)
            masks[i][j] = r.contains_coord(i, a.node(j), space_eps(a));
    }
    return masks;
}

inline std::vector<char> node_mask(const Grid& g, const SpaceTimeBox& r)
{
    auto masks = axis_masks(g, r);
    std::vector<char> m(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        char in = 1;
        for (std::size_t i = 0; i < g.dim() && in; ++i)
            in = masks[i][g.coord_index(k, i)];
        m[k] = in;
    }
    return m;
}

inline std::vector<std::size_t> levels_in(const SpaceTimeField& f, const SpaceTimeBox& r)
{
    std::vector<std::size_t> out;
    for (std::size_t l = 0; l < f.levels; ++l)
        if (r.contains_time(f.time(l), time_eps(f.dt)))
            out.push_back(l);
    return out;
}

// Cell-sum quadrature of f over the nodes of the region (spatial part of r).
inline double integrate(const GridField& f, const SpaceTimeBox& r)
{
    check_region_space(f.grid, r);
    auto mask = node_mask(f.grid, r);
    Accumulator acc;
    for (std::size_t k = 0; k < f.values.size(); ++k)
        if (mask[k])
            acc.add(f.values[k]);
    return acc.value() * f.grid.cell_volume();
}

inline double integrate(const GridField& f)
{
    Accumulator acc;
    for (double v : f.values)
        acc.add(v);
    return acc.value() * f.grid.cell_volume();
}

inline double integrate(const SpaceTimeField& f, const SpaceTimeBox& r)
{
    check_region(f, r);
    auto mask = node_mask(f.grid, r);
    Accumulator acc;
    for (std::size_t l : levels_in(f, r)) {
        auto lv = f.level(l);
        for (std::size_t k = 0; k < lv.size(); ++k)
            if (mask[k])
                acc.add(lv[k]);
    }
    return acc.value() * f.grid.cell_volume() * f.dt;
}

enum class Compare { lt, le, gt, ge };

inline bool compare(double v, double k, Compare c)
{
    switch (c) {
    case Compare::lt:
        return v < k;
    case Compare::le:
        return v <= k;
    case Compare::gt:
        return v > k;
    case Compare::ge:
        return v >= k;
    }
    return false;
}

// Node measure of the region itself (cell counting).
inline double region_measure(const Grid& g, const SpaceTimeBox& r)
{
    check_region_space(g, r);
    auto masks = axis_masks(g, r);
    double v = 1.0;
    for (std::size_t i = 0; i < g.dim(); ++i)
        v *= static_cast<double>(std::count(masks[i].begin(), masks[i].end(), 1)) * g.axis(i).h;
    return v;
}

inline double region_measure(const SpaceTimeField& f, const SpaceTimeBox& r)
{
    check_region(f, r);
    return region_measure(f.grid, r) * static_cast<double>(levels_in(f, r).size()) * f.dt;
}

// Measure of {f cmp k} inside the region: a cell counts iff its node satisfies
// the inequality.
inline double sublevel_measure(const GridField& f, double k, const SpaceTimeBox& r, Compare c = Compare::le)
{
    check_region_space(f.grid, r);
    auto mask = node_mask(f.grid, r);
    std::size_t count = 0;
    for (std::size_t j = 0; j < f.values.size(); ++j)
        if (mask[j] && compare(f.values[j], k, c))
            ++count;
    return static_cast<double>(count) * f.grid.cell_volume();
}

inline double sublevel_measure(const SpaceTimeField& f, double k, const SpaceTimeBox& r, Compare c = Compare::le)
{
    check_region(f, r);
    auto mask = node_mask(f.grid, r);
    std::size_t count = 0;
    for (std::size_t l : levels_in(f, r)) {
        auto lv = f.level(l);
        for (std::size_t j = 0; j < lv.size(); ++j)
            if (mask[j] && compare(lv[j], k, c))
                ++count;
    }
    return static_cast<double>(count) * f.grid.cell_volume() * f.dt;
}

enum class Sign { plus, minus };

// (f - k)_+ = max(f - k, 0),  (f - k)_- = max(k - f, 0)
inline double truncate(double v, double k, Sign s)
{
    return s == Sign::plus ? std::max(v - k, 0.0) : std::max(k - v, 0.0);
}

inline GridField truncate(const GridField& f, double k, Sign s)
{
    GridField out(f.grid);
    for (std::size_t j = 0; j < f.values.size(); ++j)
        out.values[j] = truncate(f.values[j], k, s);
    return out;
}

inline SpaceTimeField truncate(const SpaceTimeField& f, double k, Sign s)
{
    SpaceTimeField out = f;
    for (double& v : out.values)
        v = truncate(v, k, s);
    return out;
}

inline double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Interpolation stencil along one axis: value = (1-w) f[j] + w f[j+1].
struct AxisStencil
{
    std::size_t j = 0;
    double w = 0.0;
};

// Locates x between nodes of a. Coordinates within 1e-9 h of a node snap onto
// it, so grid-compatible maps reproduce node values bitwise.
inline bool locate(const Axis& a, double x, AxisStencil& out)
{
    double s = (x - a.first()) / a.h;
    const double last = static_cast<double>(a.n - 1);
    const double snap = 1e-9;
    if (s < -snap || s > last + snap || !std::isfinite(s))
        return false;
    const double r = std::round(s);
    if (std::abs(s - r) < snap)
        s = r;
    s = std::clamp(s, 0.0, last);
    std::size_t j = static_cast<std::size_t>(s);
    if (j >= a.n - 1)
        j = a.n - 2;
    out.j = j;
    out.w = s - static_cast<double>(j);
    return true;
}

// Multilinear combination over the 2^N corners of the stencil cell.
inline double interpolate(const Grid& g, std::span<const double> values, std::span<const AxisStencil> st)
{
    const std::size_t n = g.dim();
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool up = (corner >> i) & 1U;
            const double wi = up ? st[i].w : 1.0 - st[i].w;
            if (wi == 0.0) {
                w = 0.0;
                break;
            }
            w *= wi;
            flat += (st[i].j + (up ? 1 : 0)) * g.stride(i);
        }
        if (w != 0.0)
            acc += w * values[flat];
    }
    return acc;
}

inline std::string format_point(std::span<const double> x, std::optional<double> t = std::nullopt)
{
    std::string s = "(";
    for (std::size_t i = 0; i < x.size(); ++i)
        s += (i ? ", " : "") + std::to_string(x[i]);
    if (t)
        s += "; t=" + std::to_string(*t);
    return s + ")";
}

inline double interpolate(const GridField& f, std::span<const double> x)
{
    std::vector<AxisStencil> st(f.grid.dim());
    for (std::size_t i = 0; i < f.grid.dim(); ++i)
        if (!locate(f.grid.axis(i), x[i], st[i]))
            throw OutOfDomainError("point " + format_point(x) + " outside field domain");
    return interpolate(f.grid, f.values, st);
}

inline bool locate_time(const SpaceTimeField& f, double t, AxisStencil& out)
{
    Axis time_axis{0.0, f.dt, f.levels};
    time_axis.center = f.t0 + 0.5 * static_cast<double>(f.levels - 1) * f.dt;
    return locate(time_axis, t, out);
}

inline double interpolate(const SpaceTimeField& f, std::span<const double> x, double t)
{
    std::vector<AxisStencil> st(f.grid.dim());
    for (std::size_t i = 0; i < f.grid.dim(); ++i)
        if (!locate(f.grid.axis(i), x[i], st[i]))
            throw OutOfDomainError("point " + format_point(x, t) + " outside field domain");
    AxisStencil ts;
    if (!locate_time(f, t, ts))
        throw OutOfDomainError("time " + std::to_string(t) + " outside stored levels");
    const double a = interpolate(f.grid, f.level(ts.j), st);
    if (ts.w == 0.0)
        return a;
    const double b = interpolate(f.grid, f.level(ts.j + 1), st);
    return (1.0 - ts.w) * a + ts.w * b;
}

}  // namespace aniso

#endif  // ANISO_GRID_HPP
