#ifndef ANISO_BOX_HPP
#define ANISO_BOX_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "aniso/errors.hpp"

namespace aniso {

// Axis-aligned space-time box  prod_i {|x_i - c_i| < half_i} x (t_lo, t_hi].
//
// Spatial faces are always open. Each time endpoint is open or closed; the
// default is the backward-cylinder convention (open below, closed above).
// The eps arguments of contains() snap points lying within eps of a face onto
// that face, so grid nodes that coincide with a face up to rounding are
// classified as the exact point would be.
struct SpaceTimeBox
{
    std::vector<double> center;
    std::vector<double> half;
    double t_lo = 0.0;
    double t_hi = 0.0;
    bool lo_closed = false;
    bool hi_closed = true;

    std::size_t dim() const { return center.size(); }

    bool contains_space(std::span<const double> x, double eps = 0.0) const
    {
        for (std::size_t i = 0; i < center.size(); ++i)
            if (!(std::abs(x[i] - center[i]) < half[i] - eps))
                return false;
        return true;
    }

    bool contains_coord(std::size_t axis, double x, double eps = 0.0) const
    {
        return std::abs(x - center[axis]) < half[axis] - eps;
    }

    bool contains_time(double t, double eps = 0.0) const
    {
        bool above = lo_closed ? t >= t_lo - eps : t > t_lo + eps;
        bool below = hi_closed ? t <= t_hi + eps : t < t_hi - eps;
        return above && below;
    }

    bool contains(std::span<const double> x, double t, double eps_space = 0.0, double eps_time = 0.0) const
    {
        return contains_time(t, eps_time) && contains_space(x, eps_space);
    }

    // Lebesgue measure of the box.
    double volume() const
    {
        double v = t_hi - t_lo;
        for (double h : half)
            v *= 2.0 * h;
        return v;
    }

    double spatial_volume() const
    {
        double v = 1.0;
        for (double h : half)
            v *= 2.0 * h;
        return v;
    }
};

inline void check_same_dim(std::size_t a, std::size_t b, const char* what)
{
    if (a != b)
        throw ValidationError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                              std::to_string(b) + ")");
}

}  // namespace aniso

#endif  // ANISO_BOX_HPP
