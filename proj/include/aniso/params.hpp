#ifndef ANISO_PARAMS_HPP
#define ANISO_PARAMS_HPP

// Anisotropy vector p, the exponents derived from it, and the intrinsic
// cylinders those exponents define.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aniso/box.hpp"
#include "aniso/errors.hpp"
#include "aniso/rational.hpp"

namespace aniso {

struct PVector
{
    std::vector<Rational> p;

    std::size_t dim() const { return p.size(); }
};

inline PVector make_pvector(std::initializer_list<Rational> values)
{
    return PVector{std::vector<Rational>(values)};
}

// strict:     every invariant of p is an error.
// permissive: the Sobolev-subcritical condition (and positivity of alpha_i)
//             is downgraded to a warning; the scaling algebra never uses pbar*.
enum class Validation { strict, permissive };

struct AnisoExponents
{
    std::vector<Rational> p;
    Rational pbar;
    std::optional<Rational> pstar;  // only defined for pbar < N
    Rational lambda;
    Rational alpha;
    std::vector<Rational> alpha_i;
    std::vector<std::string> warnings;

    // Double copies for the numerical kernels.
    std::vector<double> p_d;
    std::vector<double> alpha_i_d;
    double pbar_d = 0.0;
    double lambda_d = 0.0;
    double alpha_d = 0.0;

    std::size_t dim() const { return p.size(); }
    bool isotropic() const
    {
        for (const auto& q : p)
            if (q != p.front())
                return false;
        return true;
    }
};

namespace detail {

inline std::string describe(const std::vector<Rational>& p)
{
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i)
        s += (i ? "," : "") + to_string(p[i]);
    return s + ")";
}

}  // namespace detail

// Harmonic mean, Sobolev exponent, lambda, alpha and alpha_i, all exact.
inline AnisoExponents derive_exponents(const PVector& pv, Validation mode = Validation::permissive)
{
    const auto& p = pv.p;
    const std::size_t n = p.size();
    if (n < 2)
        throw ValidationError("dimension N must be at least 2, got " + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] <= 2)
            throw ValidationError("p_" + std::to_string(i + 1) + " = " + to_string(p[i]) +
                                  " violates p_i > 2 in p = " + detail::describe(p));
        if (i > 0 && p[i] < p[i - 1])
            throw ValidationError("p must be sorted: p_" + std::to_string(i) + " = " + to_string(p[i - 1]) +
                                  " > p_" + std::to_string(i + 1) + " = " + to_string(p[i]));
    }

    AnisoExponents e;
    e.p = p;
    const Rational big_n = static_cast<long>(n);
    Rational inv_sum = 0;
    for (const auto& q : p)
        inv_sum += 1 / q;
    e.pbar = big_n / inv_sum;

    if (e.pbar < big_n) {
        e.pstar = big_n * e.pbar / (big_n - e.pbar);
        if (!(p.back() < *e.pstar)) {
            std::string msg = "p_N = " + to_string(p.back()) + " violates p_N < pbar* = " + to_string(*e.pstar);
            if (mode == Validation::strict)
                throw ValidationError(msg);
            e.warnings.push_back(msg);
        }
    } else {
        std::string msg = "pbar = " + to_string(e.pbar) + " >= N = " + std::to_string(n) +
                          ": pbar* undefined, subcritical check skipped";
        if (mode == Validation::strict)
            throw ValidationError(msg);
        e.warnings.push_back(msg);
    }

    e.lambda = big_n * (e.pbar - 2) + e.pbar;
    e.alpha = big_n / e.lambda;
    e.alpha_i.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rational numer = big_n * (e.pbar - p[i]) + e.pbar;
        e.alpha_i.push_back(numer / (e.lambda * p[i]));
        if (numer <= 0)
            e.warnings.push_back("alpha_" + std::to_string(i + 1) + " = " + to_string(e.alpha_i.back()) +
                                 " is not positive (N(pbar - p_i) + pbar <= 0)");
    }

    e.p_d.reserve(n);
    for (const auto& q : p)
        e.p_d.push_back(to_double(q));
    for (const auto& a : e.alpha_i)
        e.alpha_i_d.push_back(to_double(a));
    e.pbar_d = to_double(e.pbar);
    e.lambda_d = to_double(e.lambda);
    e.alpha_d = to_double(e.alpha);
    return e;
}

// Sum of alpha_i, to be compared with alpha using exact equality.
inline Rational alpha_sum(const AnisoExponents& e)
{
    Rational s = 0;
    for (const auto& a : e.alpha_i)
        s += a;
    return s;
}

enum class Orientation { backward, forward, full };

inline const char* to_string(Orientation o)
{
    switch (o) {
    case Orientation::backward:
        return "backward";
    case Orientation::forward:
        return "forward";
    case Orientation::full:
        return "full";
    }
    return "?";
}

// (x0, t0) + Q_rho(M): spatial half-sides M^{(p_i-2)/p_i} rho^{pbar/p_i},
// time interval (-rho^pbar, 0], [0, rho^pbar) or (-rho^pbar, rho^pbar].
struct IntrinsicCylinder
{
    std::vector<double> center;
    double t0 = 0.0;
    double rho = 1.0;
    double m = 1.0;
    Orientation orientation = Orientation::backward;
};

inline void check_cylinder(const IntrinsicCylinder& c, const AnisoExponents& e)
{
    if (!(c.rho > 0.0))
        throw DomainError("cylinder radius rho must be positive, got " + std::to_string(c.rho));
    if (!(c.m > 0.0))
        throw DomainError("intrinsic parameter M must be positive, got " + std::to_string(c.m));
    check_same_dim(c.center.size(), e.dim(), "cylinder center");
}

// Exponents of the half-side along axis i as a monomial in (rho, M).
inline Monomial half_side_monomial(const AnisoExponents& e, std::size_t i)
{
    return {e.pbar / e.p[i], (e.p[i] - 2) / e.p[i]};
}

// Product of the half-sides: |K_rho(M)| / 2^N as a monomial in (rho, M).
inline Monomial spatial_volume_monomial(const AnisoExponents& e)
{
    Monomial sum;
    for (std::size_t i = 0; i < e.dim(); ++i)
        sum = sum + half_side_monomial(e, i);
    return sum;
}

inline double half_side(const IntrinsicCylinder& c, const AnisoExponents& e, std::size_t i)
{
    return half_side_monomial(e, i).eval(c.rho, c.m);
}

inline double time_depth(const IntrinsicCylinder& c, const AnisoExponents& e)
{
    return rpow(c.rho, e.pbar);
}

inline SpaceTimeBox to_box(const IntrinsicCylinder& c, const AnisoExponents& e)
{
    check_cylinder(c, e);
    SpaceTimeBox b;
    b.center = c.center;
    b.half.resize(e.dim());
    for (std::size_t i = 0; i < e.dim(); ++i)
        b.half[i] = half_side(c, e, i);
    const double tau = time_depth(c, e);
    switch (c.orientation) {
    case Orientation::backward:
        b.t_lo = c.t0 - tau;
        b.t_hi = c.t0;
        b.lo_closed = false;
        b.hi_closed = true;
        break;
    case Orientation::forward:
        b.t_lo = c.t0;
        b.t_hi = c.t0 + tau;
        b.lo_closed = true;
        b.hi_closed = false;
        break;
    case Orientation::full:
        b.t_lo = c.t0 - tau;
        b.t_hi = c.t0 + tau;
        b.lo_closed = false;
        b.hi_closed = true;
        break;
    }
    return b;
}

// 2^N rho^N M^{N(pbar-2)/pbar}, evaluated from the closed form rather than
// from the product of the sides.
inline double spatial_volume(const IntrinsicCylinder& c, const AnisoExponents& e)
{
    check_cylinder(c, e);
    const Rational n = static_cast<long>(e.dim());
    return std::ldexp(rpow(c.rho, n) * rpow(c.m, n * (e.pbar - 2) / e.pbar), static_cast<int>(e.dim()));
}

inline double cylinder_volume(const IntrinsicCylinder& c, const AnisoExponents& e)
{
    check_cylinder(c, e);
    const Rational n = static_cast<long>(e.dim());
    double v = std::ldexp(rpow(c.rho, n + e.pbar) * rpow(c.m, n * (e.pbar - 2) / e.pbar), static_cast<int>(e.dim()));
    return c.orientation == Orientation::full ? 2.0 * v : v;
}

inline bool contains(const IntrinsicCylinder& c, const AnisoExponents& e, std::span<const double> x, double t)
{
    return to_box(c, e).contains(x, t);
}

}  // namespace aniso

#endif  // ANISO_PARAMS_HPP
