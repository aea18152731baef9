#ifndef ANISO_RATIONAL_HPP
#define ANISO_RATIONAL_HPP

// Exact rational arithmetic for exponent bookkeeping.
//
// Every exponent (pbar, lambda, alpha, the per-axis scaling powers) is kept as a
// cpp_rational so that identities such as sum(alpha_i) == alpha are checked with
// operator==, not with a tolerance. Doubles only appear when a power is applied
// to a concrete radius or amplitude.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "aniso/errors.hpp"

namespace aniso {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r)
{
    return r.convert_to<double>();
}

inline long double to_long_double(const Rational& r)
{
    return r.convert_to<long double>();
}

inline std::string to_string(const Rational& r)
{
    return r.str();
}

// Parses "7", "-3", "21/10", "2.1", "1.5e-3". Decimal input is converted
// exactly (2.1 -> 21/10), never through a binary double.
inline Rational parse_rational(std::string_view text)
{
    auto fail = [&] { throw ValidationError("not a rational number: '" + std::string(text) + "'"); };
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
            s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
            s.remove_suffix(1);
        return s;
    };
    std::string_view s = trim(text);
    if (s.empty())
        fail();

    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        Rational num = parse_rational(s.substr(0, slash));
        Rational den = parse_rational(s.substr(slash + 1));
        if (den == 0)
            fail();
        return num / den;
    }

    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
        negative = s.front() == '-';
        s.remove_prefix(1);
    }
    std::string_view mantissa = s;
    long exponent = 0;
    if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
        mantissa = s.substr(0, e);
        std::string exp_text(s.substr(e + 1));
        if (exp_text.empty())
            fail();
        std::size_t used = 0;
        try {
            exponent = std::stol(exp_text, &used);
        } catch (...) {
            fail();
        }
        if (used != exp_text.size())
            fail();
    }
    BigInt digits = 0;
    long frac_digits = 0;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : mantissa) {
        if (c == '.') {
            if (seen_dot)
                fail();
            seen_dot = true;
        } else if (c >= '0' && c <= '9') {
            digits = digits * 10 + (c - '0');
            seen_digit = true;
            if (seen_dot)
                ++frac_digits;
        } else {
            fail();
        }
    }
    if (!seen_digit)
        fail();
    long scale = exponent - frac_digits;
    BigInt ten_power = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(std::labs(scale)));
    Rational value = scale >= 0 ? Rational(digits * ten_power) : Rational(digits, ten_power);
    return negative ? Rational(-value) : value;
}

// base^exponent for a positive double base and exact exponent.
inline double rpow(double base, const Rational& exponent)
{
    if (exponent == 0)
        return 1.0;
    return std::pow(base, to_double(exponent));
}

// A power product rho^a * M^b with exact exponents, the shape of every
// intrinsic side length, time depth and Jacobian factor in the scaling theory.
struct Monomial
{
    Rational rho_exp = 0;
    Rational m_exp = 0;

    double eval(double rho, double m) const { return rpow(rho, rho_exp) * rpow(m, m_exp); }
    bool is_unit() const { return rho_exp == 0 && m_exp == 0; }

    friend Monomial operator+(const Monomial& a, const Monomial& b)
    {
        return {a.rho_exp + b.rho_exp, a.m_exp + b.m_exp};
    }
    friend Monomial operator-(const Monomial& a, const Monomial& b)
    {
        return {a.rho_exp - b.rho_exp, a.m_exp - b.m_exp};
    }
    friend Monomial operator*(const Rational& s, const Monomial& a) { return {s * a.rho_exp, s * a.m_exp}; }
    friend bool operator==(const Monomial& a, const Monomial& b)
    {
        return a.rho_exp == b.rho_exp && a.m_exp == b.m_exp;
    }
};

}  // namespace aniso

#endif  // ANISO_RATIONAL_HPP
