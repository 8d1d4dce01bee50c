#pragma once

// Dual arithmetic modes: exact rationals for verification, binary64 for
// simulation. Everything downstream is templated on the scalar type and
// talks to it through scalar_traits.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace cmfg {

// Expression templates off: plain value semantics keep deduced (lambda)
// return types and std::min/std::max well-behaved.
using Rational =
    boost::multiprecision::number<boost::multiprecision::backends::rational_adaptor<
                                      boost::multiprecision::backends::cpp_int_backend<>>,
                                  boost::multiprecision::et_off>;

/// Thrown on malformed inputs (contract violations, bad config values).
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Comparison tolerances used in binary64 mode; ignored by the exact mode.
struct Tols {
    double norm = 1e-12;  // distribution normalization
    double cmp = 1e-9;    // derived value comparisons
};

namespace detail {

inline Rational parse_rational(const std::string& s) {
    if (s.empty()) throw input_error("empty number string");
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (num.empty() || den.empty()) throw input_error("bad rational: " + s);
        try {
            boost::multiprecision::cpp_int p(num), q(den);
            if (q == 0) throw input_error("zero denominator: " + s);
            return Rational(p, q);
        } catch (const std::runtime_error&) {
            throw input_error("bad rational: " + s);
        }
    }
    // Decimal strings parse exactly: digits [. digits]
    std::string t = s;
    bool neg = false;
    if (t[0] == '+' || t[0] == '-') {
        neg = t[0] == '-';
        t = t.substr(1);
    }
    auto dot = t.find('.');
    std::string ip = dot == std::string::npos ? t : t.substr(0, dot);
    std::string fp = dot == std::string::npos ? "" : t.substr(dot + 1);
    if (ip.empty() && fp.empty()) throw input_error("bad number: " + s);
    for (char c : ip + fp)
        if (!std::isdigit(static_cast<unsigned char>(c))) throw input_error("bad number: " + s);
    boost::multiprecision::cpp_int p(ip.empty() ? "0" : ip);
    boost::multiprecision::cpp_int q = 1;
    for (char c : fp) {
        p = p * 10 + (c - '0');
        q *= 10;
    }
    Rational r(p, q);
    return neg ? -r : r;
}

}  // namespace detail

template <typename S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool exact = true;
    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational from_ratio(long long p, long long q) { return Rational(p, q); }
    static Rational parse(const std::string& s) { return detail::parse_rational(s); }
    static std::string str(const Rational& r) {
        std::string n = numerator(r).str();
        if (denominator(r) == 1) return n;
        return n + "/" + denominator(r).str();
    }
    static double to_double(const Rational& r) { return r.convert_to<double>(); }
    static Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }
    static bool eq(const Rational& a, const Rational& b, const Tols& = {}) { return a == b; }
    static bool close(const Rational& a, const Rational& b, const Tols& = {}) { return a == b; }
};

template <>
struct scalar_traits<double> {
    static constexpr bool exact = false;
    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double from_ratio(long long p, long long q) {
        return static_cast<double>(p) / static_cast<double>(q);
    }
    static double parse(const std::string& s) {
        return scalar_traits<Rational>::parse(s).convert_to<double>();
    }
    static std::string str(double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
    }
    static double to_double(double x) { return x; }
    static double abs(double x) { return std::fabs(x); }
    static bool eq(double a, double b, const Tols& t = {}) { return std::fabs(a - b) <= t.norm; }
    static bool close(double a, double b, const Tols& t = {}) { return std::fabs(a - b) <= t.cmp; }
};

}  // namespace cmfg
