#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

#include "ctxlab/errors.hpp"

namespace ctxlab {

// Exact arbitrary-precision rational. Always stored reduced with positive
// denominator (boost keeps the canonical form).
using Rational = boost::multiprecision::cpp_rational;
using Integer = boost::multiprecision::cpp_int;

inline Integer numerator(const Rational& r) { return boost::multiprecision::numerator(r); }
inline Integer denominator(const Rational& r) { return boost::multiprecision::denominator(r); }

// Canonical "p/q" form, denominator always printed ("0/1", "1/1", "2/3").
inline std::string rational_string(const Rational& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "p" and "p/q" with optional sign.
inline Rational parse_rational(std::string_view text) {
    auto bad = [&] { throw DomainError("invalid rational: '" + std::string(text) + "'"); };
    if (text.empty()) bad();
    auto slash = text.find('/');
    try {
        if (slash == std::string_view::npos) return Rational(Integer(std::string(text)));
        Integer num{std::string(text.substr(0, slash))};
        Integer den{std::string(text.substr(slash + 1))};
        if (den == 0) bad();
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        bad();
    }
    return Rational{};  // unreachable
}

}  // namespace ctxlab
