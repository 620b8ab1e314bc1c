#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

namespace hankelab {

using BigInt = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;

/// 2^e as an exact rational (e may be negative).
Rational pow2(int e);

/// Largest integer <= q.
std::int64_t floor_to_int(const Rational& q);

/// Smallest integer >= q.
std::int64_t ceil_to_int(const Rational& q);

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// "p/q" with q > 0; integers are written as "p/1".
std::string to_string(const Rational& q);

/// Accepts "p/q", "p" or a decimal like "0.25".
Rational parse_rational(std::string_view text);

/// If q = 2^e exactly, returns e; otherwise throws std::invalid_argument.
int exact_log2(const Rational& q);

/// Smallest L >= 0 with q * 2^L an integer; throws if the denominator is not
/// a power of two.
int dyadic_depth(const Rational& q);

/// Largest e with 2^e <= q (q > 0).
int floor_log2(const Rational& q);

/// Smallest e with q <= 2^e (q > 0).
int ceil_log2(const Rational& q);

inline Rational abs(const Rational& q) { return q < 0 ? Rational(-q) : q; }

}  // namespace hankelab
