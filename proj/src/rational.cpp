#include "hankelab/rational.hpp"

#include <stdexcept>

namespace hankelab {

Rational pow2(int e) {
  BigInt one = 1;
  if (e >= 0) return Rational(BigInt(one << e));
  return Rational(one, BigInt(one << (-e)));
}

std::int64_t floor_to_int(const Rational& q) {
  BigInt num = boost::multiprecision::numerator(q);
  BigInt den = boost::multiprecision::denominator(q);
  BigInt f = num / den;  // truncates toward zero
  if (num < 0 && f * den != num) f -= 1;
  return f.convert_to<std::int64_t>();
}

std::int64_t ceil_to_int(const Rational& q) { return -floor_to_int(Rational(-q)); }

std::string to_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\r')) s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  if (s.empty()) throw std::invalid_argument("empty rational");
  try {
    auto slash = s.find('/');
    if (slash != std::string::npos) {
      BigInt num(s.substr(0, slash));
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
      return Rational(num, den);
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      int places = static_cast<int>(s.size() - dot - 1);
      BigInt den = 1;
      for (int i = 0; i < places; ++i) den *= 10;
      return Rational(BigInt(digits), den);
    }
    return Rational(BigInt(s));
  } catch (const std::runtime_error&) {
    throw std::invalid_argument("malformed rational '" + s + "'");
  }
}

int exact_log2(const Rational& q) {
  if (q <= 0) throw std::invalid_argument("exact_log2 of non-positive value");
  BigInt num = boost::multiprecision::numerator(q);
  BigInt den = boost::multiprecision::denominator(q);
  auto is_pow2 = [](const BigInt& v) { return v > 0 && (v & (v - 1)) == 0; };
  if (den == 1 && is_pow2(num)) return static_cast<int>(boost::multiprecision::msb(num));
  if (num == 1 && is_pow2(den)) return -static_cast<int>(boost::multiprecision::msb(den));
  throw std::invalid_argument(to_string(q) + " is not a power of two");
}

int dyadic_depth(const Rational& q) {
  BigInt den = boost::multiprecision::denominator(q);
  if ((den & (den - 1)) != 0)
    throw std::invalid_argument(to_string(q) + " is not a dyadic rational");
  return static_cast<int>(boost::multiprecision::msb(den));
}

int floor_log2(const Rational& q) {
  if (q <= 0) throw std::invalid_argument("floor_log2 of non-positive value");
  BigInt num = boost::multiprecision::numerator(q);
  BigInt den = boost::multiprecision::denominator(q);
  int e = static_cast<int>(boost::multiprecision::msb(num)) -
          static_cast<int>(boost::multiprecision::msb(den));
  // 2^(e-1) < q < 2^(e+1)
  if (pow2(e) > q) --e;
  return e;
}

int ceil_log2(const Rational& q) {
  int e = floor_log2(q);
  return pow2(e) == q ? e : e + 1;
}

}  // namespace hankelab
