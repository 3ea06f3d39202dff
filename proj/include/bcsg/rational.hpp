#pragma once

// Exact arithmetic used by the model and equation layers.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bcsg {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational make_rational(long long num, long long den = 1) {
  return Rational(BigInt(num), BigInt(den));
}

/// Parses "num/den", an integer, or a decimal string such as "0.25" or
/// "1e-3". Decimals are converted exactly (no binary rounding).
inline Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
  };
  std::string s(text);
  while (!s.empty() && (s.front() == ' ')) s.erase(s.begin());
  while (!s.empty() && (s.back() == ' ')) s.pop_back();
  if (s.empty()) return fail();

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    std::string num = s.substr(0, slash);
    std::string den = s.substr(slash + 1);
    auto is_int = [](const std::string& v) {
      if (v.empty()) return false;
      std::size_t i = (v[0] == '-' || v[0] == '+') ? 1 : 0;
      if (i == v.size()) return false;
      for (; i < v.size(); ++i)
        if (v[i] < '0' || v[i] > '9') return false;
      return true;
    };
    if (!is_int(num) || !is_int(den)) return fail();
    BigInt d(den);
    if (d == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
    return Rational(BigInt(num), d);
  }

  bool negative = false;
  std::size_t i = 0;
  if (s[i] == '-' || s[i] == '+') {
    negative = s[i] == '-';
    ++i;
  }
  BigInt mantissa = 0;
  long long scale = 0;
  bool seen_digit = false;
  bool seen_point = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      mantissa = mantissa * 10 + (c - '0');
      if (seen_point) --scale;
      seen_digit = true;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) return fail();
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') return fail();
    ++i;
    std::string exp = s.substr(i);
    if (exp.empty()) return fail();
    std::size_t used = 0;
    long long e = 0;
    try {
      e = std::stoll(exp, &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != exp.size() || e > 100000 || e < -100000) return fail();
    scale += e;
  }
  Rational value(mantissa);
  BigInt ten_pow = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
  if (scale < 0)
    value /= Rational(ten_pow);
  else
    value *= Rational(ten_pow);
  return negative ? Rational(-value) : value;
}

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Exact conversion of a finite double to a rational.
inline Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value has no rational form");
  if (v == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(v, &exp);  // v = mant * 2^exp, |mant| in [0.5, 1)
  auto scaled = static_cast<long long>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r{BigInt(scaled)};
  if (exp >= 0)
    r *= Rational(BigInt(1) << exp);
  else
    r /= Rational(BigInt(1) << (-exp));
  return r;
}

/// Smallest integer d with 2^d >= value, for value > 0.
inline long long ceil_log2(const Rational& value) {
  if (value <= 0) throw std::invalid_argument("ceil_log2 of non-positive value");
  const BigInt& num = numerator(value);
  const BigInt& den = denominator(value);
  long long guess = static_cast<long long>(msb(num)) - static_cast<long long>(msb(den));
  // 2^guess is within a factor 2 of value; settle exactly.
  auto pow2_ge = [&](long long d) {
    if (d >= 0) return (den << static_cast<unsigned>(d)) >= num;
    return den >= (num << static_cast<unsigned>(-d));
  };
  long long d = guess - 1;
  while (!pow2_ge(d)) ++d;
  while (pow2_ge(d - 1)) --d;
  return d;
}

}  // namespace bcsg
