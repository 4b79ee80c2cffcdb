#pragma once

#include <cstdint>
#include <string>

#include "ddrop/error.hpp"

namespace ddrop {

using i64 = std::int64_t;
using i128 = __int128;

// Checked 64-bit arithmetic.  Stage products in deep inductive systems exceed
// 64 bits, so anything that can grow multiplicatively goes through i128 instead;
// these helpers guard the places that must stay within i64.
inline i64 checked_add(i64 x, i64 y) {
  i64 r;
  if (__builtin_add_overflow(x, y, &r)) fail("Overflow", "integer addition overflow");
  return r;
}

inline i64 checked_mul(i64 x, i64 y) {
  i64 r;
  if (__builtin_mul_overflow(x, y, &r)) fail("Overflow", "integer multiplication overflow");
  return r;
}

inline i64 gcd_i64(i64 a, i64 b) {
  while (b != 0) {
    i64 t = a % b;
    a = b;
    b = t;
  }
  return a < 0 ? -a : a;
}

// Extended gcd: returns g = gcd(a,b) and x,y with a*x + b*y = g.
inline i64 egcd(i64 a, i64 b, i64& x, i64& y) {
  if (b == 0) {
    x = 1;
    y = 0;
    return a;
  }
  i64 x1, y1;
  i64 g = egcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

// Inverse of a modulo m; requires gcd(a,m)=1.
inline i64 modinv(i64 a, i64 m) {
  i64 x, y;
  a %= m;
  if (a < 0) a += m;
  i64 g = egcd(a, m, x, y);
  require(g == 1, "NotCoprime", "modular inverse of non-unit");
  x %= m;
  if (x < 0) x += m;
  return x;
}

// (x*y) mod m without 64-bit overflow; x, y need not be reduced.
inline i64 mulmod_i64(i64 x, i64 y, i64 m) {
  i128 r = (static_cast<i128>(x) * y) % m;
  if (r < 0) r += m;
  return static_cast<i64>(r);
}

inline i128 i128_abs(i128 v) { return v < 0 ? -v : v; }

inline std::string i128_to_string(i128 v) {
  if (v == 0) return "0";
  bool neg = v < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-v) : static_cast<unsigned __int128>(v);
  char buf[48];
  int pos = 48;
  while (u > 0) {
    buf[--pos] = static_cast<char>('0' + static_cast<int>(u % 10));
    u /= 10;
  }
  std::string s(buf + pos, 48 - pos);
  return neg ? "-" + s : s;
}

inline i128 i128_from_string(const std::string& s) {
  require(!s.empty(), "ParseError", "empty integer literal");
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-' || s[0] == '+') {
    neg = s[0] == '-';
    i = 1;
  }
  require(i < s.size(), "ParseError", "sign-only integer literal");
  i128 v = 0;
  for (; i < s.size(); ++i) {
    require(s[i] >= '0' && s[i] <= '9', "ParseError", "bad digit in integer literal");
    v = v * 10 + (s[i] - '0');
  }
  return neg ? -v : v;
}

inline double i128_to_double(i128 v) {
  return static_cast<double>(v);
}

inline i64 i128_to_i64(i128 v) {
  require(v >= INT64_MIN && v <= INT64_MAX, "Overflow", "value exceeds 64 bits");
  return static_cast<i64>(v);
}

}  // namespace ddrop
