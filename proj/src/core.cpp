#include "biforms/core.hpp"

#include <cmath>
#include <limits>

namespace biforms {

Rational exact_rational(double v) {
  require(std::isfinite(v), "non-finite real value");
  return Rational(v);
}

Rational parse_rational(const std::string& text) {
  std::string s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  require(!s.empty(), "empty rational literal");
  auto digits_ok = [](const std::string& t, bool allow_sign) {
    std::size_t i = 0;
    if (allow_sign && i < t.size() && (t[i] == '-' || t[i] == '+')) ++i;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };
  auto to_int = [](std::string t) {
    if (!t.empty() && t[0] == '+') t = t.substr(1);
    return BigInt(t);
  };
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::string p = s.substr(0, slash), q = s.substr(slash + 1);
    require(digits_ok(p, true) && digits_ok(q, false), "malformed rational '" + text + "'");
    BigInt den = to_int(q);
    require(den != 0, "zero denominator in '" + text + "'");
    return Rational(to_int(p), den);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    if (!ip.empty() && (ip[0] == '-' || ip[0] == '+')) ip = ip.substr(1);
    if (ip.empty()) ip = "0";
    require(digits_ok(ip, false) && (fp.empty() || digits_ok(fp, false)),
            "malformed decimal '" + text + "'");
    BigInt scale = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) scale *= 10;
    BigInt num = BigInt(ip) * scale + (fp.empty() ? BigInt(0) : BigInt(fp));
    return Rational(neg ? BigInt(-num) : num, scale);
  }
  require(digits_ok(s, true), "malformed rational '" + text + "'");
  return Rational(to_int(s));
}

BigInt floor_rational(const Rational& r) {
  BigInt n = numerator(r), d = denominator(r);
  BigInt q = n / d;
  if (n % d != 0 && n < 0) q -= 1;
  return q;
}

BigInt ceil_rational(const Rational& r) { return -floor_rational(-r); }

std::int64_t to_i64(const BigInt& v, const char* what) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw ValidationError(std::string(what) + " exceeds 64-bit range");
  return static_cast<std::int64_t>(v);
}

bool is_prime(std::uint64_t p) {
  if (p < 2) return false;
  for (std::uint64_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

std::uint64_t ipow(std::uint64_t base, unsigned e) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base)
      throw BudgetExceeded("integer power overflows 64 bits");
    r *= base;
  }
  return r;
}

}  // namespace biforms
