#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace biforms {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Malformed input or violated precondition. The CLI maps it to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An enumeration or quadrature guardrail was hit. The CLI maps it to exit code 3.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Absolute tolerance for comparisons that involve binary64 weights.
inline constexpr double kRealTolerance = 1e-12;

// Enumerated-point guardrail shared by every counter.
inline constexpr std::uint64_t kDefaultPointBudget = 1'000'000'000ULL;

// Term guardrail for floating phase sums.
inline constexpr std::uint64_t kDefaultTermBudget = 100'000'000ULL;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

// Exact rational from a finite double (binary64 values are dyadic rationals).
Rational exact_rational(double v);

// Parses "p/q", "p", or a decimal literal such as "-0.25" into an exact rational.
Rational parse_rational(const std::string& text);

BigInt floor_rational(const Rational& r);
BigInt ceil_rational(const Rational& r);

// Converts to int64, throwing ValidationError when out of range.
std::int64_t to_i64(const BigInt& v, const char* what);

bool is_prime(std::uint64_t p);
std::uint64_t ipow(std::uint64_t base, unsigned e);  // throws BudgetExceeded on overflow

}  // namespace biforms
