#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

namespace biforms {

struct CubatureResult {
  std::complex<double> value;
  double error = 0;         // sum of |Kronrod - Gauss| over the final regions
  bool converged = false;   // error <= tol before the evaluation budget ran out
  std::uint64_t regions = 0;
  std::uint64_t evaluations = 0;
};

using ComplexIntegrand = std::function<std::complex<double>(const std::vector<double>&)>;

// Adaptive cubature over the box [lo, hi]: G7/K15 in one dimension, the embedded
// Genz-Malik 7/5 rule above. The region with the largest error is bisected until the
// total error is <= tol or the evaluation budget is spent.
CubatureResult adaptive_cubature(const ComplexIntegrand& f, const std::vector<double>& lo,
                                 const std::vector<double>& hi, double tol,
                                 std::uint64_t max_evaluations = 50'000'000ULL);

// Compensated (Neumaier) accumulator for complex sums.
class ComplexAccumulator {
 public:
  void add(std::complex<double> z) {
    add_part(re_, rc_, z.real());
    add_part(im_, ic_, z.imag());
  }
  std::complex<double> value() const { return {re_ + rc_, im_ + ic_}; }

 private:
  static void add_part(double& s, double& c, double v) {
    double t = s + v;
    if (std::abs(s) >= std::abs(v)) c += (s - t) + v;
    else c += (v - t) + s;
    s = t;
  }
  double re_ = 0, rc_ = 0, im_ = 0, ic_ = 0;
};

// e(t) = exp(2 pi i t) with argument reduction modulo 1.
std::complex<double> expi2pi(double t);

// int_a^b e(c v) dv, stable for small |c (b - a)|.
std::complex<double> linear_phase_integral(double c, double a, double b);

}  // namespace biforms
