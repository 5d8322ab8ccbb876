#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biforms/box.hpp"
#include "biforms/core.hpp"
#include "biforms/forms.hpp"

namespace biforms {

enum class DensityMethod { ResidueCount, HenselStabilized, EulerProduct, QSeries, Quadrature, SlabMeasureMC, Product };
std::string to_string(DensityMethod m);

struct DensityEstimate {
  double value = 0;
  double error_bound = 0;  // half-width; heuristic for Monte Carlo and fitted tails
  DensityMethod method = DensityMethod::ResidueCount;
  std::string level;
  std::optional<std::uint64_t> seed;
  std::optional<Rational> exact;  // set when value is an exact rational
};

// Number of (x,y) mod p^k with F = 0 mod p^k.
BigInt padic_count(const BihomSystem& sys, std::uint64_t p, int k, DensityMethod method,
                   std::uint64_t budget = kDefaultPointBudget);

// padic_count / p^(k(n1+n2-R)); method is ResidueCount or HenselStabilized.
DensityEstimate padic_density(const BihomSystem& sys, std::uint64_t p, int k,
                              DensityMethod method = DensityMethod::HenselStabilized,
                              std::uint64_t budget = kDefaultPointBudget);

struct LocalFactor {
  std::uint64_t p;
  int k;             // lifting level actually used
  double value;      // padic_density at level k
  double increment;  // |value(k) - value(k-1)|; 0 when k = 1 is exact
  bool capped;       // k stopped at the cap or the budget before the increment fell below the threshold
};

// Factors for p <= pmax, each raised in k until the increment drops below `threshold` or k reaches `kmax`.
std::vector<LocalFactor> local_factors(const BihomSystem& sys, std::uint64_t pmax, double threshold = 1e-6,
                                       int kmax = 12, std::uint64_t budget = kDefaultPointBudget);

// A(q) = sum over a mod q with gcd(a_1..a_R, q) = 1 of S_{a,q}, for a prime power q.
double complete_sum_total(const BihomSystem& sys, std::uint64_t q, std::uint64_t budget = kDefaultTermBudget);

enum class SeriesVariant { QSeries, Euler };

// Truncated singular series: sum of A(q) over q <= Q, or the Euler product over p <= Q.
DensityEstimate singular_series(const BihomSystem& sys, double Q, SeriesVariant variant,
                                std::uint64_t budget = kDefaultPointBudget);

enum class IntegralVariant { Gamma, Slab };

struct IntegralLevel {
  double gamma_max = 8;          // gamma: half-side of the gamma cube
  double tol = 1e-3;             // gamma: relative quadrature tolerance
  double P = 1000;               // slab: scale of the |F| <= 1/2 slab
  std::uint64_t samples = 1u << 18;
  int replicates = 16;           // slab: independent digital shifts
  std::uint64_t seed = 1;
  std::uint64_t max_evaluations = 400'000'000ULL;
};

DensityEstimate singular_integral(const BihomSystem& sys, const BoxPair& boxes, IntegralVariant variant,
                                  const IntegralLevel& level = {});

struct PadicZero {
  bool found = false;
  int depth = 0;
  std::uint64_t modulus = 0;  // p^depth
  std::vector<std::int64_t> x, y;
};

// Zero mod p with Jacobian rank R mod p, Newton-lifted to p^depth.
PadicZero smooth_padic_zero(const BihomSystem& sys, std::uint64_t p, int depth,
                            std::uint64_t budget = kDefaultPointBudget);

struct RealZero {
  bool found = false;
  std::vector<double> x, y;
  double residual = 0;
  double sigma_min = 0;
};

// Damped Gauss-Newton from low-discrepancy starts; absence is never certified.
RealZero smooth_real_zero(const BihomSystem& sys, const BoxPair& boxes, int starts = 256);

struct SigmaOptions {
  std::uint64_t pmax = 200;
  IntegralLevel integral;
  IntegralVariant integral_variant = IntegralVariant::Slab;
  bool probe_local_zeros = true;
  std::vector<std::uint64_t> probe_primes{2, 3, 5, 7};
  std::uint64_t budget = kDefaultPointBudget;
};

struct SigmaResult {
  DensityEstimate sigma;
  DensityEstimate series;
  DensityEstimate integral;
  // Set when local zeros were probed: true when every probe found a smooth zero.
  std::optional<bool> positivity_expected;
};

SigmaResult sigma_factor(const BihomSystem& sys, const BoxPair& boxes, const SigmaOptions& opt = {});

// Interval product with first-order propagation: relative half-widths add.
DensityEstimate product_estimate(const DensityEstimate& a, const DensityEstimate& b);

}  // namespace biforms
