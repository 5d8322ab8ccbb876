#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biforms/core.hpp"
#include "biforms/forms.hpp"

namespace biforms {

inline const std::vector<std::uint64_t> kDefaultProbePrimes{101, 103, 107, 109};
inline constexpr std::uint64_t kDefaultProbeBudget = 100'000'000ULL;

// Heuristic dimension of a multiprojective variety from F_p point counts.
struct FpDimension {
  int dim = -1;  // modal estimate; -1 is the empty variety
  bool stable = false;
  std::vector<std::uint64_t> primes;
  std::vector<int> per_prime;
  std::vector<std::uint64_t> counts;  // multiprojective point counts
};

// polys live on the concatenated variables of `blocks` and must be multihomogeneous in them;
// each block is a projective factor P^(size-1).
FpDimension fp_dimension(const std::vector<IntPoly>& polys, const std::vector<int>& blocks,
                         const std::vector<std::uint64_t>& primes = kDefaultProbePrimes,
                         std::uint64_t budget = kDefaultProbeBudget);

// Every primitive integer beta in {-h..h}^R, first nonzero coordinate positive.
std::vector<std::vector<Rational>> primitive_directions(int R, int height);

struct KernelWitness {
  std::vector<Rational> beta;
  bool certified = false;  // exact integer rank; otherwise a floating SVD rank
  int rank = 0;
  int ker1 = 0;  // dim ker A_beta
  int ker2 = 0;  // dim ker A_beta^T
  bool rank_nullity = false;
};

struct PencilKernelStats {
  int sigma1_lb = 0, sigma2_lb = 0;
  int rho_ub = 0;                       // smallest certified rank
  std::vector<KernelWitness> witnesses;  // certified maximizers, then the best sampled direction
  int directions_scanned = 0;
  int samples = 0;
};

// Exact rank of an integer matrix (fraction-free elimination).
int exact_rank(BigMatrix m);
// A_beta = sum beta_r A_r with cleared denominators.
BigMatrix pencil_matrix(const BihomSystem& sys, const std::vector<Rational>& beta);
// Recomputes rank and kernel dimensions of a witness exactly.
KernelWitness verify_kernel_witness(const BihomSystem& sys, const std::vector<Rational>& beta);

PencilKernelStats pencil_kernel_stats(const BihomSystem& sys, int height, int samples, std::uint64_t seed = 1);

struct SWitness {
  std::vector<Rational> beta;
  FpDimension slice;  // V(x^T H_beta(e_l) x)_l in P^(n1-1)
  FpDimension hx;     // V(H_beta(y) x) in P^(n1-1) x P^(n2-1)
  bool dims_nested = false;  // hx.dim <= slice.dim + n2 - 1
};

struct SInvariants {
  int s1_est = 0, s2_est = 0;  // lower estimates over the scanned directions
  int max_slice_dim = -1, max_hx_dim = -1;
  std::vector<SWitness> witnesses;
  std::vector<std::uint64_t> primes;
};

SInvariants s_invariants(const BihomSystem& sys, int height,
                         const std::vector<std::uint64_t>& primes = kDefaultProbePrimes,
                         std::uint64_t budget = kDefaultProbeBudget);

// Biprojective dimension of Sing V(beta.F): its gradient together with beta.F.
FpDimension singular_locus_dim(const BihomSystem& sys, const std::vector<Rational>& beta,
                               const std::vector<std::uint64_t>& primes = kDefaultProbePrimes,
                               std::uint64_t budget = kDefaultProbeBudget);

enum class SmoothVerdict { SmoothProbable, Singular, Unknown };
std::string to_string(SmoothVerdict v);

struct SmoothProbe {
  SmoothVerdict verdict = SmoothVerdict::Unknown;
  std::vector<std::uint64_t> singular_primes;  // primes where a singular F_p-point was found
  std::optional<std::uint64_t> witness_prime;
  std::vector<std::int64_t> witness_x, witness_y;
};

// Searches V(F)(F_p) for points with Jacobian rank < R. Singular when every prime has one,
// smooth-probable when none has, unknown otherwise or on budget exhaustion.
SmoothProbe smooth_verdict(const BihomSystem& sys, const std::vector<std::uint64_t>& primes = kDefaultProbePrimes,
                           std::uint64_t budget = kDefaultProbeBudget);

// Affine dimension of V_i* = {rank (dF/d block i) < R} in A^(n1+n2); nullopt on budget exhaustion.
std::optional<int> rank_locus_dim(const BihomSystem& sys, int block,
                                  const std::vector<std::uint64_t>& primes = kDefaultProbePrimes,
                                  std::uint64_t budget = kDefaultProbeBudget);

struct InvariantOptions {
  int height = 1;
  int samples = 64;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> primes = kDefaultProbePrimes;
  std::uint64_t budget = kDefaultProbeBudget;
};

struct InvariantReport {
  int n1 = 0, n2 = 0, R = 0, d1 = 0, d2 = 0;
  int height = 0;
  std::vector<std::uint64_t> primes;
  std::optional<PencilKernelStats> pencil;  // bilinear systems
  std::optional<SInvariants> s;             // bidegree (2,1)
  int sing_locus_dim_est = -1;              // max over the scanned directions
  std::vector<Rational> sing_locus_witness;
  SmoothProbe smooth;
  FpDimension variety;  // V(F) itself
  bool complete_intersection_probable = false;
  std::optional<int> schindler_dim[2];  // dim V_1*, dim V_2*
};

InvariantReport compute_invariants(const BihomSystem& sys, const InvariantOptions& opt = {});

struct HypothesisRow {
  std::string name;
  double lhs = 0, rhs = 0, slack = 0;
  bool holds = false;
  bool conditional = false;  // rests on heuristic or lower-bound invariants
  std::string note;
};

struct HypothesisReport {
  double b = 1, u = 1;
  std::vector<HypothesisRow> rows;
};

HypothesisReport hypothesis_report(const InvariantReport& inv, double P1, double P2);

}  // namespace biforms
