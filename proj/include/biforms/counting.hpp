#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biforms/box.hpp"
#include "biforms/forms.hpp"

namespace biforms {

enum class CountMethod { GenericBrute, BilinearHyperplane, FixedYLinear, FixedXLinear };
std::string to_string(CountMethod m);

struct CountResult {
  BigInt count;
  BigInt enumerated;
  CountMethod method;
};

struct CountOptions {
  std::uint64_t budget = kDefaultPointBudget;
  int threads = 1;
  std::optional<CountMethod> force;
};

// #{(x,y) in Z^n1 x Z^n2 : x/P1 in B1, y/P2 in B2, F(x,y) = 0}, closed boxes.
CountResult count_N(const BihomSystem& sys, const BoxPair& boxes, double P1, double P2,
                    const CountOptions& opt = {});

// N_side^aux(beta; B): open boxes (-B,B), strict threshold ||beta.F|| B^(d1+d2-2).
BigInt count_aux(const BihomSystem& sys, int side, const PencilWeights& beta, double B,
                 const CountOptions& opt = {});

// M_side(alpha.F; P1, P2, bound): open boxes (-P1,P1), (-P2,P2), distance to Z below bound.
BigInt count_M(const BihomSystem& sys, int side, const Weights& alpha, double P1, double P2, double bound,
               const CountOptions& opt = {});

struct SingularValues {
  std::vector<double> lambda;  // descending, nonnegative
};
SingularValues singular_values(const Eigen::MatrixXd& m);

struct EllipsoidCount {
  BigInt count;
  bool bound_ok;
  double ratio;      // count * (1 + lambda_1...lambda_i*) / B^n at the minimizing i*
  double C;          // max(1, lambda_1 / B)
  int argmin_i;      // 1-based minimizing index
};
// #{y in Z^n : ||y|| <= B, ||H y|| <= B} by direct enumeration.
EllipsoidCount ellipsoid_count(const Eigen::MatrixXd& H, double B, double audit_constant = 1.0,
                               std::uint64_t budget = kDefaultPointBudget);

// H~_beta(x): rows x^T H_beta(e_l) / ||beta.F||, shape n2 x n1.
Eigen::MatrixXd h_tilde(const BihomSystem& sys, const PencilWeights& beta, const std::vector<double>& x);

// All i x i minors of H~_beta(x): row subsets outer, column subsets inner, both lexicographic.
std::vector<double> minors_vector(const BihomSystem& sys, const PencilWeights& beta, int i,
                                  const std::vector<double>& x);
// d D_j / d x_k from the symbolic minor polynomials.
Eigen::MatrixXd jacobian_minors(const BihomSystem& sys, const PencilWeights& beta, int i,
                                const std::vector<double>& x);

struct KCellSpec {
  int k = 0;
  std::vector<double> E;  // E_1 >= ... >= E_{k+1} >= 1
  double B = 1;
  PencilWeights beta = PencilWeights::real({1.0});
};
void validate(const KCellSpec& spec, int n);

// #{x in Z^n : ||x|| <= B, E_i/2 < lambda_i(x) <= E_i (i <= k), lambda_i(x) <= E_{k+1} (i > k)}.
BigInt k_cell_count(const BihomSystem& sys, const KCellSpec& spec, std::uint64_t budget = kDefaultPointBudget);

// K_0(1) followed by every K_k(2^e1..2^ek, 1) with e1 >= ... >= ek >= 1 and 2^(e1-1) < n^2 B.
std::vector<KCellSpec> dyadic_cell_specs(int n, double B, const PencilWeights& beta);

struct TrichotomyReport {
  BigInt aux;             // N_2^aux(beta, B)
  double best_ratio;      // min over alternatives of normalised aux / cell count
  std::string best_alternative;
  std::vector<int> best_exponents;
};
// Evaluates the three alternatives of the dyadic cell decomposition; B >= 2.
TrichotomyReport trichotomy_audit(const BihomSystem& sys, const PencilWeights& beta, double B,
                                  std::uint64_t budget = kDefaultPointBudget);

}  // namespace biforms
