#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "biforms/box.hpp"
#include "biforms/counting.hpp"
#include "biforms/forms.hpp"
#include "biforms/quadrature.hpp"

namespace biforms {

// Arc parameters; b, u and P are derived.
struct ArcParams {
  double Delta;
  double P1, P2;
  int d1, d2;
  ArcParams(double Delta, double P1, double P2, int d1, int d2);
  double b() const;
  double u() const;
  double P() const;
};

enum class ArcKind { Major, Minor };

struct ArcWitness {
  std::vector<std::int64_t> a;
  std::int64_t q;
};

struct ArcMembership {
  ArcKind kind = ArcKind::Minor;
  std::optional<ArcWitness> witness;
};

// S(alpha) = sum over x in P1 B1, y in P2 B2 of e(alpha.F(x,y)).
std::complex<double> weighted_sum(const BihomSystem& sys, const BoxPair& boxes, const Weights& alpha, double P1,
                                  double P2, std::uint64_t term_budget = kDefaultTermBudget);

// S_{a,q} = q^{-n1-n2} sum over (x,y) mod q of e(a.F(x,y)/q).
std::complex<double> complete_sum(const BihomSystem& sys, const std::vector<std::int64_t>& a, std::int64_t q,
                                  std::uint64_t term_budget = kDefaultTermBudget);

// S_inf(gamma) = integral over B1 x B2 of e(gamma.F(u,v)); a linear block is integrated in closed form.
CubatureResult oscillatory_integral(const BihomSystem& sys, const BoxPair& boxes, const std::vector<double>& gamma,
                                    double tol, std::uint64_t max_evaluations = 20'000'000ULL);

// Major arc M(Delta): q <= P^Delta, 0 <= a_i <= q, gcd(a,q) = 1, 2 ||q alpha - a|| < P1^-d1 P2^-d2 P^Delta.
// Primed variant: ||alpha - a/q|| < P^(Delta-1) with 0 <= a_i < q.
ArcMembership arc_classify(const ArcParams& params, const std::vector<double>& alpha, bool primed = false);

struct WeylAudit {
  double s_abs;      // |S(alpha)|
  BigInt m1;         // M_1(alpha.F; P1, P2, P1^-1)
  double lhs_log;    // 2^dt log|S|
  double rhs_log;    // log of P1^(n1(2^dt - d1 + 1) + eps) P2^(n2(2^dt - d2)) M_1
  double ratio;      // exp(lhs_log - rhs_log)
};
WeylAudit audit_weyl(const BihomSystem& sys, const BoxPair& boxes, const Weights& alpha, double P1, double P2,
                     double eps = 0.01, const CountOptions& opt = {});

struct AuxAudit {
  bool satisfied;
  double lhs;     // min(|S(alpha)|, |S(alpha+beta)|) / (P1^(n1+eps) P2^n2)
  double rhs;     // C max{P2^-1, P1^-d1 P2^-d2 / ||beta||, ||beta||^(1/(dt+1))}^Cs
  double margin;  // log rhs - log lhs
  double base;    // the max{...} before exponentiation
};
AuxAudit audit_aux_inequality(const BihomSystem& sys, const BoxPair& boxes, const Weights& alpha,
                              const PencilWeights& beta, double P1, double P2, double C_script, double C = 1.0,
                              double eps = 0.01);

}  // namespace biforms
