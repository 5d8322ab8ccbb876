#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biforms/core.hpp"

namespace biforms {

// One raw monomial c * x_{j_1}...x_{j_d1} * y_{k_1}...y_{k_d2}; indices 0-based, sorted.
struct Monomial {
  std::vector<int> j;
  std::vector<int> k;
  BigInt coeff;
};

// One ordered index tuple of the integer tensor d1!d2! F_{j,k}.
struct TensorEntry {
  std::vector<int> j;
  std::vector<int> k;
  BigInt value;
};

using BigMatrix = std::vector<std::vector<BigInt>>;

// Integer polynomial in a flat variable list; exponents has one entry per variable.
struct IntPoly {
  int nvars = 0;
  std::vector<std::pair<std::vector<int>, BigInt>> terms;
  int degree() const;
};

class BihomSystem {
 public:
  // Merges repeated monomials and drops zero ones; every form must stay nonzero.
  BihomSystem(int n1, int n2, int d1, int d2, std::vector<std::vector<Monomial>> forms);

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int d1() const { return d1_; }
  int d2() const { return d2_; }
  int R() const { return static_cast<int>(forms_.size()); }
  int n(int block) const { return block == 1 ? n1_ : n2_; }
  int d(int block) const { return block == 1 ? d1_ : d2_; }
  bool is_bilinear() const { return d1_ == 1 && d2_ == 1; }

  // Canonical monomial list of form r (sorted by (j,k)).
  const std::vector<Monomial>& form(int r) const { return forms_.at(r); }

  // Symmetric tensor entry F^{(r)}_{j,k}; index order is irrelevant.
  Rational coefficient(int r, std::vector<int> j, std::vector<int> k) const;
  // d1! d2! F^{(r)}_{j,k}, always an integer.
  BigInt scaled_coefficient(int r, std::vector<int> j, std::vector<int> k) const;
  // Least common denominator of the symmetric tensor; divides d1! d2!.
  const BigInt& denominator() const { return denominator_; }
  std::int64_t factorial_scale() const { return factorial_scale_; }
  // Every ordered (j,k) with nonzero d1!d2!F^{(r)}_{j,k}.
  const std::vector<TensorEntry>& ordered_tensor(int r) const { return tensor_.at(r); }

  // Largest |coefficient| over all forms.
  BigInt max_abs_coeff() const;

  // Form r as a polynomial in (x_1..x_n1, y_1..y_n2).
  IntPoly as_poly(int r) const;

 private:
  int n1_, n2_, d1_, d2_;
  std::vector<std::vector<Monomial>> forms_;
  std::vector<std::vector<TensorEntry>> tensor_;
  BigInt denominator_;
  std::int64_t factorial_scale_;
};

BihomSystem parse_system(const std::string& text);
BihomSystem load_system(const std::string& path);
std::string serialize_system(const BihomSystem& sys);

// The same forms with the roles of x and y exchanged: G(y,x) = F(x,y), bidegree (d2,d1).
BihomSystem swap_blocks(const BihomSystem& sys);

// Exact value vector (F_1(x,y),...,F_R(x,y)).
std::vector<BigInt> evaluate(const BihomSystem& sys, const std::vector<std::int64_t>& x,
                             const std::vector<std::int64_t>& y);

// Weights alpha or beta in R^R; exact when built from rationals.
class Weights {
 public:
  Weights() = default;
  static Weights real(std::vector<double> values);
  static Weights exact(std::vector<Rational> values);

  std::size_t size() const { return values_.size(); }
  bool is_exact() const { return exact_.has_value(); }
  const std::vector<double>& values() const { return values_; }
  const std::vector<Rational>& exact_values() const;
  double operator[](std::size_t i) const { return values_[i]; }
  double sup_norm() const;
  bool is_zero() const;
  Weights scaled(const Rational& c) const;
  Weights operator+(const Weights& other) const;
  Weights operator-() const;

 private:
  std::vector<double> values_;
  std::optional<std::vector<Rational>> exact_;
};

// Pencil direction beta; never zero.
class PencilWeights : public Weights {
 public:
  explicit PencilWeights(Weights w);
  static PencilWeights real(std::vector<double> values) { return PencilWeights(Weights::real(std::move(values))); }
  static PencilWeights exact(std::vector<Rational> values) { return PencilWeights(Weights::exact(std::move(values))); }
};

// Gamma_{beta.F}(x^(1..d1), y^(1..d2)).
double multilinear_eval(const BihomSystem& sys, const Weights& beta,
                        const std::vector<std::vector<double>>& xs,
                        const std::vector<std::vector<double>>& ys);
Rational multilinear_eval_exact(const BihomSystem& sys, const Weights& beta,
                                const std::vector<std::vector<std::int64_t>>& xs,
                                const std::vector<std::vector<std::int64_t>>& ys);

// max_{j,k} |sum_r beta_r F^{(r)}_{j,k}|.
double beta_sup_norm(const BihomSystem& sys, const PencilWeights& beta);
Rational beta_sup_norm_exact(const BihomSystem& sys, const PencilWeights& beta);

// A_r with F_r(x,y) = y^T A_r x; shape n2 x n1.
std::vector<BigMatrix> bilinear_matrices(const BihomSystem& sys);

// Symmetric slices H_beta(e_l), l < n2, with x^T H_beta(y) x = beta.F(x,y).
struct HSlices {
  std::vector<Eigen::MatrixXd> slices;
  Eigen::MatrixXd at(const std::vector<double>& y) const;
};
HSlices h_slices(const BihomSystem& sys, const Weights& beta);
// Exact variant for rational beta: slices[l][a][b].
std::vector<std::vector<std::vector<Rational>>> h_slices_exact(const BihomSystem& sys,
                                                              const Weights& beta);

// Integer multiple of beta.F (cleared denominators) as a polynomial in (x,y).
IntPoly pencil_poly(const BihomSystem& sys, const Weights& beta);

}  // namespace biforms
