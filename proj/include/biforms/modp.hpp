#pragma once

#include <cstdint>
#include <vector>

#include "biforms/forms.hpp"

namespace biforms {

using i128 = __int128;
using ModMatrix = std::vector<std::vector<std::int64_t>>;

// Forms over the flat variable list (x_1..x_n1, y_1..y_n2) with int64 coefficients.
struct FlatSystem {
  struct Term {
    int r;
    std::vector<int> vars;  // with multiplicity
    std::int64_t c;
  };
  int n1 = 0, n2 = 0, n = 0, R = 0, d1 = 0, d2 = 0;
  std::vector<Term> terms;
  // 1 or 2 when that block enters every form linearly (d = 1), else 0; block 2 wins ties.
  int linear_block() const { return d2 == 1 ? 2 : (d1 == 1 ? 1 : 0); }
};
FlatSystem flatten(const BihomSystem& sys);
FlatSystem flatten_poly(const std::vector<IntPoly>& polys);

std::int64_t mod_reduce(i128 a, std::int64_t m);
std::int64_t inv_mod(std::int64_t a, std::int64_t m);  // a must be a unit mod m

// F_r(z) mod m for every r; m < 2^62.
std::vector<std::int64_t> eval_mod(const FlatSystem& f, const std::vector<std::int64_t>& z, std::int64_t m);
// R x n Jacobian mod m.
ModMatrix jacobian_mod(const FlatSystem& f, const std::vector<std::int64_t>& z, std::int64_t m);
// R x n_L coefficient matrix of the linear block L at the other block's values `fixed`, mod m.
ModMatrix linear_block_matrix(const FlatSystem& f, int L, const std::vector<std::int64_t>& fixed, std::int64_t m);

struct ModSolve {
  int rank = 0;
  bool consistent = true;
  std::vector<std::int64_t> particular;
  std::vector<std::vector<std::int64_t>> kernel;  // basis of the null space
};
// Solves A t = b mod a prime p; b may be empty for the homogeneous system.
ModSolve solve_mod_p(ModMatrix A, std::vector<std::int64_t> b, std::int64_t p, int cols);
int rank_mod_p(const ModMatrix& A, std::int64_t p, int cols);

// #{y mod p^k : M y = 0} = p^(k cols - deficit); returns the deficit.
int smith_deficit(ModMatrix M, std::int64_t p, int k, int cols);

// Calls fn(z) for every z in [0,m)^len in lexicographic order; stops early when fn returns false.
template <class Fn>
void for_each_residue(int len, std::int64_t m, Fn&& fn) {
  std::vector<std::int64_t> z(len, 0);
  while (true) {
    if (!fn(z)) return;
    int i = len;
    bool advanced = false;
    while (i-- > 0) {
      if (++z[i] < m) {
        advanced = true;
        break;
      }
      z[i] = 0;
    }
    if (!advanced) return;
  }
}

}  // namespace biforms
