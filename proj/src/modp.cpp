#include "biforms/modp.hpp"

#include <utility>

namespace biforms {

FlatSystem flatten(const BihomSystem& sys) {
  FlatSystem f;
  f.n1 = sys.n1();
  f.n2 = sys.n2();
  f.n = f.n1 + f.n2;
  f.R = sys.R();
  f.d1 = sys.d1();
  f.d2 = sys.d2();
  for (int r = 0; r < f.R; ++r)
    for (const auto& m : sys.form(r)) {
      FlatSystem::Term t{r, m.j, to_i64(m.coeff, "coefficient")};
      for (int k : m.k) t.vars.push_back(f.n1 + k);
      f.terms.push_back(std::move(t));
    }
  return f;
}

FlatSystem flatten_poly(const std::vector<IntPoly>& polys) {
  require(!polys.empty(), "empty polynomial list");
  FlatSystem f;
  f.n = f.n1 = polys[0].nvars;
  f.R = static_cast<int>(polys.size());
  for (int r = 0; r < f.R; ++r) {
    require(polys[r].nvars == f.n, "polynomials must share the variable list");
    for (const auto& [exps, c] : polys[r].terms) {
      FlatSystem::Term t{r, {}, to_i64(c, "coefficient")};
      for (int v = 0; v < f.n; ++v)
        for (int e = 0; e < exps[v]; ++e) t.vars.push_back(v);
      f.terms.push_back(std::move(t));
    }
  }
  return f;
}

std::int64_t mod_reduce(i128 a, std::int64_t m) {
  i128 r = a % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

std::int64_t inv_mod(std::int64_t a, std::int64_t m) {
  i128 old_r = mod_reduce(a, m), r = m, old_s = 1, s = 0;
  while (r != 0) {
    i128 q = old_r / r;
    std::swap(old_r, r);
    r -= q * old_r;
    std::swap(old_s, s);
    s -= q * old_s;
  }
  require(old_r == 1, "not a unit");
  return mod_reduce(old_s, m);
}

std::vector<std::int64_t> eval_mod(const FlatSystem& f, const std::vector<std::int64_t>& z, std::int64_t m) {
  std::vector<std::int64_t> out(f.R, 0);
  for (const auto& t : f.terms) {
    i128 v = mod_reduce(t.c, m);
    for (int i : t.vars) v = v * z[i] % m;
    out[t.r] = mod_reduce(out[t.r] + v, m);
  }
  return out;
}

ModMatrix jacobian_mod(const FlatSystem& f, const std::vector<std::int64_t>& z, std::int64_t m) {
  ModMatrix J(f.R, std::vector<std::int64_t>(f.n, 0));
  for (const auto& t : f.terms) {
    const std::size_t deg = t.vars.size();
    for (std::size_t pos = 0; pos < deg; ++pos) {
      i128 v = mod_reduce(t.c, m);
      for (std::size_t o = 0; o < deg; ++o)
        if (o != pos) v = v * z[t.vars[o]] % m;
      auto& e = J[t.r][t.vars[pos]];
      e = mod_reduce(e + v, m);
    }
  }
  return J;
}

ModMatrix linear_block_matrix(const FlatSystem& f, int L, const std::vector<std::int64_t>& fixed, std::int64_t m) {
  const int off_l = L == 1 ? 0 : f.n1, off_f = L == 1 ? f.n1 : 0;
  const int nl = L == 1 ? f.n1 : f.n2;
  ModMatrix M(f.R, std::vector<std::int64_t>(nl, 0));
  for (const auto& t : f.terms) {
    i128 v = mod_reduce(t.c, m);
    int col = -1;
    for (int i : t.vars) {
      if (i >= off_l && i < off_l + nl) col = i - off_l;
      else v = v * fixed[i - off_f] % m;
    }
    M[t.r][col] = mod_reduce(M[t.r][col] + v, m);
  }
  return M;
}

ModSolve solve_mod_p(ModMatrix A, std::vector<std::int64_t> b, std::int64_t p, int cols) {
  const int rows = static_cast<int>(A.size());
  const bool homog = b.empty();
  if (homog) b.assign(rows, 0);
  for (auto& row : A)
    for (auto& v : row) v = mod_reduce(v, p);
  for (auto& v : b) v = mod_reduce(v, p);
  ModSolve s;
  std::vector<int> pivot_col;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (A[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(A[piv], A[r]);
    std::swap(b[piv], b[r]);
    const std::int64_t inv = inv_mod(A[r][c], p);
    for (int j = c; j < cols; ++j) A[r][j] = static_cast<std::int64_t>(static_cast<i128>(A[r][j]) * inv % p);
    b[r] = static_cast<std::int64_t>(static_cast<i128>(b[r]) * inv % p);
    for (int i = 0; i < rows; ++i) {
      if (i == r || A[i][c] == 0) continue;
      const std::int64_t f = A[i][c];
      for (int j = c; j < cols; ++j) A[i][j] = mod_reduce(A[i][j] - static_cast<i128>(f) * A[r][j], p);
      b[i] = mod_reduce(b[i] - static_cast<i128>(f) * b[r], p);
    }
    pivot_col.push_back(c);
    ++r;
  }
  s.rank = r;
  for (int i = r; i < rows; ++i)
    if (b[i] != 0) s.consistent = false;
  s.particular.assign(cols, 0);
  for (int i = 0; i < r; ++i) s.particular[pivot_col[i]] = b[i];
  std::vector<bool> is_pivot(cols, false);
  for (int c : pivot_col) is_pivot[c] = true;
  for (int fc = 0; fc < cols; ++fc) {
    if (is_pivot[fc]) continue;
    std::vector<std::int64_t> v(cols, 0);
    v[fc] = 1;
    for (int i = 0; i < r; ++i) v[pivot_col[i]] = mod_reduce(-static_cast<i128>(A[i][fc]), p);
    s.kernel.push_back(std::move(v));
  }
  return s;
}

int rank_mod_p(const ModMatrix& A, std::int64_t p, int cols) { return solve_mod_p(A, {}, p, cols).rank; }

namespace {
int valuation(std::int64_t a, std::int64_t p) {
  int v = 0;
  while (a % p == 0) {
    a /= p;
    ++v;
  }
  return v;
}
}  // namespace

int smith_deficit(ModMatrix M, std::int64_t p, int k, int cols) {
  std::int64_t pk = 1;
  for (int i = 0; i < k; ++i) pk *= p;
  const int rows = static_cast<int>(M.size());
  for (auto& row : M)
    for (auto& v : row) v = mod_reduce(v, pk);
  int deficit = 0;
  for (int s = 0; s < rows && s < cols; ++s) {
    int bi = -1, bj = -1, bv = k;
    for (int i = s; i < rows; ++i)
      for (int j = s; j < cols; ++j)
        if (M[i][j] != 0) {
          int v = valuation(M[i][j], p);
          if (v < bv) {
            bv = v;
            bi = i;
            bj = j;
          }
        }
    if (bi < 0) break;
    std::swap(M[bi], M[s]);
    for (auto& row : M) std::swap(row[bj], row[s]);
    std::int64_t pe = 1;
    for (int i = 0; i < bv; ++i) pe *= p;
    const std::int64_t uinv = inv_mod(M[s][s] / pe, pk);
    // Every remaining entry has valuation >= bv, so the quotients are integral.
    for (int i = s + 1; i < rows; ++i) {
      if (M[i][s] == 0) continue;
      const std::int64_t f = mod_reduce(static_cast<i128>(M[i][s] / pe) * uinv, pk);
      for (int j = s; j < cols; ++j) M[i][j] = mod_reduce(M[i][j] - static_cast<i128>(f) * M[s][j], pk);
    }
    for (int j = s + 1; j < cols; ++j) {
      if (M[s][j] == 0) continue;
      const std::int64_t f = mod_reduce(static_cast<i128>(M[s][j] / pe) * uinv, pk);
      for (int i = s; i < rows; ++i) M[i][j] = mod_reduce(M[i][j] - static_cast<i128>(f) * M[i][s], pk);
    }
    deficit += k - bv;
  }
  return deficit;
}

}  // namespace biforms
