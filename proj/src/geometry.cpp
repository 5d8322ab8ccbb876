#include "biforms/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/SVD>

#include "biforms/modp.hpp"

namespace biforms {

namespace {

struct PTerm {
  std::int64_t c;
  std::vector<int> vars;  // with multiplicity
};

struct PPoly {
  std::vector<PTerm> terms;
  std::vector<int> deg;  // per block
};

std::vector<int> block_of_vars(const std::vector<int>& blocks) {
  std::vector<int> out;
  for (std::size_t b = 0; b < blocks.size(); ++b) out.insert(out.end(), blocks[b], static_cast<int>(b));
  return out;
}

// Reduces mod p; polynomials that vanish identically mod p are dropped.
std::vector<PPoly> reduce_polys(const std::vector<IntPoly>& polys, const std::vector<int>& blocks, std::int64_t p) {
  const auto owner = block_of_vars(blocks);
  std::vector<PPoly> out;
  for (const auto& poly : polys) {
    require(poly.nvars == static_cast<int>(owner.size()), "polynomial variable count does not match the blocks");
    PPoly pp;
    std::optional<std::vector<int>> deg;
    for (const auto& [exps, c] : poly.terms) {
      std::vector<int> d(blocks.size(), 0);
      PTerm t{static_cast<std::int64_t>(((c % p) + p) % p), {}};
      for (int v = 0; v < poly.nvars; ++v) {
        d[owner[v]] += exps[v];
        for (int e = 0; e < exps[v]; ++e) t.vars.push_back(v);
      }
      if (!deg) deg = d;
      require(*deg == d, "polynomial is not multihomogeneous in the given blocks");
      if (t.c != 0) pp.terms.push_back(std::move(t));
    }
    if (pp.terms.empty()) continue;
    pp.deg = *deg;
    out.push_back(std::move(pp));
  }
  return out;
}

std::int64_t eval_term(const PTerm& t, const std::vector<std::int64_t>& z, std::int64_t p) {
  i128 v = t.c;
  for (int i : t.vars) v = v * z[i] % p;
  return static_cast<std::int64_t>(v);
}

std::int64_t eval_poly(const PPoly& f, const std::vector<std::int64_t>& z, std::int64_t p) {
  i128 s = 0;
  for (const auto& t : f.terms) s += eval_term(t, z, p);
  return static_cast<std::int64_t>(s % p);
}

std::uint64_t proj_size(int n, std::uint64_t p) { return (ipow(p, n) - 1) / (p - 1); }

// Visits canonical representatives (first nonzero coordinate 1) of P^(n-1) written into z[off..off+n).
template <class Fn>
bool for_each_proj(std::vector<std::int64_t>& z, int off, int n, std::int64_t p, Fn&& fn) {
  for (int lead = 0; lead < n; ++lead) {
    for (int i = 0; i < lead; ++i) z[off + i] = 0;
    z[off + lead] = 1;
    const int len = n - 1 - lead;
    bool go = true;
    for_each_residue(len, p, [&](const std::vector<std::int64_t>& t) {
      for (int i = 0; i < len; ++i) z[off + lead + 1 + i] = t[i];
      go = fn();
      return go;
    });
    if (!go) return false;
  }
  return true;
}

// Visits every point of the product of the listed blocks' projective spaces.
bool for_each_multiproj(std::vector<std::int64_t>& z, const std::vector<int>& offs, const std::vector<int>& sizes,
                        std::size_t idx, std::int64_t p, const std::function<bool()>& fn) {
  if (idx == sizes.size()) return fn();
  return for_each_proj(z, offs[idx], sizes[idx], p,
                       [&] { return for_each_multiproj(z, offs, sizes, idx + 1, p, fn); });
}

std::uint64_t count_multiprojective(const std::vector<IntPoly>& polys, const std::vector<int>& blocks, std::int64_t p,
                                    std::uint64_t budget) {
  const auto fs = reduce_polys(polys, blocks, p);
  const int nb = static_cast<int>(blocks.size());
  std::vector<int> offs(nb, 0);
  for (int b = 1; b < nb; ++b) offs[b] = offs[b - 1] + blocks[b - 1];
  const int n = offs.back() + blocks.back();
  for (const auto& f : fs)
    if (std::all_of(f.deg.begin(), f.deg.end(), [](int d) { return d == 0; })) return 0;

  // The largest block in which every form is at most linear is solved by linear algebra.
  int L = -1;
  for (int b = 0; b < nb; ++b) {
    const bool lin = std::all_of(fs.begin(), fs.end(), [&](const PPoly& f) { return f.deg[b] <= 1; });
    if (lin && (L < 0 || blocks[b] > blocks[L])) L = b;
  }
  std::vector<int> eoffs, esizes;
  std::uint64_t cost = 1;
  for (int b = 0; b < nb; ++b) {
    if (b == L) continue;
    eoffs.push_back(offs[b]);
    esizes.push_back(blocks[b]);
    const std::uint64_t s = proj_size(blocks[b], p);
    if (cost > budget / s) throw BudgetExceeded("fp_dimension enumeration exceeds the budget");
    cost *= s;
  }

  std::vector<std::int64_t> z(n, 0);
  std::uint64_t count = 0;
  if (L < 0) {
    for_each_multiproj(z, eoffs, esizes, 0, p, [&] {
      if (std::all_of(fs.begin(), fs.end(), [&](const PPoly& f) { return eval_poly(f, z, p) == 0; })) ++count;
      return true;
    });
    return count;
  }
  const int nl = blocks[L], off = offs[L];
  std::vector<const PPoly*> conds, rows;
  for (const auto& f : fs) (f.deg[L] == 0 ? conds : rows).push_back(&f);
  for (int i = 0; i < nl; ++i) z[off + i] = 1;  // unused by conditions, which have degree 0 in L
  for_each_multiproj(z, eoffs, esizes, 0, p, [&] {
    for (const auto* f : conds)
      if (eval_poly(*f, z, p) != 0) return true;
    ModMatrix M(rows.size(), std::vector<std::int64_t>(nl, 0));
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (const auto& t : rows[r]->terms) {
        i128 v = t.c;
        int col = -1;
        for (int i : t.vars) {
          if (i >= off && i < off + nl) col = i - off;
          else v = v * z[i] % p;
        }
        M[r][col] = mod_reduce(M[r][col] + v, p);
      }
    const int rank = rows.empty() ? 0 : rank_mod_p(M, p, nl);
    count += proj_size(nl - rank, p);
    return true;
  });
  return count;
}

int floor_half(int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

IntPoly derivative(const IntPoly& f, int v) {
  IntPoly out;
  out.nvars = f.nvars;
  for (const auto& [exps, c] : f.terms) {
    if (exps[v] == 0) continue;
    auto e = exps;
    --e[v];
    out.terms.emplace_back(std::move(e), c * exps[v]);
  }
  return out;
}

}  // namespace

FpDimension fp_dimension(const std::vector<IntPoly>& polys, const std::vector<int>& blocks,
                         const std::vector<std::uint64_t>& primes, std::uint64_t budget) {
  require(!blocks.empty(), "at least one projective block is required");
  for (int b : blocks) require(b >= 1, "block sizes must be positive");
  require(!primes.empty(), "at least one probe prime is required");
  FpDimension out;
  out.primes = primes;
  for (std::uint64_t p : primes) {
    require(is_prime(p) && p < (1ULL << 31), "probe primes must be primes below 2^31");
    const std::uint64_t c = count_multiprojective(polys, blocks, static_cast<std::int64_t>(p), budget);
    out.counts.push_back(c);
    out.per_prime.push_back(c == 0 ? -1 : static_cast<int>(std::lround(std::log(static_cast<double>(c)) /
                                                                      std::log(static_cast<double>(p)))));
  }
  std::map<int, int> freq;
  for (int d : out.per_prime) ++freq[d];
  int best = 0;
  for (const auto& [d, f] : freq)
    if (f >= best) {
      best = f;
      out.dim = d;
    }
  // Accepted when 3 of 4 primes agree and each agreeing count is c p^dim with p^-1/2 <= c <= p^1/2.
  const int need = static_cast<int>((3 * primes.size() + 3) / 4);
  bool fits = true;
  for (std::size_t i = 0; i < primes.size(); ++i) {
    if (out.per_prime[i] != out.dim || out.dim < 0) continue;
    const double c = static_cast<double>(out.counts[i]) / std::pow(static_cast<double>(primes[i]), out.dim);
    const double s = std::sqrt(static_cast<double>(primes[i]));
    if (c < 1 / s || c > s) fits = false;
  }
  out.stable = best >= need && fits;
  return out;
}

std::vector<std::vector<Rational>> primitive_directions(int R, int height) {
  require(R >= 1 && height >= 1, "R and height must be positive");
  std::vector<std::vector<Rational>> out;
  std::vector<std::int64_t> c(R, -height);
  while (true) {
    std::int64_t g = 0;
    int first = -1;
    for (int i = 0; i < R; ++i) {
      g = std::gcd(g, std::abs(c[i]));
      if (first < 0 && c[i] != 0) first = i;
    }
    if (g == 1 && c[first] > 0) {
      std::vector<Rational> b;
      for (auto v : c) b.emplace_back(v);
      out.push_back(std::move(b));
    }
    int i = R;
    while (i-- > 0) {
      if (++c[i] <= height) break;
      c[i] = -height;
    }
    if (i < 0) break;
  }
  return out;
}

int exact_rank(BigMatrix m) {
  const int rows = static_cast<int>(m.size());
  if (rows == 0) return 0;
  const int cols = static_cast<int>(m[0].size());
  BigInt prev = 1;
  int r = 0;
  for (int c = 0; c < cols && r < rows; ++c) {
    int piv = -1;
    for (int i = r; i < rows; ++i)
      if (m[i][c] != 0) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(m[piv], m[r]);
    for (int i = r + 1; i < rows; ++i) {
      for (int j = c + 1; j < cols; ++j) m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) / prev;
      m[i][c] = 0;
    }
    prev = m[r][c];
    ++r;
  }
  return r;
}

BigMatrix pencil_matrix(const BihomSystem& sys, const std::vector<Rational>& beta) {
  require(sys.is_bilinear(), "pencil matrices require bidegree (1,1)");
  require(static_cast<int>(beta.size()) == sys.R(), "beta has the wrong length");
  const auto mats = bilinear_matrices(sys);
  BigInt den = 1;
  for (const auto& b : beta) den = boost::multiprecision::lcm(den, BigInt(boost::multiprecision::denominator(b)));
  BigMatrix out(sys.n2(), std::vector<BigInt>(sys.n1(), 0));
  for (int r = 0; r < sys.R(); ++r) {
    const BigInt s = boost::multiprecision::numerator(beta[r] * Rational(den));
    if (s == 0) continue;
    for (int i = 0; i < sys.n2(); ++i)
      for (int j = 0; j < sys.n1(); ++j) out[i][j] += s * mats[r][i][j];
  }
  return out;
}

KernelWitness verify_kernel_witness(const BihomSystem& sys, const std::vector<Rational>& beta) {
  require(std::any_of(beta.begin(), beta.end(), [](const Rational& b) { return b != 0; }), "beta must be nonzero");
  const BigMatrix a = pencil_matrix(sys, beta);
  BigMatrix at(sys.n1(), std::vector<BigInt>(sys.n2()));
  for (int i = 0; i < sys.n2(); ++i)
    for (int j = 0; j < sys.n1(); ++j) at[j][i] = a[i][j];
  KernelWitness w;
  w.beta = beta;
  w.certified = true;
  w.rank = exact_rank(a);
  const int rank_t = exact_rank(at);
  w.ker1 = sys.n1() - w.rank;
  w.ker2 = sys.n2() - rank_t;
  w.rank_nullity = sys.n1() - w.ker1 == sys.n2() - w.ker2;
  return w;
}

PencilKernelStats pencil_kernel_stats(const BihomSystem& sys, int height, int samples, std::uint64_t seed) {
  require(sys.is_bilinear(), "pencil_kernel_stats requires bidegree (1,1)");
  require(samples >= 0, "samples must be nonnegative");
  PencilKernelStats out;
  out.rho_ub = std::min(sys.n1(), sys.n2()) + 1;
  std::vector<KernelWitness> best;
  for (const auto& beta : primitive_directions(sys.R(), height)) {
    ++out.directions_scanned;
    KernelWitness w = verify_kernel_witness(sys, beta);
    if (w.rank < out.rho_ub) {
      out.rho_ub = w.rank;
      best.clear();
    }
    if (w.rank == out.rho_ub && best.size() < 8) best.push_back(std::move(w));
  }
  out.sigma1_lb = sys.n1() - out.rho_ub;
  out.sigma2_lb = sys.n2() - out.rho_ub;
  out.witnesses = std::move(best);

  const auto mats = bilinear_matrices(sys);
  std::vector<Eigen::MatrixXd> dm;
  for (const auto& m : mats) {
    Eigen::MatrixXd d(sys.n2(), sys.n1());
    for (int i = 0; i < sys.n2(); ++i)
      for (int j = 0; j < sys.n1(); ++j) d(i, j) = static_cast<double>(m[i][j]);
    dm.push_back(std::move(d));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::optional<KernelWitness> sampled;
  for (int s = 0; s < samples; ++s) {
    std::vector<double> beta(sys.R());
    for (auto& b : beta) b = gauss(rng);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(sys.n2(), sys.n1());
    for (int r = 0; r < sys.R(); ++r) a += beta[r] * dm[r];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    const double tol = 1e-9 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > tol) ++rank;
    if (!sampled || rank < sampled->rank) {
      KernelWitness w;
      for (double b : beta) w.beta.push_back(exact_rational(b));
      w.rank = rank;
      w.ker1 = sys.n1() - rank;
      w.ker2 = sys.n2() - rank;
      w.rank_nullity = true;
      sampled = std::move(w);
    }
  }
  out.samples = samples;
  if (sampled) out.witnesses.push_back(std::move(*sampled));
  return out;
}

SInvariants s_invariants(const BihomSystem& sys, int height, const std::vector<std::uint64_t>& primes,
                         std::uint64_t budget) {
  require(sys.d1() == 2 && sys.d2() == 1, "s_invariants requires bidegree (2,1)");
  const int n1 = sys.n1(), n2 = sys.n2();
  SInvariants out;
  out.primes = primes;
  for (const auto& beta : primitive_directions(sys.R(), height)) {
    const IntPoly P = pencil_poly(sys, Weights::exact(beta));
    std::vector<IntPoly> slice(n2), hx;
    for (int l = 0; l < n2; ++l) slice[l].nvars = n1;
    for (const auto& [exps, c] : P.terms)
      for (int l = 0; l < n2; ++l)
        if (exps[n1 + l] == 1) slice[l].terms.emplace_back(std::vector<int>(exps.begin(), exps.begin() + n1), c);
    for (int j = 0; j < n1; ++j) hx.push_back(derivative(P, j));
    SWitness w;
    w.beta = beta;
    w.slice = fp_dimension(slice, {n1}, primes, budget);
    w.hx = fp_dimension(hx, {n1, n2}, primes, budget);
    w.dims_nested = w.hx.dim <= w.slice.dim + n2 - 1;
    out.max_slice_dim = std::max(out.max_slice_dim, w.slice.dim);
    out.max_hx_dim = std::max(out.max_hx_dim, w.hx.dim);
    out.witnesses.push_back(std::move(w));
  }
  out.s1_est = 1 + out.max_slice_dim;
  out.s2_est = floor_half(out.max_hx_dim) + 1;
  return out;
}

FpDimension singular_locus_dim(const BihomSystem& sys, const std::vector<Rational>& beta,
                               const std::vector<std::uint64_t>& primes, std::uint64_t budget) {
  const IntPoly P = pencil_poly(sys, Weights::exact(beta));
  std::vector<IntPoly> polys;
  for (int v = 0; v < P.nvars; ++v) {
    IntPoly d = derivative(P, v);
    if (!d.terms.empty()) polys.push_back(std::move(d));
  }
  polys.push_back(P);
  return fp_dimension(polys, {sys.n1(), sys.n2()}, primes, budget);
}

std::string to_string(SmoothVerdict v) {
  switch (v) {
    case SmoothVerdict::SmoothProbable: return "smooth-probable";
    case SmoothVerdict::Singular: return "singular";
    case SmoothVerdict::Unknown: return "unknown";
  }
  return "unknown";
}

namespace {

struct SingularSearch {
  bool completed = false;
  bool found = false;
  std::vector<std::int64_t> x, y;
};

SingularSearch find_singular_point(const FlatSystem& f, std::int64_t p, std::uint64_t budget) {
  SingularSearch out;
  std::vector<std::int64_t> z(f.n, 0);
  std::uint64_t spent = 0;
  auto singular_at = [&] { return rank_mod_p(jacobian_mod(f, z, p), p, f.n) < f.R; };
  auto record = [&] {
    out.found = true;
    out.x.assign(z.begin(), z.begin() + f.n1);
    out.y.assign(z.begin() + f.n1, z.end());
  };
  const int L = f.linear_block();
  try {
    if (L == 0) {
      if (proj_size(f.n1, p) > budget / proj_size(f.n2, p)) return out;
      for_each_multiproj(z, {0, f.n1}, {f.n1, f.n2}, 0, p, [&] {
        const auto v = eval_mod(f, z, p);
        if (std::all_of(v.begin(), v.end(), [](std::int64_t e) { return e == 0; }) && singular_at()) {
          record();
          return false;
        }
        return true;
      });
      out.completed = true;
      return out;
    }
    const int off_l = L == 1 ? 0 : f.n1, off_o = L == 1 ? f.n1 : 0;
    const int nl = L == 1 ? f.n1 : f.n2, no = f.n - nl;
    if (proj_size(no, p) > budget) return out;
    spent = proj_size(no, p);
    bool over = false;
    for_each_proj(z, off_o, no, p, [&] {
      std::vector<std::int64_t> fixed(z.begin() + off_o, z.begin() + off_o + no);
      const ModMatrix M = linear_block_matrix(f, L, fixed, p);
      const ModSolve s = solve_mod_p(M, {}, p, nl);
      // F = M(other) * block_L, so full row rank of M makes every point above nonsingular.
      if (s.rank == f.R || s.kernel.empty()) return true;
      const int k = static_cast<int>(s.kernel.size());
      spent += proj_size(k, p);
      if (spent > budget) {
        over = true;
        return false;
      }
      std::vector<std::int64_t> c(k, 0);
      return for_each_proj(c, 0, k, p, [&] {
        for (int i = 0; i < nl; ++i) {
          i128 v = 0;
          for (int j = 0; j < k; ++j) v += static_cast<i128>(c[j]) * s.kernel[j][i];
          z[off_l + i] = mod_reduce(v, p);
        }
        if (singular_at()) {
          record();
          return false;
        }
        return true;
      });
    });
    out.completed = !over || out.found;
  } catch (const BudgetExceeded&) {
    out.completed = false;
  }
  return out;
}

}  // namespace

SmoothProbe smooth_verdict(const BihomSystem& sys, const std::vector<std::uint64_t>& primes, std::uint64_t budget) {
  require(!primes.empty(), "at least one probe prime is required");
  const FlatSystem f = flatten(sys);
  SmoothProbe out;
  bool all_done = true;
  for (std::uint64_t p : primes) {
    const SingularSearch s = find_singular_point(f, static_cast<std::int64_t>(p), budget);
    if (s.found) {
      out.singular_primes.push_back(p);
      if (!out.witness_prime) {
        out.witness_prime = p;
        out.witness_x = s.x;
        out.witness_y = s.y;
      }
    } else if (!s.completed) {
      all_done = false;
    }
  }
  if (out.singular_primes.size() == primes.size()) out.verdict = SmoothVerdict::Singular;
  else if (all_done && out.singular_primes.empty()) out.verdict = SmoothVerdict::SmoothProbable;
  return out;
}

std::optional<int> rank_locus_dim(const BihomSystem& sys, int block, const std::vector<std::uint64_t>& primes,
                                  std::uint64_t budget) {
  require(block == 1 || block == 2, "block must be 1 or 2");
  const FlatSystem f = flatten(sys);
  const int ni = sys.n(block), no = sys.n(3 - block);
  const int off_i = block == 1 ? 0 : sys.n1(), off_o = block == 1 ? sys.n1() : 0;
  const int R = sys.R();
  auto block_rank = [&](const std::vector<std::int64_t>& z, std::int64_t p) {
    const ModMatrix J = jacobian_mod(f, z, p);
    ModMatrix Ji(R, std::vector<std::int64_t>(ni));
    for (int r = 0; r < R; ++r)
      for (int j = 0; j < ni; ++j) Ji[r][j] = J[r][off_i + j];
    return rank_mod_p(Ji, p, ni);
  };
  std::vector<int> dims;
  for (std::uint64_t pu : primes) {
    const auto p = static_cast<std::int64_t>(pu);
    std::vector<std::int64_t> z(f.n, 0);
    double count = 0;
    if (sys.d(block) == 1) {
      // dF/d(block) depends on the other block only.
      if (proj_size(no, pu) > budget) return std::nullopt;
      std::uint64_t deficient = 0;
      for_each_proj(z, off_o, no, p, [&] {
        if (block_rank(z, p) < R) ++deficient;
        return true;
      });
      count = std::pow(static_cast<double>(p), ni) * (1.0 + static_cast<double>(p - 1) * static_cast<double>(deficient));
    } else if (sys.d(3 - block) == 1 && R == 1) {
      // The gradient in this block is linear in the other block: count kernels fibrewise.
      if (proj_size(ni, pu) > budget) return std::nullopt;
      double acc = 0;
      for_each_proj(z, off_i, ni, p, [&] {
        ModMatrix N(ni, std::vector<std::int64_t>(no, 0));
        for (int l = 0; l < no; ++l) {
          for (int m = 0; m < no; ++m) z[off_o + m] = m == l ? 1 : 0;
          const ModMatrix J = jacobian_mod(f, z, p);
          for (int j = 0; j < ni; ++j) N[j][l] = J[0][off_i + j];
        }
        acc += std::pow(static_cast<double>(p), no - rank_mod_p(N, p, no));
        return true;
      });
      count = std::pow(static_cast<double>(p), no) + static_cast<double>(p - 1) * acc;
    } else {
      if (ipow(pu, f.n) > budget) return std::nullopt;
      std::uint64_t c = 0;
      for_each_residue(f.n, p, [&](const std::vector<std::int64_t>& w) {
        if (block_rank(w, p) < R) ++c;
        return true;
      });
      count = static_cast<double>(c);
    }
    dims.push_back(static_cast<int>(std::lround(std::log(count) / std::log(static_cast<double>(p)))));
  }
  std::map<int, int> freq;
  for (int d : dims) ++freq[d];
  int best = 0, dim = 0;
  for (const auto& [d, c] : freq)
    if (c >= best) {
      best = c;
      dim = d;
    }
  return dim;
}

InvariantReport compute_invariants(const BihomSystem& sys, const InvariantOptions& opt) {
  InvariantReport rep;
  rep.n1 = sys.n1();
  rep.n2 = sys.n2();
  rep.R = sys.R();
  rep.d1 = sys.d1();
  rep.d2 = sys.d2();
  rep.height = opt.height;
  rep.primes = opt.primes;
  if (sys.is_bilinear()) rep.pencil = pencil_kernel_stats(sys, opt.height, opt.samples, opt.seed);
  if (sys.d1() == 2 && sys.d2() == 1) rep.s = s_invariants(sys, opt.height, opt.primes, opt.budget);
  for (const auto& beta : primitive_directions(sys.R(), opt.height)) {
    const FpDimension d = singular_locus_dim(sys, beta, opt.primes, opt.budget);
    if (rep.sing_locus_witness.empty() || d.dim > rep.sing_locus_dim_est) {
      rep.sing_locus_dim_est = d.dim;
      rep.sing_locus_witness = beta;
    }
  }
  rep.smooth = smooth_verdict(sys, opt.primes, opt.budget);
  std::vector<IntPoly> forms;
  for (int r = 0; r < sys.R(); ++r) forms.push_back(sys.as_poly(r));
  rep.variety = fp_dimension(forms, {sys.n1(), sys.n2()}, opt.primes, opt.budget);
  rep.complete_intersection_probable = rep.variety.dim == sys.n1() + sys.n2() - 2 - sys.R();
  for (int i = 0; i < 2; ++i) rep.schindler_dim[i] = rank_locus_dim(sys, i + 1, opt.primes, opt.budget);
  return rep;
}

HypothesisReport hypothesis_report(const InvariantReport& inv, double P1, double P2) {
  require(P1 > 1 && P2 > 1, "P1 and P2 must exceed 1");
  require(inv.R >= 1, "invariant report is empty");
  HypothesisReport out;
  const double ratio = std::log(P1) / std::log(P2);
  out.b = std::max(ratio, 1.0);
  out.u = std::max(1.0 / ratio, 1.0);
  const double b = out.b, u = out.u, R = inv.R;
  const double n1 = inv.n1, n2 = inv.n2, d1 = inv.d1, d2 = inv.d2;
  const bool smooth = inv.smooth.verdict == SmoothVerdict::SmoothProbable;
  auto add = [&](std::string name, double lhs, double rhs, bool conditional, std::string note = {}) {
    HypothesisRow row{std::move(name), lhs, rhs, lhs - rhs, lhs > rhs, conditional, std::move(note)};
    out.rows.push_back(std::move(row));
    return &out.rows.back();
  };
  const std::string smooth_note = "requires smooth V(F); verdict " + to_string(inv.smooth.verdict);

  add("n1 > (d1+d2)R", n1, (d1 + d2) * R, false);
  add("n2 > (d1+d2)R", n2, (d1 + d2) * R, false);
  {
    auto* row = add("complete intersection: dim V(F) = n1+n2-2-R", inv.variety.dim, n1 + n2 - 2 - R, true,
                    "finite-field dimension estimate");
    row->slack = row->rhs - row->lhs;
    row->holds = inv.complete_intersection_probable;
  }

  if (inv.d1 == 1 && inv.d2 == 1) {
    require(inv.pencil.has_value(), "bilinear hypotheses need pencil kernel statistics");
    // The bilinear case is symmetric in x and y, so the larger of b and u plays the role of b.
    const double be = std::max(b, u);
    const double s1 = inv.pencil->sigma1_lb, s2 = inv.pencil->sigma2_lb;
    add("n1 - sigma1 > (2b+2)R", n1 - s1, (2 * be + 2) * R, true, "sigma from a lower bound");
    add("n2 - sigma2 > (2b+2)R", n2 - s2, (2 * be + 2) * R, true, "sigma from a lower bound");
    add("C = min(n_i - sigma_i)/2 > (b d1 + u d2)R", std::min(n1 - s1, n2 - s2) / 2, (b * d1 + u * d2) * R, true,
        "sigma from a lower bound");
    auto* a = add("smooth: min(n1,n2) > (2b+2)R", std::min(n1, n2), (2 * be + 2) * R, true, smooth_note);
    a->holds = a->holds && smooth;
    auto* c = add("smooth: n1+n2 > (4b+5)R", n1 + n2, (4 * be + 5) * R, true, smooth_note);
    c->holds = c->holds && smooth;
  } else if (inv.d1 == 2 && inv.d2 == 1) {
    require(inv.s.has_value(), "bidegree (2,1) hypotheses need s-invariants");
    const double s1 = inv.s->s1_est, s2 = inv.s->s2_est;
    const double k = (8 * b + 4 * u) * R;
    add("n1 - s1 > (8b+4u)R", n1 - s1, k, true, "s from finite-field estimates");
    add("(n1+n2)/2 - s2 > (8b+4u)R", (n1 + n2) / 2 - s2, k, true, "s from finite-field estimates");
    add("C = min(n1 - s1, (n1+n2)/2 - s2)/4 > (b d1 + u d2)R", std::min(n1 - s1, (n1 + n2) / 2 - s2) / 4,
        (b * d1 + u * d2) * R, true, "s from finite-field estimates");
    auto* a = add("smooth: n1 > (16b+8u+1)R", n1, (16 * b + 8 * u + 1) * R, true, smooth_note);
    a->holds = a->holds && smooth;
    auto* c = add("smooth: n2 > (8b+4u+1)R", n2, (8 * b + 4 * u + 1) * R, true, smooth_note);
    c->holds = c->holds && smooth;
  }

  const double schindler_rhs =
      std::pow(2.0, d1 + d2 - 2) * std::max(R * (R + 1) * (d1 + d2 - 1), R * (b * d1 + u * d2));
  for (int i = 0; i < 2; ++i) {
    const std::string name = "Schindler: n1+n2 - dim V" + std::to_string(i + 1) +
                             "* > 2^(d1+d2-2) max{R(R+1)(d1+d2-1), R(b d1+u d2)}";
    if (inv.schindler_dim[i]) {
      add(name, n1 + n2 - *inv.schindler_dim[i], schindler_rhs, true, "affine finite-field dimension estimate");
    } else {
      auto* row = add(name, 0, schindler_rhs, true, "dimension unavailable within the budget");
      row->holds = false;
    }
  }
  {
    auto* row = add("beats Schindler: d1 b + d2 u < (R+1)/2", d1 * b + d2 * u, (R + 1) / 2, false);
    row->slack = row->rhs - row->lhs;
    row->holds = row->lhs < row->rhs;
  }
  return out;
}

}  // namespace biforms
