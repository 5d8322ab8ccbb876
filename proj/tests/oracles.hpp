#pragma once

// Brute-force reference implementations. They deliberately avoid the library's tensor,
// linearisation and lattice code and work from the raw monomial list.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "biforms/box.hpp"
#include "biforms/core.hpp"
#include "biforms/forms.hpp"

namespace oracle {

using biforms::BigInt;
using biforms::BihomSystem;
using biforms::BoxPair;
using biforms::Monomial;
using biforms::Rational;
using I64 = std::int64_t;
using Vec = std::vector<I64>;

inline const char* kCorpusDir = BIFORMS_CORPUS_DIR;

inline std::string corpus(const std::string& name) { return std::string(kCorpusDir) + "/" + name; }

// Calls fn(z) for z in the integer box prod [lo_i, hi_i]; empty when some lo_i > hi_i.
inline void for_box(const Vec& lo, const Vec& hi, const std::function<void(const Vec&)>& fn) {
  const std::size_t n = lo.size();
  for (std::size_t i = 0; i < n; ++i)
    if (lo[i] > hi[i]) return;
  Vec z = lo;
  while (true) {
    fn(z);
    std::size_t i = n;
    while (i-- > 0) {
      if (++z[i] <= hi[i]) break;
      z[i] = lo[i];
    }
    if (i == static_cast<std::size_t>(-1)) return;
  }
}

inline BigInt eval_form(const BihomSystem& sys, int r, const Vec& x, const Vec& y) {
  BigInt s = 0;
  for (const auto& m : sys.form(r)) {
    BigInt t = m.coeff;
    for (int j : m.j) t *= x[j];
    for (int k : m.k) t *= y[k];
    s += t;
  }
  return s;
}

// Closed-box integer range of t with lo <= t/P <= hi.
inline std::pair<I64, I64> closed_range(const biforms::Interval& iv, double P) {
  const Rational Pr = biforms::exact_rational(P);
  return {static_cast<I64>(biforms::ceil_rational(iv.lo * Pr)), static_cast<I64>(biforms::floor_rational(iv.hi * Pr))};
}

inline BigInt count_N(const BihomSystem& sys, const BoxPair& boxes, double P1, double P2) {
  Vec lo, hi;
  for (int b = 1; b <= 2; ++b)
    for (const auto& iv : boxes.block(b)) {
      auto [a, c] = closed_range(iv, b == 1 ? P1 : P2);
      lo.push_back(a);
      hi.push_back(c);
    }
  const int n1 = sys.n1();
  BigInt count = 0;
  for_box(lo, hi, [&](const Vec& z) {
    Vec x(z.begin(), z.begin() + n1), y(z.begin() + n1, z.end());
    for (int r = 0; r < sys.R(); ++r)
      if (eval_form(sys, r, x, y) != 0) return;
    ++count;
  });
  return count;
}

// Sum over all orderings of idx (repeats included) of prod vecs[a][idx[perm[a]]].
inline Rational perm_sum(const std::vector<int>& idx, const std::vector<const Vec*>& vecs) {
  std::vector<int> p(idx.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<int>(i);
  Rational s = 0;
  do {
    Rational t = 1;
    for (std::size_t a = 0; a < p.size(); ++a) t *= (*vecs[a])[idx[p[a]]];
    s += t;
  } while (std::next_permutation(p.begin(), p.end()));
  return s;
}

// Gamma_{w.F}(xs, ys): each monomial contributes c times its full polarisation.
inline Rational gamma(const BihomSystem& sys, const std::vector<Rational>& w, const std::vector<Vec>& xs,
                      const std::vector<Vec>& ys) {
  std::vector<const Vec*> xp, yp;
  for (const auto& v : xs) xp.push_back(&v);
  for (const auto& v : ys) yp.push_back(&v);
  Rational s = 0;
  for (int r = 0; r < sys.R(); ++r) {
    if (w[r] == 0) continue;
    for (const auto& m : sys.form(r)) s += w[r] * Rational(m.coeff) * perm_sum(m.j, xp) * perm_sum(m.k, yp);
  }
  return s;
}

inline BigInt factorial(int n) {
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Number of distinct orderings of a sorted index multiset.
inline BigInt orderings(const std::vector<int>& idx) {
  BigInt f = factorial(static_cast<int>(idx.size()));
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && idx[j] == idx[i]) ++j;
    f /= factorial(static_cast<int>(j - i));
    i = j;
  }
  return f;
}

// max over tensor entries of |sum_r w_r F^(r)_{j,k}|.
inline Rational sup_norm(const BihomSystem& sys, const std::vector<Rational>& w) {
  std::map<std::pair<std::vector<int>, std::vector<int>>, Rational> acc;
  for (int r = 0; r < sys.R(); ++r)
    for (const auto& m : sys.form(r))
      acc[{m.j, m.k}] += w[r] * Rational(m.coeff) / Rational(orderings(m.j) * orderings(m.k));
  Rational best = 0;
  for (const auto& [key, v] : acc) best = std::max(best, v < 0 ? Rational(-v) : v);
  return best;
}

inline I64 open_limit(double B) { return static_cast<I64>(std::ceil(B)) - 1; }

// Enumerates the free vectors of the side-`side` linearisation: fn(xs, ys) with the unit vector slot empty.
inline void for_linearised(const BihomSystem& sys, int side, I64 lim1, I64 lim2,
                           const std::function<void(std::vector<Vec>&, std::vector<Vec>&)>& fn) {
  const int nx = side == 1 ? sys.d1() - 1 : sys.d1();
  const int ny = side == 1 ? sys.d2() : sys.d2() - 1;
  Vec lo, hi;
  for (int a = 0; a < nx; ++a)
    for (int i = 0; i < sys.n1(); ++i) {
      lo.push_back(-lim1);
      hi.push_back(lim1);
    }
  for (int b = 0; b < ny; ++b)
    for (int i = 0; i < sys.n2(); ++i) {
      lo.push_back(-lim2);
      hi.push_back(lim2);
    }
  for_box(lo, hi, [&](const Vec& z) {
    std::vector<Vec> xs, ys;
    std::size_t pos = 0;
    for (int a = 0; a < nx; ++a, pos += sys.n1()) xs.emplace_back(z.begin() + pos, z.begin() + pos + sys.n1());
    for (int b = 0; b < ny; ++b, pos += sys.n2()) ys.emplace_back(z.begin() + pos, z.begin() + pos + sys.n2());
    fn(xs, ys);
  });
}

// Calls pred(Gamma value) for every unit vector e_l placed in the last slot of the side's block.
inline bool all_units(const BihomSystem& sys, int side, const std::vector<Rational>& w, std::vector<Vec>& xs,
                      std::vector<Vec>& ys, const std::function<bool(const Rational&)>& pred) {
  const int n = side == 1 ? sys.n1() : sys.n2();
  auto& slot = side == 1 ? xs : ys;
  for (int l = 0; l < n; ++l) {
    Vec e(n, 0);
    e[l] = 1;
    slot.push_back(e);
    const bool ok = pred(gamma(sys, w, xs, ys));
    slot.pop_back();
    if (!ok) return false;
  }
  return true;
}

inline BigInt count_aux(const BihomSystem& sys, int side, const std::vector<Rational>& beta, double B) {
  Rational thr = sup_norm(sys, beta);
  for (int i = 0; i < sys.d1() + sys.d2() - 2; ++i) thr *= biforms::exact_rational(B);
  BigInt count = 0;
  const I64 lim = open_limit(B);
  for_linearised(sys, side, lim, lim, [&](std::vector<Vec>& xs, std::vector<Vec>& ys) {
    if (all_units(sys, side, beta, xs, ys, [&](const Rational& g) { return (g < 0 ? Rational(-g) : g) < thr; }))
      ++count;
  });
  return count;
}

inline Rational dist_to_int(const Rational& v) {
  const BigInt f = biforms::floor_rational(v);
  const Rational fr = v - Rational(f);
  return std::min(fr, Rational(1) - fr);
}

inline BigInt count_M(const BihomSystem& sys, int side, const std::vector<Rational>& alpha, double P1, double P2,
                      double bound) {
  const Rational b = biforms::exact_rational(bound);
  BigInt count = 0;
  for_linearised(sys, side, open_limit(P1), open_limit(P2), [&](std::vector<Vec>& xs, std::vector<Vec>& ys) {
    if (all_units(sys, side, alpha, xs, ys, [&](const Rational& g) { return dist_to_int(g) < b; })) ++count;
  });
  return count;
}

// S(alpha) by direct summation over the closed boxes.
inline std::complex<double> weighted_sum(const BihomSystem& sys, const BoxPair& boxes, const std::vector<double>& alpha,
                                         double P1, double P2) {
  Vec lo, hi;
  for (int b = 1; b <= 2; ++b)
    for (const auto& iv : boxes.block(b)) {
      auto [a, c] = closed_range(iv, b == 1 ? P1 : P2);
      lo.push_back(a);
      hi.push_back(c);
    }
  std::complex<double> s = 0;
  const int n1 = sys.n1();
  for_box(lo, hi, [&](const Vec& z) {
    Vec x(z.begin(), z.begin() + n1), y(z.begin() + n1, z.end());
    double ph = 0;
    for (int r = 0; r < sys.R(); ++r) ph += alpha[r] * static_cast<double>(eval_form(sys, r, x, y));
    s += std::polar(1.0, 2 * M_PI * ph);
  });
  return s;
}

// S_{a,q} by direct summation over residues.
inline std::complex<double> complete_sum(const BihomSystem& sys, const Vec& a, I64 q) {
  const int n = sys.n1() + sys.n2();
  std::vector<BigInt> hist(q, 0);
  for_box(Vec(n, 0), Vec(n, q - 1), [&](const Vec& z) {
    Vec x(z.begin(), z.begin() + sys.n1()), y(z.begin() + sys.n1(), z.end());
    BigInt ph = 0;
    for (int r = 0; r < sys.R(); ++r) ph += a[r] * eval_form(sys, r, x, y);
    BigInt m = ph % q;
    if (m < 0) m += q;
    ++hist[static_cast<I64>(m)];
  });
  std::complex<double> s = 0;
  for (I64 t = 0; t < q; ++t) s += static_cast<double>(hist[t]) * std::polar(1.0, 2 * M_PI * t / q);
  return s / std::pow(static_cast<double>(q), n);
}

// #{(x,y) mod q : F = 0 mod q}.
inline BigInt residue_count(const BihomSystem& sys, I64 q) {
  const int n = sys.n1() + sys.n2();
  BigInt c = 0;
  for_box(Vec(n, 0), Vec(n, q - 1), [&](const Vec& z) {
    Vec x(z.begin(), z.begin() + sys.n1()), y(z.begin() + sys.n1(), z.end());
    for (int r = 0; r < sys.R(); ++r)
      if (eval_form(sys, r, x, y) % q != 0) return;
    ++c;
  });
  return c;
}

// Random system with `terms` monomials per form and coefficients in [-cmax, cmax] \ {0}.
inline BihomSystem random_system(std::mt19937_64& rng, int n1, int n2, int d1, int d2, int R, int terms, int cmax) {
  std::uniform_int_distribution<int> ix(0, n1 - 1), iy(0, n2 - 1), c(1, cmax), sign(0, 1);
  std::vector<std::vector<Monomial>> forms(R);
  for (auto& f : forms)
    while (true) {
      f.clear();
      for (int t = 0; t < terms; ++t) {
        Monomial m;
        for (int a = 0; a < d1; ++a) m.j.push_back(ix(rng));
        for (int b = 0; b < d2; ++b) m.k.push_back(iy(rng));
        std::sort(m.j.begin(), m.j.end());
        std::sort(m.k.begin(), m.k.end());
        m.coeff = c(rng) * (sign(rng) ? 1 : -1);
        f.push_back(m);
      }
      // Merging may cancel everything; retry until the form survives.
      std::map<std::pair<std::vector<int>, std::vector<int>>, BigInt> acc;
      for (const auto& m : f) acc[{m.j, m.k}] += m.coeff;
      if (std::any_of(acc.begin(), acc.end(), [](const auto& kv) { return kv.second != 0; })) break;
    }
  return BihomSystem(n1, n2, d1, d2, forms);
}

inline std::vector<Rational> random_rationals(std::mt19937_64& rng, int R, int num, int den) {
  std::uniform_int_distribution<int> a(-num, num), b(1, den);
  std::vector<Rational> out;
  do {
    out.clear();
    for (int i = 0; i < R; ++i) out.emplace_back(a(rng), b(rng));
  } while (std::all_of(out.begin(), out.end(), [](const Rational& r) { return r == 0; }));
  return out;
}

inline std::vector<double> to_doubles(const std::vector<Rational>& v) {
  std::vector<double> out;
  for (const auto& r : v) out.push_back(static_cast<double>(r));
  return out;
}

}  // namespace oracle
