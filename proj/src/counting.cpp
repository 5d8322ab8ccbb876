#include "biforms/counting.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "biforms/lattice.hpp"
#include "biforms/parallel.hpp"

namespace biforms {
namespace {

using i128 = __int128;

struct CMono {
  int r;
  std::vector<int> xs;
  std::vector<int> ys;
  std::int64_t c;
};

std::vector<CMono> compile(const BihomSystem& sys) {
  std::vector<CMono> out;
  for (int r = 0; r < sys.R(); ++r)
    for (const auto& m : sys.form(r)) out.push_back(CMono{r, m.j, m.k, to_i64(m.coeff, "coefficient")});
  return out;
}

struct Ranges {
  std::vector<std::int64_t> lo, hi;
  bool empty() const {
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (lo[i] > hi[i]) return true;
    return false;
  }
  std::int64_t max_abs() const {
    std::int64_t m = 0;
    for (std::size_t i = 0; i < lo.size(); ++i) m = std::max<std::int64_t>({m, std::llabs(lo[i]), std::llabs(hi[i])});
    return m;
  }
  BigInt size() const {
    BigInt s = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) s *= BigInt(std::max<std::int64_t>(0, hi[i] - lo[i] + 1));
    return s;
  }
};

Ranges box_ranges(const BoxPair& boxes, int block, double P) {
  Ranges r;
  for (int i = 0; i < static_cast<int>(boxes.block(block).size()); ++i) {
    auto [a, b] = boxes.int_range(block, i, P);
    r.lo.push_back(a);
    r.hi.push_back(b);
  }
  return r;
}

// Visits every vector of the product range whose first coordinate equals `first`.
template <class Fn>
void for_each_with_first(const Ranges& rg, std::int64_t first, Fn&& fn) {
  const std::size_t n = rg.lo.size();
  std::vector<std::int64_t> v(rg.lo);
  v[0] = first;
  for (std::size_t i = 1; i < n; ++i)
    if (rg.lo[i] > rg.hi[i]) return;
  while (true) {
    fn(v);
    bool advanced = false;
    for (std::size_t i = n; i-- > 1;) {
      if (v[i] < rg.hi[i]) {
        ++v[i];
        advanced = true;
        break;
      }
      v[i] = rg.lo[i];
    }
    if (!advanced) return;
  }
}

template <class Fn>
void for_each_point(const Ranges& rg, Fn&& fn) {
  if (rg.empty()) return;
  for (std::int64_t t = rg.lo[0]; t <= rg.hi[0]; ++t) for_each_with_first(rg, t, fn);
}

void check_scale(double P) { require(std::isfinite(P) && P > 1, "P must exceed 1"); }

// Guards the i128 evaluation: sum |c| * X^d1 * Y^d2 must stay below 2^120.
void check_magnitude(const std::vector<CMono>& monos, std::int64_t X, std::int64_t Y) {
  long double total = 0;
  for (const auto& m : monos)
    total += std::fabs(static_cast<long double>(m.c)) * std::pow(static_cast<long double>(X), m.xs.size()) *
             std::pow(static_cast<long double>(Y), m.ys.size());
  require(total < std::ldexp(1.0L, 120), "form values exceed the 128-bit evaluation kernel");
}

struct Budget {
  std::uint64_t limit;
  std::atomic<std::uint64_t> used{0};
  void charge(std::uint64_t n) {
    if (used.fetch_add(n) + n > limit) throw BudgetExceeded("enumeration budget exceeded");
  }
};

// Direct check of F(x,y) = 0 for all forms.
bool vanishes(const std::vector<CMono>& monos, int R, const std::vector<std::int64_t>& x,
              const std::vector<std::int64_t>& y, std::vector<i128>& acc) {
  acc.assign(R, 0);
  for (const auto& m : monos) {
    i128 t = m.c;
    for (int v : m.xs) t *= x[v];
    for (int v : m.ys) t *= y[v];
    acc[m.r] += t;
  }
  for (auto v : acc)
    if (v != 0) return false;
  return true;
}

CountResult count_generic(const BihomSystem& sys, const Ranges& xr, const Ranges& yr, const CountOptions& opt) {
  auto monos = compile(sys);
  check_magnitude(monos, xr.max_abs(), yr.max_abs());
  BigInt total = xr.size() * yr.size();
  if (total > opt.budget) throw BudgetExceeded("enumeration budget exceeded");
  // Group monomials by their y multi-index so each x fixes a polynomial in y.
  std::map<std::vector<int>, int> group_of;
  for (const auto& m : monos) group_of.emplace(m.ys, 0);
  std::vector<std::vector<int>> groups;
  for (auto& [k, id] : group_of) {
    id = static_cast<int>(groups.size());
    groups.push_back(k);
  }
  std::vector<int> group_index;
  for (const auto& m : monos) group_index.push_back(group_of[m.ys]);
  const int R = sys.R(), G = static_cast<int>(groups.size());
  std::uint64_t units = static_cast<std::uint64_t>(xr.hi[0] - xr.lo[0] + 1);
  std::uint64_t count = parallel_reduce<std::uint64_t>(
      units, opt.threads, 0,
      [&](std::int64_t u) {
        std::uint64_t local = 0;
        std::vector<i128> coef(static_cast<std::size_t>(G) * R);
        for_each_with_first(xr, xr.lo[0] + u, [&](const std::vector<std::int64_t>& x) {
          std::fill(coef.begin(), coef.end(), 0);
          for (std::size_t mi = 0; mi < monos.size(); ++mi) {
            const auto& m = monos[mi];
            i128 t = m.c;
            for (int v : m.xs) t *= x[v];
            coef[static_cast<std::size_t>(group_index[mi]) * R + m.r] += t;
          }
          for_each_point(yr, [&](const std::vector<std::int64_t>& y) {
            for (int r = 0; r < R; ++r) {
              i128 acc = 0;
              for (int g = 0; g < G; ++g) {
                i128 c = coef[static_cast<std::size_t>(g) * R + r];
                if (c == 0) continue;
                for (int v : groups[g]) c *= y[v];
                acc += c;
              }
              if (acc != 0) return;
            }
            ++local;
          });
        });
        return local;
      },
      [](std::uint64_t a, std::uint64_t b) { return a + b; });
  return CountResult{BigInt(count), total, CountMethod::GenericBrute};
}

// Fixes block `fixed` and solves the linear system in the other block exactly.
CountResult count_linear(const BihomSystem& sys, int fixed, const Ranges& fr, const Ranges& lr,
                         CountMethod method, const CountOptions& opt) {
  auto monos = compile(sys);
  const int R = sys.R();
  const int nl = static_cast<int>(lr.lo.size());
  for (const auto& m : monos)
    require((fixed == 1 ? m.ys.size() : m.xs.size()) == 1, "linear path needs degree one in the free block");
  {
    // Matrix entries c * prod(fixed coords) must fit 62 bits.
    long double worst = 0;
    for (const auto& m : monos)
      worst += std::fabs(static_cast<long double>(m.c)) *
               std::pow(static_cast<long double>(fr.max_abs()), (fixed == 1 ? m.xs : m.ys).size());
    require(worst < std::ldexp(1.0L, 62), "coefficient growth exceeds the 64-bit lattice kernel");
  }
  if (fr.size() > opt.budget) throw BudgetExceeded("enumeration budget exceeded");
  Budget budget{opt.budget};
  std::uint64_t units = static_cast<std::uint64_t>(fr.hi[0] - fr.lo[0] + 1);
  using Pair = std::pair<std::uint64_t, std::uint64_t>;
  Pair res = parallel_reduce<Pair>(
      units, opt.threads, Pair{0, 0},
      [&](std::int64_t u) {
        Pair local{0, 0};
        I64Matrix M(R, std::vector<std::int64_t>(nl, 0));
        std::vector<i128> acc;
        for_each_with_first(fr, fr.lo[0] + u, [&](const std::vector<std::int64_t>& z) {
          for (auto& row : M) std::fill(row.begin(), row.end(), 0);
          for (const auto& m : monos) {
            std::int64_t t = m.c;
            for (int v : (fixed == 1 ? m.xs : m.ys)) t *= z[v];
            M[m.r][fixed == 1 ? m.ys[0] : m.xs[0]] += t;
          }
          std::uint64_t visited = 1;
          auto basis = kernel_basis(M, nl);
          if (basis) {
            auto lc = count_in_box(*basis, lr.lo, lr.hi);
            local.first += lc.count;
            visited += lc.nodes;
          } else {
            // Fallback: direct scan of the fibre.
            for_each_point(lr, [&](const std::vector<std::int64_t>& w) {
              ++visited;
              bool zero = fixed == 1 ? vanishes(monos, R, z, w, acc) : vanishes(monos, R, w, z, acc);
              if (zero) ++local.first;
            });
          }
          local.second += visited;
          if (local.second > (1u << 16)) {
            budget.charge(local.second);
            local.second = 0;
          }
        });
        budget.charge(local.second);
        return local;
      },
      [](Pair a, Pair b) { return Pair{a.first + b.first, a.second + b.second}; });
  return CountResult{BigInt(res.first), BigInt(budget.used.load()), method};
}

}  // namespace

std::string to_string(CountMethod m) {
  switch (m) {
    case CountMethod::GenericBrute: return "generic-brute";
    case CountMethod::BilinearHyperplane: return "bilinear-hyperplane";
    case CountMethod::FixedYLinear: return "fixed-y-linear";
    case CountMethod::FixedXLinear: return "fixed-x-linear";
  }
  return "unknown";
}

CountResult count_N(const BihomSystem& sys, const BoxPair& boxes, double P1, double P2, const CountOptions& opt) {
  check_scale(P1);
  check_scale(P2);
  require(boxes.n1() == sys.n1() && boxes.n2() == sys.n2(), "box dimensions do not match the system");
  Ranges xr = box_ranges(boxes, 1, P1), yr = box_ranges(boxes, 2, P2);
  CountMethod method;
  if (opt.force) {
    method = *opt.force;
  } else if (sys.is_bilinear()) {
    method = CountMethod::BilinearHyperplane;
  } else if (sys.d1() == 1) {
    method = CountMethod::FixedYLinear;
  } else if (sys.d2() == 1) {
    method = CountMethod::FixedXLinear;
  } else {
    method = CountMethod::GenericBrute;
  }
  if (xr.empty() || yr.empty()) return CountResult{0, 0, method};
  switch (method) {
    case CountMethod::GenericBrute:
      return count_generic(sys, xr, yr, opt);
    case CountMethod::BilinearHyperplane:
      require(sys.is_bilinear(), "bilinear-hyperplane needs bidegree (1,1)");
      // Fix the block with fewer lattice points.
      if (xr.size() < yr.size()) return count_linear(sys, 1, xr, yr, method, opt);
      return count_linear(sys, 2, yr, xr, method, opt);
    case CountMethod::FixedYLinear:
      require(sys.d1() == 1, "fixed-y-linear needs d1 = 1");
      return count_linear(sys, 2, yr, xr, method, opt);
    case CountMethod::FixedXLinear:
      require(sys.d2() == 1, "fixed-x-linear needs d2 = 1");
      return count_linear(sys, 1, xr, yr, method, opt);
  }
  throw ValidationError("unknown count method");
}

namespace {

// Gamma(x^, e_l, y~) (side 1) or Gamma(x~, y^, e_l) (side 2) as polynomials in the free coordinates.
struct Linearised {
  int free = 0;
  int ells = 0;
  std::vector<std::int64_t> lim;  // |z_i| <= lim[i]
  std::vector<std::vector<std::pair<i128, std::vector<int>>>> exact_terms;
  std::vector<std::vector<std::pair<double, std::vector<int>>>> real_terms;
  bool exact = false;
  BigInt den = 1;  // exact mode: terms carry D * weights
};

Linearised linearise(const BihomSystem& sys, int side, const Weights& w, std::int64_t xlim, std::int64_t ylim) {
  require(side == 1 || side == 2, "side must be 1 or 2");
  require(static_cast<int>(w.size()) == sys.R(), "weight vector length must equal R");
  const int n1 = sys.n1(), n2 = sys.n2(), d1 = sys.d1(), d2 = sys.d2();
  Linearised L;
  const int xslots = side == 1 ? d1 - 1 : d1;
  const int yslots = side == 1 ? d2 : d2 - 1;
  L.free = xslots * n1 + yslots * n2;
  L.ells = side == 1 ? n1 : n2;
  L.lim.assign(xslots * n1, xlim);
  L.lim.insert(L.lim.end(), static_cast<std::size_t>(yslots) * n2, ylim);
  L.exact = w.is_exact();
  std::vector<BigInt> scaled_w;
  if (L.exact) {
    for (const auto& v : w.exact_values()) L.den = boost::multiprecision::lcm(L.den, BigInt(boost::multiprecision::denominator(v)));
    for (const auto& v : w.exact_values()) scaled_w.push_back(boost::multiprecision::numerator(v * Rational(L.den)));
  }
  std::vector<std::map<std::vector<int>, BigInt>> ex(L.ells);
  std::vector<std::map<std::vector<int>, double>> re(L.ells);
  for (int r = 0; r < sys.R(); ++r) {
    for (const auto& e : sys.ordered_tensor(r)) {
      int ell = side == 1 ? e.j[d1 - 1] : e.k[d2 - 1];
      std::vector<int> idx;
      for (int a = 0; a < xslots; ++a) idx.push_back(a * n1 + e.j[a]);
      for (int b = 0; b < yslots; ++b) idx.push_back(xslots * n1 + b * n2 + e.k[b]);
      if (L.exact) ex[ell][idx] += scaled_w[r] * e.value;
      else re[ell][idx] += w[r] * static_cast<double>(e.value);
    }
  }
  L.exact_terms.resize(L.ells);
  L.real_terms.resize(L.ells);
  for (int l = 0; l < L.ells; ++l) {
    for (auto& [idx, c] : ex[l])
      if (c != 0) L.exact_terms[l].emplace_back(static_cast<i128>(to_i64(c, "scaled coefficient")), idx);
    for (auto& [idx, c] : re[l])
      if (c != 0.0) L.real_terms[l].emplace_back(c, idx);
  }
  return L;
}

template <class Pred>
BigInt count_free(const Linearised& L, const CountOptions& opt, Pred&& accept) {
  Ranges rg;
  for (auto m : L.lim) {
    rg.lo.push_back(-m);
    rg.hi.push_back(m);
  }
  if (L.free == 0) {
    std::vector<std::int64_t> z;
    return accept(z) ? 1 : 0;
  }
  if (rg.empty()) return 0;
  if (rg.size() > opt.budget) throw BudgetExceeded("enumeration budget exceeded");
  std::uint64_t units = static_cast<std::uint64_t>(rg.hi[0] - rg.lo[0] + 1);
  std::uint64_t c = parallel_reduce<std::uint64_t>(
      units, opt.threads, 0,
      [&](std::int64_t u) {
        std::uint64_t local = 0;
        for_each_with_first(rg, rg.lo[0] + u, [&](const std::vector<std::int64_t>& z) {
          if (accept(z)) ++local;
        });
        return local;
      },
      [](std::uint64_t a, std::uint64_t b) { return a + b; });
  return BigInt(c);
}

i128 eval_exact(const std::vector<std::pair<i128, std::vector<int>>>& terms, const std::vector<std::int64_t>& z) {
  i128 acc = 0;
  for (const auto& [c, idx] : terms) {
    i128 t = c;
    for (int i : idx) t *= z[i];
    acc += t;
  }
  return acc;
}

double eval_real(const std::vector<std::pair<double, std::vector<int>>>& terms, const std::vector<std::int64_t>& z) {
  double acc = 0;
  for (const auto& [c, idx] : terms) {
    double t = c;
    for (int i : idx) t *= static_cast<double>(z[i]);
    acc += t;
  }
  return acc;
}

// Integers |z| < B, i.e. |z| <= ceil(B) - 1.
std::int64_t open_limit(double B) {
  return static_cast<std::int64_t>(std::ceil(B)) - 1;
}

void check_exact_range(const Linearised& L) {
  long double worst = 0;
  for (const auto& terms : L.exact_terms) {
    long double s = 0;
    for (const auto& [c, idx] : terms) {
      long double t = std::fabs(static_cast<long double>(c));
      for (int i : idx) t *= static_cast<long double>(L.lim[i]);
      s += t;
    }
    worst = std::max(worst, s);
  }
  require(worst < std::ldexp(1.0L, 120), "multilinear values exceed the 128-bit kernel");
}

}  // namespace

BigInt count_aux(const BihomSystem& sys, int side, const PencilWeights& beta, double B, const CountOptions& opt) {
  require(std::isfinite(B) && B >= 1, "B must be at least 1");
  const int dt = sys.d1() + sys.d2() - 2;
  std::int64_t lim = open_limit(B);
  Linearised L = linearise(sys, side, beta, lim, lim);
  if (L.exact) {
    check_exact_range(L);
    // |D Gamma| < D ||beta.F|| B^dt, compared as integers.
    Rational thr = Rational(L.den) * beta_sup_norm_exact(sys, beta);
    for (int i = 0; i < dt; ++i) thr *= exact_rational(B);
    i128 t = static_cast<i128>(to_i64(ceil_rational(thr), "threshold"));
    return count_free(L, opt, [&](const std::vector<std::int64_t>& z) {
      for (const auto& terms : L.exact_terms) {
        i128 v = eval_exact(terms, z);
        if (v < 0) v = -v;
        if (v >= t) return false;
      }
      return true;
    });
  }
  double thr = beta_sup_norm(sys, beta) * std::pow(B, dt) - kRealTolerance;
  return count_free(L, opt, [&](const std::vector<std::int64_t>& z) {
    for (const auto& terms : L.real_terms)
      if (!(std::fabs(eval_real(terms, z)) < thr)) return false;
    return true;
  });
}

BigInt count_M(const BihomSystem& sys, int side, const Weights& alpha, double P1, double P2, double bound,
               const CountOptions& opt) {
  check_scale(P1);
  check_scale(P2);
  require(std::isfinite(bound) && bound > 0, "bound must be positive");
  Linearised L = linearise(sys, side, alpha, open_limit(P1), open_limit(P2));
  if (L.exact) {
    check_exact_range(L);
    const i128 D = static_cast<i128>(to_i64(L.den, "denominator"));
    // dist(V/D, Z) < bound  <=>  min(V mod D, D - V mod D) < bound * D.
    i128 t = static_cast<i128>(to_i64(ceil_rational(exact_rational(bound) * Rational(L.den)), "threshold"));
    return count_free(L, opt, [&](const std::vector<std::int64_t>& z) {
      for (const auto& terms : L.exact_terms) {
        i128 v = eval_exact(terms, z) % D;
        if (v < 0) v += D;
        i128 d = std::min(v, D - v);
        if (d >= t) return false;
      }
      return true;
    });
  }
  const double thr = bound - kRealTolerance;
  return count_free(L, opt, [&](const std::vector<std::int64_t>& z) {
    for (const auto& terms : L.real_terms) {
      double v = eval_real(terms, z);
      if (!(std::fabs(v - std::nearbyint(v)) < thr)) return false;
    }
    return true;
  });
}

SingularValues singular_values(const Eigen::MatrixXd& m) {
  require(m.allFinite(), "matrix has non-finite entries");
  SingularValues s;
  if (m.size() == 0) return s;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& v = svd.singularValues();
  s.lambda.assign(v.data(), v.data() + v.size());
  std::sort(s.lambda.begin(), s.lambda.end(), std::greater<>());
  return s;
}

EllipsoidCount ellipsoid_count(const Eigen::MatrixXd& H, double B, double audit_constant, std::uint64_t budget) {
  require(H.rows() == H.cols() && H.rows() > 0, "ellipsoid_count needs a square matrix");
  require(std::isfinite(B) && B >= 1, "B must be at least 1");
  const int n = static_cast<int>(H.rows());
  auto sv = singular_values(H);
  const std::int64_t m = static_cast<std::int64_t>(std::floor(B));
  Ranges rg{std::vector<std::int64_t>(n, -m), std::vector<std::int64_t>(n, m)};
  if (rg.size() > budget) throw BudgetExceeded("enumeration budget exceeded");
  std::uint64_t count = 0;
  Eigen::VectorXd y(n);
  for_each_point(rg, [&](const std::vector<std::int64_t>& v) {
    for (int i = 0; i < n; ++i) y(i) = static_cast<double>(v[i]);
    if ((H * y).cwiseAbs().maxCoeff() <= B + kRealTolerance) ++count;
  });
  EllipsoidCount out;
  out.count = count;
  double best = std::numeric_limits<double>::infinity();
  double prod = 1;
  for (int i = 1; i <= n; ++i) {
    prod *= sv.lambda[i - 1];
    double bound = std::pow(B, n) / (1 + prod);
    if (bound < best) {
      best = bound;
      out.argmin_i = i;
    }
  }
  out.ratio = static_cast<double>(count) / best;
  out.C = std::max(1.0, sv.lambda[0] / B);
  out.bound_ok = out.ratio <= audit_constant;
  return out;
}

namespace {

void check_21(const BihomSystem& sys) {
  require(sys.d1() == 2 && sys.d2() == 1, "operation requires bidegree (2,1)");
}

// Linear coefficient tensor of H~: entry (l, m) = sum_a x_a lin[l][m][a].
std::vector<std::vector<std::vector<double>>> h_tilde_linear(const BihomSystem& sys, const PencilWeights& beta) {
  check_21(sys);
  auto hs = h_slices(sys, beta);
  double norm = beta_sup_norm(sys, beta);
  require(norm > 0, "beta.F vanishes identically");
  const int n1 = sys.n1(), n2 = sys.n2();
  std::vector<std::vector<std::vector<double>>> lin(n2, std::vector<std::vector<double>>(n1, std::vector<double>(n1)));
  for (int l = 0; l < n2; ++l)
    for (int m = 0; m < n1; ++m)
      for (int a = 0; a < n1; ++a) lin[l][m][a] = hs.slices[l](a, m) / norm;
  return lin;
}

std::vector<std::vector<int>> combinations(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> c(k);
  std::iota(c.begin(), c.end(), 0);
  if (k > n) return out;
  while (true) {
    out.push_back(c);
    int i = k - 1;
    while (i >= 0 && c[i] == n - k + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

using Poly = std::map<std::vector<int>, double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out[e] += ca * cb;
    }
  return out;
}

double poly_eval(const Poly& p, const std::vector<double>& x) {
  double acc = 0;
  for (const auto& [e, c] : p) {
    double t = c;
    for (std::size_t i = 0; i < e.size(); ++i)
      for (int k = 0; k < e[i]; ++k) t *= x[i];
    acc += t;
  }
  return acc;
}

Poly poly_diff(const Poly& p, int var) {
  Poly out;
  for (const auto& [e, c] : p) {
    if (e[var] == 0) continue;
    auto f = e;
    --f[var];
    out[f] += c * e[var];
  }
  return out;
}

int permutation_sign(const std::vector<int>& p) {
  int s = 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) s = -s;
  return s;
}

std::vector<Poly> minor_polys(const BihomSystem& sys, const PencilWeights& beta, int i) {
  auto lin = h_tilde_linear(sys, beta);
  const int n1 = sys.n1(), n2 = sys.n2();
  require(i >= 1 && i <= std::min(n1, n2), "minor size out of range");
  auto entry = [&](int l, int m) {
    Poly p;
    for (int a = 0; a < n1; ++a)
      if (lin[l][m][a] != 0.0) {
        std::vector<int> e(n1, 0);
        e[a] = 1;
        p[e] += lin[l][m][a];
      }
    return p;
  };
  std::vector<Poly> out;
  for (const auto& rows : combinations(n2, i))
    for (const auto& cols : combinations(n1, i)) {
      Poly det;
      std::vector<int> perm(i);
      std::iota(perm.begin(), perm.end(), 0);
      do {
        Poly term{{std::vector<int>(n1, 0), static_cast<double>(permutation_sign(perm))}};
        for (int t = 0; t < i; ++t) term = poly_mul(term, entry(rows[t], cols[perm[t]]));
        for (const auto& [e, c] : term) det[e] += c;
      } while (std::next_permutation(perm.begin(), perm.end()));
      out.push_back(std::move(det));
    }
  return out;
}

}  // namespace

Eigen::MatrixXd h_tilde(const BihomSystem& sys, const PencilWeights& beta, const std::vector<double>& x) {
  auto lin = h_tilde_linear(sys, beta);
  require(static_cast<int>(x.size()) == sys.n1(), "vector length mismatch");
  Eigen::MatrixXd h(sys.n2(), sys.n1());
  for (int l = 0; l < sys.n2(); ++l)
    for (int m = 0; m < sys.n1(); ++m) {
      double acc = 0;
      for (int a = 0; a < sys.n1(); ++a) acc += x[a] * lin[l][m][a];
      h(l, m) = acc;
    }
  return h;
}

std::vector<double> minors_vector(const BihomSystem& sys, const PencilWeights& beta, int i,
                                  const std::vector<double>& x) {
  Eigen::MatrixXd h = h_tilde(sys, beta, x);
  require(i >= 1 && i <= std::min(sys.n1(), sys.n2()), "minor size out of range");
  std::vector<double> out;
  for (const auto& rows : combinations(sys.n2(), i))
    for (const auto& cols : combinations(sys.n1(), i)) {
      Eigen::MatrixXd sub(i, i);
      for (int a = 0; a < i; ++a)
        for (int b = 0; b < i; ++b) sub(a, b) = h(rows[a], cols[b]);
      out.push_back(sub.determinant());
    }
  return out;
}

Eigen::MatrixXd jacobian_minors(const BihomSystem& sys, const PencilWeights& beta, int i,
                                const std::vector<double>& x) {
  require(static_cast<int>(x.size()) == sys.n1(), "vector length mismatch");
  auto polys = minor_polys(sys, beta, i);
  Eigen::MatrixXd J(static_cast<Eigen::Index>(polys.size()), sys.n1());
  for (std::size_t j = 0; j < polys.size(); ++j)
    for (int k = 0; k < sys.n1(); ++k) J(static_cast<Eigen::Index>(j), k) = poly_eval(poly_diff(polys[j], k), x);
  return J;
}

void validate(const KCellSpec& spec, int n) {
  require(spec.k >= 0 && spec.k <= n, "k must lie in 0..n");
  require(static_cast<int>(spec.E.size()) == spec.k + 1, "E needs k+1 entries");
  for (std::size_t i = 0; i < spec.E.size(); ++i) {
    require(std::isfinite(spec.E[i]) && spec.E[i] >= 1, "E entries must be at least 1");
    if (i > 0) require(spec.E[i] <= spec.E[i - 1], "E must be non-increasing");
  }
  require(std::isfinite(spec.B) && spec.B >= 1, "B must be at least 1");
}

namespace {

// Strict lower and weak upper bounds share the +tolerance shift so dyadic cells stay disjoint.
bool in_cell(const std::vector<double>& lam, const KCellSpec& spec) {
  const int n = static_cast<int>(lam.size());
  for (int i = 0; i < n; ++i) {
    if (i < spec.k) {
      if (!(lam[i] > spec.E[i] / 2 + kRealTolerance && lam[i] <= spec.E[i] + kRealTolerance)) return false;
    } else if (!(lam[i] <= spec.E[spec.k] + kRealTolerance)) {
      return false;
    }
  }
  return true;
}

template <class Fn>
void for_each_cube_point(int n, double B, std::uint64_t budget, Fn&& fn) {
  const std::int64_t m = static_cast<std::int64_t>(std::floor(B));
  Ranges rg{std::vector<std::int64_t>(n, -m), std::vector<std::int64_t>(n, m)};
  if (rg.size() > budget) throw BudgetExceeded("enumeration budget exceeded");
  std::vector<double> xd(n);
  for_each_point(rg, [&](const std::vector<std::int64_t>& x) {
    for (int i = 0; i < n; ++i) xd[i] = static_cast<double>(x[i]);
    fn(xd);
  });
}

}  // namespace

BigInt k_cell_count(const BihomSystem& sys, const KCellSpec& spec, std::uint64_t budget) {
  check_21(sys);
  require(sys.n1() == sys.n2(), "K_k cells need n1 = n2");
  validate(spec, sys.n1());
  std::uint64_t count = 0;
  for_each_cube_point(sys.n1(), spec.B, budget, [&](const std::vector<double>& x) {
    if (in_cell(singular_values(h_tilde(sys, spec.beta, x)).lambda, spec)) ++count;
  });
  return count;
}

std::vector<KCellSpec> dyadic_cell_specs(int n, double B, const PencilWeights& beta) {
  require(n >= 1 && B >= 1, "invalid cell parameters");
  const int emax = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n) * n * B))));
  std::vector<KCellSpec> out;
  out.push_back(KCellSpec{0, {1.0}, B, beta});
  for (int k = 1; k <= n; ++k) {
    std::vector<int> e(k, 1);
    while (true) {
      KCellSpec s{k, {}, B, beta};
      for (int v : e) s.E.push_back(std::ldexp(1.0, v));
      s.E.push_back(1.0);
      out.push_back(std::move(s));
      // Next non-increasing tuple in [1, emax]^k, last coordinate fastest.
      int i = k - 1;
      while (i >= 0 && e[i] == (i == 0 ? emax : e[i - 1])) --i;
      if (i < 0) break;
      ++e[i];
      for (int j = i + 1; j < k; ++j) e[j] = 1;
    }
  }
  return out;
}

TrichotomyReport trichotomy_audit(const BihomSystem& sys, const PencilWeights& beta, double B, std::uint64_t budget) {
  check_21(sys);
  require(sys.n1() == sys.n2(), "trichotomy audit needs n1 = n2");
  require(B >= 2, "trichotomy audit needs B >= 2");
  const int n = sys.n1();
  CountOptions opt;
  opt.budget = budget;
  TrichotomyReport rep;
  rep.aux = count_aux(sys, 2, beta, B, opt);
  const double norm = static_cast<double>(rep.aux) / (std::pow(B, n) * std::pow(std::log(B), n));
  rep.best_ratio = std::numeric_limits<double>::infinity();
  // Tally singular-value profiles once, then evaluate every alternative from the tallies.
  std::vector<std::vector<double>> profiles;
  for_each_cube_point(n, B, budget, [&](const std::vector<double>& x) {
    profiles.push_back(singular_values(h_tilde(sys, beta, x)).lambda);
  });
  auto cell = [&](const KCellSpec& s) {
    std::uint64_t c = 0;
    for (const auto& lam : profiles) c += in_cell(lam, s) ? 1 : 0;
    return c;
  };
  auto consider = [&](const std::string& name, const std::vector<int>& e, std::uint64_t c) {
    if (c == 0) return;
    double w = 1;
    for (int v : e) w *= std::ldexp(1.0, v);
    double ratio = w * norm / static_cast<double>(c);
    if (ratio < rep.best_ratio) {
      rep.best_ratio = ratio;
      rep.best_alternative = name;
      rep.best_exponents = e;
    }
  };
  consider("alt1", {}, cell(KCellSpec{0, {1.0}, B, beta}));
  const int emax = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n) * n * B))));
  for (int k = 1; k <= n; ++k) {
    std::vector<int> e(k, 0);
    while (true) {
      KCellSpec s{k < n ? k : n - 1, {}, B, beta};
      for (int v : e) s.E.push_back(std::ldexp(1.0, v));
      if (k < n) {
        s.E.push_back(1.0);
        consider("alt2", e, cell(s));
      } else {
        consider("alt3", e, cell(s));
      }
      int i = k - 1;
      while (i >= 0 && e[i] == (i == 0 ? emax : e[i - 1])) --i;
      if (i < 0) break;
      ++e[i];
      for (int j = i + 1; j < k; ++j) e[j] = 0;
    }
  }
  return rep;
}

}  // namespace biforms
