#include "biforms/expsums.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace biforms {
namespace {

using i128 = __int128;

struct CMono {
  int r;
  std::vector<int> fixed;  // indices in the fixed block
  std::vector<int> lin;    // indices in the other block
  std::int64_t c;
};

// Monomials split by block; `fixed_block` names the block enumerated explicitly.
std::vector<CMono> split_monos(const BihomSystem& sys, int fixed_block) {
  std::vector<CMono> out;
  for (int r = 0; r < sys.R(); ++r)
    for (const auto& m : sys.form(r))
      out.push_back(CMono{r, fixed_block == 1 ? m.j : m.k, fixed_block == 1 ? m.k : m.j,
                          to_i64(m.coeff, "coefficient")});
  return out;
}

struct IntRanges {
  std::vector<std::int64_t> lo, hi;
  std::uint64_t count() const {
    std::uint64_t c = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (hi[i] < lo[i]) return 0;
      std::uint64_t len = static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
      if (c > kDefaultPointBudget * 1000ULL / len) return UINT64_MAX;
      c *= len;
    }
    return c;
  }
};

IntRanges ranges(const BoxPair& boxes, int block, double P) {
  IntRanges r;
  for (int i = 0; i < static_cast<int>(boxes.block(block).size()); ++i) {
    auto [a, b] = boxes.int_range(block, i, P);
    r.lo.push_back(a);
    r.hi.push_back(b);
  }
  return r;
}

template <class Fn>
void for_each(const IntRanges& rg, Fn&& fn) {
  if (rg.count() == 0) return;
  std::vector<std::int64_t> v(rg.lo);
  const std::size_t n = v.size();
  while (true) {
    fn(v);
    std::size_t i = n;
    bool advanced = false;
    while (i-- > 0) {
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

// Maps integer combinations sum_r alpha_r C_r to phases, exactly modulo 1 for rational alpha.
struct PhaseMap {
  bool exact = false;
  i128 den = 1;
  std::vector<i128> num;
  std::vector<double> real;

  explicit PhaseMap(const Weights& alpha) {
    if (alpha.is_exact()) {
      BigInt d = 1;
      for (const auto& v : alpha.exact_values()) d = boost::multiprecision::lcm(d, BigInt(boost::multiprecision::denominator(v)));
      if (d < BigInt(1) << 40) {
        exact = true;
        den = static_cast<i128>(static_cast<std::int64_t>(d));
        for (const auto& v : alpha.exact_values()) {
          BigInt n = boost::multiprecision::numerator(v * Rational(d)) % d;
          num.push_back(static_cast<i128>(static_cast<std::int64_t>(n)));
        }
      }
    }
    real = alpha.values();
  }

  // Phase of sum_r alpha_r ints[r], reduced to [0,1) when exact.
  double operator()(const std::vector<i128>& ints) const {
    if (exact) {
      i128 acc = 0;
      for (std::size_t r = 0; r < ints.size(); ++r) acc = (acc + (ints[r] % den) * num[r]) % den;
      if (acc < 0) acc += den;
      return static_cast<double>(static_cast<std::int64_t>(acc)) / static_cast<double>(static_cast<std::int64_t>(den));
    }
    double t = 0;
    for (std::size_t r = 0; r < ints.size(); ++r) t += real[r] * static_cast<double>(ints[r]);
    return t;
  }
};

std::complex<double> geometric_sum(double c, std::int64_t lo, std::int64_t hi) {
  ComplexAccumulator acc;
  for (std::int64_t t = lo; t <= hi; ++t) acc.add(expi2pi(c * static_cast<double>(t)));
  return acc.value();
}

}  // namespace

ArcParams::ArcParams(double Delta_, double P1_, double P2_, int d1_, int d2_)
    : Delta(Delta_), P1(P1_), P2(P2_), d1(d1_), d2(d2_) {
  require(std::isfinite(Delta) && Delta > 0, "Delta must be positive");
  require(std::isfinite(P1) && std::isfinite(P2) && P1 > 1 && P2 > 1, "P1, P2 must exceed 1");
  require(d1 >= 1 && d2 >= 1, "bidegree must be positive");
}

double ArcParams::b() const { return std::max(std::log(P1) / std::log(P2), 1.0); }
double ArcParams::u() const { return std::max(std::log(P2) / std::log(P1), 1.0); }
double ArcParams::P() const { return std::pow(P1, d1) * std::pow(P2, d2); }

std::complex<double> weighted_sum(const BihomSystem& sys, const BoxPair& boxes, const Weights& alpha, double P1,
                                  double P2, std::uint64_t term_budget) {
  require(P1 > 1 && P2 > 1, "P1, P2 must exceed 1");
  require(static_cast<int>(alpha.size()) == sys.R(), "alpha length must equal R");
  require(boxes.n1() == sys.n1() && boxes.n2() == sys.n2(), "box dimensions do not match the system");
  IntRanges xr = ranges(boxes, 1, P1), yr = ranges(boxes, 2, P2);
  if (xr.count() == 0 || yr.count() == 0) return {0, 0};
  PhaseMap phase(alpha);
  const int R = sys.R();
  const int fixed_block = sys.d2() == 1 ? 1 : (sys.d1() == 1 ? 2 : 0);
  ComplexAccumulator total;
  if (fixed_block != 0) {
    const IntRanges& fr = fixed_block == 1 ? xr : yr;
    const IntRanges& lr = fixed_block == 1 ? yr : xr;
    std::uint64_t per = 0;
    for (std::size_t j = 0; j < lr.lo.size(); ++j) per += static_cast<std::uint64_t>(lr.hi[j] - lr.lo[j] + 1);
    std::uint64_t nf = fr.count();
    if (nf == UINT64_MAX || static_cast<long double>(nf) * per > term_budget)
      throw BudgetExceeded("exponential sum exceeds the term budget");
    auto monos = split_monos(sys, fixed_block);
    const int nl = static_cast<int>(lr.lo.size());
    std::vector<std::vector<i128>> C(nl, std::vector<i128>(R));
    std::vector<i128> col(R);
    for_each(fr, [&](const std::vector<std::int64_t>& z) {
      for (auto& v : C) std::fill(v.begin(), v.end(), 0);
      for (const auto& m : monos) {
        i128 t = m.c;
        for (int v : m.fixed) t *= z[v];
        C[m.lin[0]][m.r] += t;
      }
      std::complex<double> prod = 1;
      for (int j = 0; j < nl && prod != 0.0; ++j) prod *= geometric_sum(phase(C[j]), lr.lo[j], lr.hi[j]);
      total.add(prod);
    });
    return total.value();
  }
  std::uint64_t nx = xr.count(), ny = yr.count();
  if (nx == UINT64_MAX || ny == UINT64_MAX || static_cast<long double>(nx) * ny > term_budget)
    throw BudgetExceeded("exponential sum exceeds the term budget");
  auto monos = split_monos(sys, 1);
  std::map<std::vector<int>, int> group_of;
  for (const auto& m : monos) group_of.emplace(m.lin, 0);
  std::vector<std::vector<int>> groups;
  for (auto& [k, id] : group_of) {
    id = static_cast<int>(groups.size());
    groups.push_back(k);
  }
  std::vector<int> gidx;
  for (const auto& m : monos) gidx.push_back(group_of[m.lin]);
  const int G = static_cast<int>(groups.size());
  std::vector<std::vector<i128>> coef(G, std::vector<i128>(R));
  std::vector<i128> vals(R);
  for_each(xr, [&](const std::vector<std::int64_t>& x) {
    for (auto& v : coef) std::fill(v.begin(), v.end(), 0);
    for (std::size_t i = 0; i < monos.size(); ++i) {
      i128 t = monos[i].c;
      for (int v : monos[i].fixed) t *= x[v];
      coef[gidx[i]][monos[i].r] += t;
    }
    for_each(yr, [&](const std::vector<std::int64_t>& y) {
      std::fill(vals.begin(), vals.end(), 0);
      for (int g = 0; g < G; ++g) {
        i128 mono = 1;
        for (int v : groups[g]) mono *= y[v];
        for (int r = 0; r < R; ++r) vals[r] += coef[g][r] * mono;
      }
      total.add(expi2pi(phase(vals)));
    });
  });
  return total.value();
}

std::complex<double> complete_sum(const BihomSystem& sys, const std::vector<std::int64_t>& a, std::int64_t q,
                                  std::uint64_t term_budget) {
  require(q >= 1, "q must be positive");
  require(static_cast<int>(a.size()) == sys.R(), "a length must equal R");
  const int R = sys.R();
  std::vector<std::int64_t> ar(R);
  for (int r = 0; r < R; ++r) ar[r] = ((a[r] % q) + q) % q;
  const int fixed_block = sys.d2() == 1 ? 1 : (sys.d1() == 1 ? 2 : 0);
  auto residues = [&](int n) {
    IntRanges rg;
    rg.lo.assign(n, 0);
    rg.hi.assign(n, q - 1);
    return rg;
  };
  if (fixed_block != 0) {
    // Summing the linear block over full residues leaves q^{n_lin} [a.C(z) = 0 mod q].
    const int nf = sys.n(fixed_block), nl = sys.n(3 - fixed_block);
    IntRanges fr = residues(nf);
    std::uint64_t cnt = fr.count();
    if (cnt == UINT64_MAX || cnt > term_budget) throw BudgetExceeded("complete sum exceeds the term budget");
    auto monos = split_monos(sys, fixed_block);
    std::vector<i128> c(nl);
    std::uint64_t hits = 0;
    for_each(fr, [&](const std::vector<std::int64_t>& z) {
      std::fill(c.begin(), c.end(), 0);
      for (const auto& m : monos) {
        i128 t = static_cast<i128>(m.c % q) * ar[m.r] % q;
        for (int v : m.fixed) t = t * z[v] % q;
        c[m.lin[0]] = (c[m.lin[0]] + t) % q;
      }
      for (auto v : c)
        if (v % q != 0) return;
      ++hits;
    });
    return {static_cast<double>(hits) / std::pow(static_cast<double>(q), nf), 0.0};
  }
  const int n = sys.n1() + sys.n2();
  IntRanges all = residues(n);
  std::uint64_t cnt = all.count();
  if (cnt == UINT64_MAX || cnt > term_budget) throw BudgetExceeded("complete sum exceeds the term budget");
  std::vector<std::uint64_t> hist(q, 0);
  for_each(all, [&](const std::vector<std::int64_t>& z) {
    i128 acc = 0;
    for (int r = 0; r < R; ++r) {
      if (ar[r] == 0) continue;
      for (const auto& m : sys.form(r)) {
        i128 t = static_cast<i128>(static_cast<std::int64_t>(m.coeff % q)) * ar[r] % q;
        for (int v : m.j) t = t * z[v] % q;
        for (int v : m.k) t = t * z[sys.n1() + v] % q;
        acc = (acc + t) % q;
      }
    }
    if (acc < 0) acc += q;
    ++hist[static_cast<std::size_t>(acc)];
  });
  ComplexAccumulator s;
  for (std::int64_t k = 0; k < q; ++k)
    if (hist[k]) s.add(static_cast<double>(hist[k]) * expi2pi(static_cast<double>(k) / static_cast<double>(q)));
  return s.value() / std::pow(static_cast<double>(q), n);
}

CubatureResult oscillatory_integral(const BihomSystem& sys, const BoxPair& boxes, const std::vector<double>& gamma,
                                    double tol, std::uint64_t max_evaluations) {
  require(tol > 0, "tolerance must be positive");
  require(static_cast<int>(gamma.size()) == sys.R(), "gamma length must equal R");
  require(boxes.n1() == sys.n1() && boxes.n2() == sys.n2(), "box dimensions do not match the system");
  if (std::all_of(gamma.begin(), gamma.end(), [](double g) { return g == 0.0; })) {
    CubatureResult r;
    r.value = boxes.volume();
    r.converged = true;
    return r;
  }
  auto interval = [&](int b, int i) {
    return std::pair<double, double>{static_cast<double>(boxes.axis(b, i).lo), static_cast<double>(boxes.axis(b, i).hi)};
  };
  const int fixed_block = sys.d2() == 1 ? 1 : (sys.d1() == 1 ? 2 : 0);
  std::vector<double> lo, hi;
  if (fixed_block != 0) {
    const int nf = sys.n(fixed_block), nl = sys.n(3 - fixed_block);
    for (int i = 0; i < nf; ++i) {
      auto [a, b] = interval(fixed_block, i);
      lo.push_back(a);
      hi.push_back(b);
    }
    std::vector<std::pair<double, double>> lin;
    for (int j = 0; j < nl; ++j) lin.push_back(interval(3 - fixed_block, j));
    auto monos = split_monos(sys, fixed_block);
    ComplexIntegrand f = [&, nl](const std::vector<double>& u) {
      std::vector<double> c(nl, 0.0);
      for (const auto& m : monos) {
        double t = gamma[m.r] * static_cast<double>(m.c);
        for (int v : m.fixed) t *= u[v];
        c[m.lin[0]] += t;
      }
      std::complex<double> p = 1;
      for (int j = 0; j < nl; ++j) p *= linear_phase_integral(c[j], lin[j].first, lin[j].second);
      return p;
    };
    return adaptive_cubature(f, lo, hi, tol, max_evaluations);
  }
  for (int b = 1; b <= 2; ++b)
    for (int i = 0; i < sys.n(b); ++i) {
      auto [a, c] = interval(b, i);
      lo.push_back(a);
      hi.push_back(c);
    }
  ComplexIntegrand f = [&](const std::vector<double>& z) {
    double t = 0;
    for (int r = 0; r < sys.R(); ++r)
      for (const auto& m : sys.form(r)) {
        double v = gamma[r] * static_cast<double>(m.coeff);
        for (int i : m.j) v *= z[i];
        for (int k : m.k) v *= z[sys.n1() + k];
        t += v;
      }
    return expi2pi(t);
  };
  return adaptive_cubature(f, lo, hi, tol, max_evaluations);
}

ArcMembership arc_classify(const ArcParams& params, const std::vector<double>& alpha, bool primed) {
  require(!alpha.empty(), "alpha must be nonempty");
  for (double v : alpha) require(v >= 0 && v <= 1, "alpha must lie in [0,1]^R");
  const double P = params.P();
  const double qmax_d = std::floor(std::pow(P, params.Delta) + 1e-9);
  require(qmax_d < 1e7, "P^Delta too large for the witness scan");
  const std::int64_t qmax = static_cast<std::int64_t>(qmax_d);
  const double thr = primed ? std::pow(P, params.Delta - 1)
                            : std::pow(params.P1, -params.d1) * std::pow(params.P2, -params.d2) * std::pow(P, params.Delta);
  const std::size_t R = alpha.size();
  for (std::int64_t q = 1; q <= qmax; ++q) {
    // Admissible numerators per coordinate, ascending.
    std::vector<std::vector<std::int64_t>> cand(R);
    bool any_empty = false;
    for (std::size_t r = 0; r < R; ++r) {
      const double qa = q * alpha[r];
      const double reach = primed ? q * thr : thr / 2;
      std::int64_t lo = static_cast<std::int64_t>(std::floor(qa - reach)) - 1;
      std::int64_t hi = static_cast<std::int64_t>(std::ceil(qa + reach)) + 1;
      lo = std::max<std::int64_t>(lo, 0);
      hi = std::min<std::int64_t>(hi, primed ? q - 1 : q);
      for (std::int64_t a = lo; a <= hi; ++a) {
        bool ok = primed ? std::fabs(alpha[r] - static_cast<double>(a) / q) < thr
                         : 2 * std::fabs(qa - static_cast<double>(a)) < thr;
        if (ok) cand[r].push_back(a);
      }
      if (cand[r].empty()) any_empty = true;
    }
    if (any_empty) continue;
    // Lexicographically smallest tuple with gcd(a, q) = 1.
    std::vector<std::size_t> idx(R, 0);
    while (true) {
      std::int64_t g = q;
      for (std::size_t r = 0; r < R; ++r) g = std::gcd(g, cand[r][idx[r]]);
      if (g == 1) {
        ArcWitness w{{}, q};
        for (std::size_t r = 0; r < R; ++r) w.a.push_back(cand[r][idx[r]]);
        return ArcMembership{ArcKind::Major, w};
      }
      std::size_t i = R;
      bool advanced = false;
      while (i-- > 0) {
        if (++idx[i] < cand[i].size()) {
          advanced = true;
          break;
        }
        idx[i] = 0;
      }
      if (!advanced) break;
    }
  }
  return ArcMembership{};
}

WeylAudit audit_weyl(const BihomSystem& sys, const BoxPair& boxes, const Weights& alpha, double P1, double P2,
                     double eps, const CountOptions& opt) {
  WeylAudit a;
  a.s_abs = std::abs(weighted_sum(sys, boxes, alpha, P1, P2));
  a.m1 = count_M(sys, 1, alpha, P1, P2, 1.0 / P1, opt);
  const int dt = sys.d1() + sys.d2() - 2;
  const double pw = std::ldexp(1.0, dt);
  a.lhs_log = a.s_abs > 0 ? pw * std::log(a.s_abs) : -HUGE_VAL;
  a.rhs_log = (sys.n1() * (pw - sys.d1() + 1) + eps) * std::log(P1) + sys.n2() * (pw - sys.d2()) * std::log(P2) +
              std::log(static_cast<double>(a.m1));
  a.ratio = std::exp(a.lhs_log - a.rhs_log);
  return a;
}

AuxAudit audit_aux_inequality(const BihomSystem& sys, const BoxPair& boxes, const Weights& alpha,
                              const PencilWeights& beta, double P1, double P2, double C_script, double C, double eps) {
  require(P1 >= P2 && P2 > 1, "auxiliary inequality assumes P1 >= P2 > 1");
  require(C_script > 0 && C > 0, "constants must be positive");
  const double norm = std::pow(P1, sys.n1() + eps) * std::pow(P2, sys.n2());
  const double s1 = std::abs(weighted_sum(sys, boxes, alpha, P1, P2));
  const double s2 = std::abs(weighted_sum(sys, boxes, alpha + beta, P1, P2));
  AuxAudit a;
  a.lhs = std::min(s1, s2) / norm;
  const double nb = beta.sup_norm();
  const int dt = sys.d1() + sys.d2() - 2;
  a.base = std::max({1.0 / P2, std::pow(P1, -sys.d1()) * std::pow(P2, -sys.d2()) / nb, std::pow(nb, 1.0 / (dt + 1))});
  a.rhs = C * std::pow(a.base, C_script);
  a.satisfied = a.lhs <= a.rhs;
  a.margin = std::log(a.rhs) - std::log(a.lhs);
  return a;
}

}  // namespace biforms
