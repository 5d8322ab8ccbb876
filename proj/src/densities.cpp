#include "biforms/densities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/random/sobol.hpp>

#include "biforms/expsums.hpp"
#include "biforms/modp.hpp"
#include "biforms/quadrature.hpp"

namespace biforms {

std::string to_string(DensityMethod m) {
  switch (m) {
    case DensityMethod::ResidueCount: return "residue-count";
    case DensityMethod::HenselStabilized: return "hensel-stabilized";
    case DensityMethod::EulerProduct: return "euler-product";
    case DensityMethod::QSeries: return "qseries";
    case DensityMethod::Quadrature: return "quadrature";
    case DensityMethod::SlabMeasureMC: return "slab-measure-mc";
    case DensityMethod::Product: return "product";
  }
  return "unknown";
}

namespace {

BigInt bpow(std::uint64_t p, long e) {
  BigInt r = 1;
  for (long i = 0; i < e; ++i) r *= p;
  return r;
}

std::int64_t checked_pow(std::uint64_t p, int k) {
  i128 r = 1;
  for (int i = 0; i < k; ++i) {
    r *= p;
    if (r >= (static_cast<i128>(1) << 62)) throw BudgetExceeded("p^k exceeds the modular arithmetic range");
  }
  return static_cast<std::int64_t>(r);
}

class Budget {
 public:
  explicit Budget(std::uint64_t limit) : limit_(limit) {}
  void charge(long double n) {
    used_ += n;
    if (used_ > static_cast<long double>(limit_)) throw BudgetExceeded("p-adic enumeration exceeds the point budget");
  }

 private:
  std::uint64_t limit_;
  long double used_ = 0;
};

bool all_zero(const std::vector<std::int64_t>& v, std::size_t lo, std::size_t hi) {
  for (std::size_t i = lo; i < hi; ++i)
    if (v[i] != 0) return false;
  return true;
}

// Zeros mod p^k, split by the valuations of x and y. Primitive zeros that are
// nonsingular mod p lift in closed form; singular ones are refined one level at a time.
class HenselCounter {
 public:
  HenselCounter(const FlatSystem& f, std::uint64_t p, std::uint64_t budget) : f_(f), p_(p), budget_(budget) {
    classify();
    sing_counts_.push_back(BigInt(nodes_.size()));
  }

  BigInt count(int k) {
    const int n1 = f_.n1, n2 = f_.n2;
    auto nvals = [&](int n, int a) { return a < k ? bpow(p_, long(n) * (k - a)) - bpow(p_, long(n) * (k - a - 1)) : BigInt(1); };
    BigInt total = 0;
    for (int a = 0; a <= k; ++a)
      for (int b = 0; b <= k; ++b) {
        if (a == k || b == k) {
          total += nvals(n1, a) * nvals(n2, b);
          continue;
        }
        const int m = k - a * f_.d1 - b * f_.d2;
        if (m <= 0) total += nvals(n1, a) * nvals(n2, b);
        else total += nprim(m) * bpow(p_, long(n1) * (k - a - m)) * bpow(p_, long(n2) * (k - b - m));
      }
    return total;
  }

 private:
  // Primitive zeros mod p^m (x and y both nonzero mod p).
  BigInt nprim(int m) { return ns_ * bpow(p_, long(m - 1) * (f_.n - f_.R)) + sing(m); }

  BigInt sing(int m) {
    while (static_cast<int>(sing_counts_.size()) < m) {
      const int next = static_cast<int>(sing_counts_.size()) + 1;
      while (node_level_ < next - 1) materialize();
      sing_counts_.push_back(count_children());
    }
    return sing_counts_[m - 1];
  }

  ModSolve lift_step(const std::vector<std::int64_t>& z) const {
    const std::int64_t pj = checked_pow(p_, node_level_);
    const std::int64_t pj1 = checked_pow(p_, node_level_ + 1);
    auto F = eval_mod(f_, z, pj1);
    std::vector<std::int64_t> b(f_.R);
    for (int r = 0; r < f_.R; ++r) b[r] = mod_reduce(-(F[r] / pj), p_);
    return solve_mod_p(jacobian_mod(f_, z, p_), b, p_, f_.n);
  }

  BigInt count_children() {
    BigInt c = 0;
    for (const auto& z : nodes_) {
      auto s = lift_step(z);
      if (s.consistent) c += bpow(p_, f_.n - s.rank);
    }
    return c;
  }

  void materialize() {
    const std::int64_t pj = checked_pow(p_, node_level_);
    std::vector<std::vector<std::int64_t>> next;
    for (const auto& z : nodes_) {
      auto s = lift_step(z);
      if (!s.consistent) continue;
      const int dim = static_cast<int>(s.kernel.size());
      budget_.charge(std::pow(static_cast<long double>(p_), dim));
      for_each_residue(dim, p_, [&](const std::vector<std::int64_t>& c) {
        std::vector<std::int64_t> child(z);
        for (int i = 0; i < f_.n; ++i) {
          i128 t = s.particular[i];
          for (int d = 0; d < dim; ++d) t += static_cast<i128>(c[d]) * s.kernel[d][i];
          child[i] = mod_reduce(child[i] + mod_reduce(t, p_) * static_cast<i128>(pj), pj * p_);
        }
        next.push_back(std::move(child));
        return true;
      });
    }
    nodes_ = std::move(next);
    ++node_level_;
  }

  void record(const std::vector<std::int64_t>& z) {
    if (rank_mod_p(jacobian_mod(f_, z, p_), p_, f_.n) == f_.R) ns_ += 1;
    else nodes_.push_back(z);
  }

  void classify() {
    const std::int64_t p = static_cast<std::int64_t>(p_);
    const int L = f_.linear_block();
    if (L == 0) {
      budget_.charge(std::pow(static_cast<long double>(p), f_.n));
      for_each_residue(f_.n, p, [&](const std::vector<std::int64_t>& z) {
        if (all_zero(z, 0, f_.n1) || all_zero(z, f_.n1, f_.n)) return true;
        auto F = eval_mod(f_, z, p);
        if (all_zero(F, 0, F.size())) record(z);
        return true;
      });
      return;
    }
    const int nF = L == 2 ? f_.n1 : f_.n2, nL = L == 2 ? f_.n2 : f_.n1;
    budget_.charge(std::pow(static_cast<long double>(p), nF));
    const BigInt full_row = bpow(p_, nL - 1) - 1;
    for_each_residue(nF, p, [&](const std::vector<std::int64_t>& zf) {
      if (all_zero(zf, 0, zf.size())) return true;
      auto M = linear_block_matrix(f_, L, zf, p);
      // One form: rank 1 exactly when the row is nonzero.
      if (f_.R == 1 && !all_zero(M[0], 0, M[0].size())) {
        ns_ += full_row;
        return true;
      }
      auto s = solve_mod_p(std::move(M), {}, p, nL);
      const int dim = static_cast<int>(s.kernel.size());
      if (s.rank == f_.R) {
        ns_ += bpow(p_, dim) - 1;
        return true;
      }
      budget_.charge(std::pow(static_cast<long double>(p), dim));
      for_each_residue(dim, p, [&](const std::vector<std::int64_t>& c) {
        std::vector<std::int64_t> zl(nL, 0);
        for (int d = 0; d < dim; ++d)
          for (int i = 0; i < nL; ++i) zl[i] = mod_reduce(zl[i] + static_cast<i128>(c[d]) * s.kernel[d][i], p);
        if (all_zero(zl, 0, zl.size())) return true;
        std::vector<std::int64_t> z;
        const auto& x = L == 2 ? zf : zl;
        const auto& y = L == 2 ? zl : zf;
        z.insert(z.end(), x.begin(), x.end());
        z.insert(z.end(), y.begin(), y.end());
        record(z);
        return true;
      });
      return true;
    });
  }

  const FlatSystem& f_;
  std::uint64_t p_;
  Budget budget_;
  BigInt ns_ = 0;
  std::vector<std::vector<std::int64_t>> nodes_;
  int node_level_ = 1;
  std::vector<BigInt> sing_counts_;
};

BigInt residue_count(const FlatSystem& f, std::uint64_t p, int k, std::uint64_t budget) {
  const std::int64_t pk = checked_pow(p, k);
  const int L = f.linear_block();
  if (L == 0) {
    if (std::pow(static_cast<long double>(pk), f.n) > budget)
      throw BudgetExceeded("residue enumeration exceeds the point budget");
    std::uint64_t c = 0;
    for_each_residue(f.n, pk, [&](const std::vector<std::int64_t>& z) {
      auto F = eval_mod(f, z, pk);
      if (all_zero(F, 0, F.size())) ++c;
      return true;
    });
    return BigInt(c);
  }
  const int nF = L == 2 ? f.n1 : f.n2, nL = L == 2 ? f.n2 : f.n1;
  if (std::pow(static_cast<long double>(pk), nF) > budget)
    throw BudgetExceeded("residue enumeration exceeds the point budget");
  // Solutions of the linear block come in p-power counts; histogram the exponents.
  std::vector<std::uint64_t> hist(static_cast<std::size_t>(k) * nL + 1, 0);
  for_each_residue(nF, pk, [&](const std::vector<std::int64_t>& zf) {
    int d = smith_deficit(linear_block_matrix(f, L, zf, pk), static_cast<std::int64_t>(p), k, nL);
    ++hist[static_cast<std::size_t>(k * nL - d)];
    return true;
  });
  BigInt total = 0;
  for (std::size_t e = 0; e < hist.size(); ++e)
    if (hist[e]) total += BigInt(hist[e]) * bpow(p, static_cast<long>(e));
  return total;
}

Rational normalise(const BigInt& count, std::uint64_t p, int k, int n, int R) {
  const long e = static_cast<long>(k) * (n - R);
  return e >= 0 ? Rational(count) / Rational(bpow(p, e)) : Rational(count * bpow(p, -e));
}

std::vector<std::uint64_t> primes_upto(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  std::vector<bool> comp(n + 1, false);
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (comp[i]) continue;
    out.push_back(i);
    for (std::uint64_t j = i * i; j <= n; j += i) comp[j] = true;
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Coefficients c_{r,j}(u) of the linear block at real values u of the other block.
struct LinearCoeffs {
  struct Term {
    int r, col;
    std::vector<int> fixed;
    double c;
  };
  int L = 0, nF = 0, nL = 0, R = 0;
  std::vector<Term> terms;

  LinearCoeffs(const BihomSystem& sys, int L_) : L(L_), R(sys.R()) {
    nF = sys.n(3 - L);
    nL = sys.n(L);
    for (int r = 0; r < R; ++r)
      for (const auto& m : sys.form(r)) {
        const auto& lin = L == 2 ? m.k : m.j;
        const auto& fix = L == 2 ? m.j : m.k;
        terms.push_back(Term{r, lin[0], fix, static_cast<double>(m.coeff)});
      }
  }
  // out[r * nL + j]
  void eval(const double* u, std::vector<double>& out) const {
    out.assign(static_cast<std::size_t>(R) * nL, 0.0);
    for (const auto& t : terms) {
      double v = t.c;
      for (int i : t.fixed) v *= u[i];
      out[static_cast<std::size_t>(t.r) * nL + t.col] += v;
    }
  }
};

double real_eval(const BihomSystem& sys, int r, const std::vector<double>& z) {
  double s = 0;
  for (const auto& m : sys.form(r)) {
    double v = static_cast<double>(m.coeff);
    for (int i : m.j) v *= z[i];
    for (int k : m.k) v *= z[sys.n1() + k];
    s += v;
  }
  return s;
}

std::pair<double, double> axis_d(const BoxPair& boxes, int b, int i) {
  return {static_cast<double>(boxes.axis(b, i).lo), static_cast<double>(boxes.axis(b, i).hi)};
}

double block_volume(const BoxPair& boxes, int b) {
  double v = 1;
  for (int i = 0; i < static_cast<int>(boxes.block(b).size()); ++i) {
    auto [lo, hi] = axis_d(boxes, b, i);
    v *= hi - lo;
  }
  return v;
}

// Fitted power decay |S_inf(gamma)| ~ c |gamma|^-kappa from samples in [G/4, G]; returns the tail
// mass outside the cube of half-side G, or +inf when the fit does not decay fast enough.
double gamma_tail(const BihomSystem& sys, const BoxPair& boxes, double G, std::uint64_t max_evals) {
  const int R = sys.R();
  std::vector<std::vector<double>> dirs;
  for (int r = 0; r < R; ++r) {
    std::vector<double> e(R, 0.0);
    e[r] = 1;
    dirs.push_back(e);
  }
  if (R > 1) dirs.emplace_back(R, 1.0);
  std::vector<double> lx, ly, mags, norms;
  const double tol = 1e-5 * boxes.volume();
  for (const auto& d : dirs)
    for (int i = 0; i <= 4; ++i) {
      const double g = G * std::pow(2.0, -0.5 * i);
      std::vector<double> gamma(R);
      for (int r = 0; r < R; ++r) gamma[r] = g * d[r];
      double s = std::abs(oscillatory_integral(sys, boxes, gamma, tol, max_evals).value);
      s = std::max(s, tol);
      lx.push_back(std::log(g));
      ly.push_back(std::log(s));
      mags.push_back(s);
      norms.push_back(g);
    }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  const double kappa = -sxy / sxx;
  if (!(kappa > R + 0.05)) return std::numeric_limits<double>::infinity();
  double c = 0;
  for (std::size_t i = 0; i < mags.size(); ++i) c = std::max(c, mags[i] * std::pow(norms[i], kappa));
  return c * R * std::ldexp(1.0, R) * std::pow(G, R - kappa) / (kappa - R);
}

DensityEstimate gamma_integral(const BihomSystem& sys, const BoxPair& boxes, const IntegralLevel& lv) {
  require(lv.gamma_max >= 0 && std::isfinite(lv.gamma_max), "gamma_max must be finite and nonnegative");
  require(lv.tol > 0, "tolerance must be positive");
  DensityEstimate est;
  est.method = DensityMethod::Quadrature;
  est.level = "gamma_max=" + fmt(lv.gamma_max);
  if (lv.gamma_max == 0) return est;
  const int R = sys.R();
  const double G = lv.gamma_max;
  const double abs_tol = lv.tol * boxes.volume();
  // S_inf(-gamma) = conj S_inf(gamma): integrate the half cube gamma_1 >= 0 and double the real part.
  std::vector<double> lo(R, -G), hi(R, G);
  lo[0] = 0;
  const double cube = std::pow(2 * G, R);
  const double in_tol = 0.1 * abs_tol / cube;
  double inner_err = 0;
  ComplexIntegrand f = [&](const std::vector<double>& gam) {
    auto r = oscillatory_integral(sys, boxes, gam, in_tol, lv.max_evaluations);
    inner_err = std::max(inner_err, 2 * r.error);
    return std::complex<double>(2 * r.value.real(), 0.0);
  };
  CubatureResult outer = adaptive_cubature(f, lo, hi, abs_tol, lv.max_evaluations);
  if (!outer.converged) throw BudgetExceeded("singular integral quadrature did not reach the tolerance");
  const double tail = gamma_tail(sys, boxes, G, lv.max_evaluations);
  est.value = outer.value.real();
  est.error_bound = outer.error + inner_err * cube / 2 + tail;
  est.level += "; tail=" + fmt(tail);
  return est;
}

DensityEstimate slab_integral(const BihomSystem& sys, const BoxPair& boxes, const IntegralLevel& lv) {
  require(lv.P > 1 && std::isfinite(lv.P), "slab scale P must exceed 1");
  require(lv.replicates >= 2, "at least two replicates are required");
  require(lv.samples >= static_cast<std::uint64_t>(lv.replicates), "samples must cover every replicate");
  const int R = sys.R();
  const double eps = std::pow(lv.P, -(sys.d1() + sys.d2()));
  const int L = sys.d2() == 1 ? 2 : (sys.d1() == 1 ? 1 : 0);
  const int n = sys.n1() + sys.n2();
  const int dims = L != 0 ? n - R : n;
  require(dims >= 1 || L != 0, "slab dimension must be positive");
  const std::uint64_t per = lv.samples / lv.replicates;
  std::mt19937_64 rng(lv.seed);
  std::vector<double> means;
  std::optional<LinearCoeffs> lc;
  if (L != 0) lc.emplace(sys, L);
  std::vector<std::pair<double, double>> fix_ax, lin_ax;
  if (L != 0) {
    for (int i = 0; i < lc->nF; ++i) fix_ax.push_back(axis_d(boxes, 3 - L, i));
    for (int j = 0; j < lc->nL; ++j) lin_ax.push_back(axis_d(boxes, L, j));
  }
  const double volF = L != 0 ? block_volume(boxes, 3 - L) : boxes.volume();
  std::vector<double> u(std::max(dims, 1)), c, zf, y;
  for (int rep = 0; rep < lv.replicates; ++rep) {
    std::vector<std::uint32_t> shift(std::max(dims, 1));
    for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
    boost::random::sobol_engine<std::uint32_t, 32> gen(std::max(dims, 1));
    double acc = 0;
    for (std::uint64_t s = 0; s < per; ++s) {
      for (int i = 0; i < std::max(dims, 1); ++i) u[i] = ((gen() ^ shift[i]) + 0.5) * 0x1p-32;
      double val = 0;
      if (L == 0) {
        std::vector<double> z(n);
        int idx = 0;
        for (int b = 1; b <= 2; ++b)
          for (int i = 0; i < sys.n(b); ++i, ++idx) {
            auto [a, h] = axis_d(boxes, b, i);
            z[idx] = a + (h - a) * u[idx];
          }
        bool in = true;
        for (int r = 0; r < R && in; ++r) in = std::fabs(real_eval(sys, r, z)) <= eps / 2;
        val = in ? volF / std::pow(eps, R) : 0.0;
      } else {
        zf.resize(lc->nF);
        for (int i = 0; i < lc->nF; ++i) zf[i] = fix_ax[i].first + (fix_ax[i].second - fix_ax[i].first) * u[i];
        lc->eval(zf.data(), c);
        const int nL = lc->nL;
        if (R == 1) {
          int js = 0;
          for (int j = 1; j < nL; ++j)
            if (std::fabs(c[j]) > std::fabs(c[js])) js = j;
          if (c[js] != 0) {
            double sres = 0, vol_rest = 1;
            int q = lc->nF;
            for (int j = 0; j < nL; ++j) {
              if (j == js) continue;
              const double yj = lin_ax[j].first + (lin_ax[j].second - lin_ax[j].first) * u[q++];
              sres += c[j] * yj;
              vol_rest *= lin_ax[j].second - lin_ax[j].first;
            }
            double t1 = (-eps / 2 - sres) / c[js], t2 = (eps / 2 - sres) / c[js];
            if (t1 > t2) std::swap(t1, t2);
            const double len = std::max(0.0, std::min(t2, lin_ax[js].second) - std::max(t1, lin_ax[js].first));
            val = volF * vol_rest * len / eps;
          }
        } else {
          // Exact coarea weight: the R pivot coordinates solve the system, weight 1/|det|.
          Eigen::MatrixXd C(R, nL);
          for (int r = 0; r < R; ++r)
            for (int j = 0; j < nL; ++j) C(r, j) = c[static_cast<std::size_t>(r) * nL + j];
          Eigen::FullPivLU<Eigen::MatrixXd> lu(C);
          if (lu.rank() == R) {
            std::vector<int> piv;
            Eigen::VectorXi perm = lu.permutationQ().indices();
            for (int r = 0; r < R; ++r) piv.push_back(perm(r));
            std::vector<bool> is_piv(nL, false);
            for (int j : piv) is_piv[j] = true;
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(R);
            double vol_rest = 1;
            int q = lc->nF;
            for (int j = 0; j < nL; ++j) {
              if (is_piv[j]) continue;
              const double yj = lin_ax[j].first + (lin_ax[j].second - lin_ax[j].first) * u[q++];
              rhs -= C.col(j) * yj;
              vol_rest *= lin_ax[j].second - lin_ax[j].first;
            }
            Eigen::MatrixXd CS(R, R);
            for (int r = 0; r < R; ++r) CS.col(r) = C.col(piv[r]);
            Eigen::VectorXd ys = CS.partialPivLu().solve(rhs);
            bool in = true;
            for (int r = 0; r < R && in; ++r) in = ys(r) >= lin_ax[piv[r]].first && ys(r) <= lin_ax[piv[r]].second;
            if (in) val = volF * vol_rest / std::fabs(CS.determinant());
          }
        }
      }
      acc += val;
    }
    means.push_back(acc / static_cast<double>(per));
  }
  double mean = 0;
  for (double m : means) mean += m / means.size();
  double var = 0;
  for (double m : means) var += (m - mean) * (m - mean) / (means.size() - 1);
  DensityEstimate est;
  est.method = DensityMethod::SlabMeasureMC;
  est.value = mean;
  est.error_bound = 3 * std::sqrt(var / means.size());
  est.level = "P=" + fmt(lv.P) + "; samples=" + std::to_string(per * lv.replicates) + "; replicates=" +
              std::to_string(lv.replicates);
  est.seed = lv.seed;
  return est;
}

}  // namespace

BigInt padic_count(const BihomSystem& sys, std::uint64_t p, int k, DensityMethod method, std::uint64_t budget) {
  require(is_prime(p), "p must be prime");
  require(k >= 1, "k must be positive");
  const FlatSystem f = flatten(sys);
  if (method == DensityMethod::ResidueCount) return residue_count(f, p, k, budget);
  require(method == DensityMethod::HenselStabilized, "p-adic method must be residue-count or hensel-stabilized");
  checked_pow(p, k);
  HenselCounter hc(f, p, budget);
  return hc.count(k);
}

DensityEstimate padic_density(const BihomSystem& sys, std::uint64_t p, int k, DensityMethod method,
                              std::uint64_t budget) {
  Rational v = normalise(padic_count(sys, p, k, method, budget), p, k, sys.n1() + sys.n2(), sys.R());
  DensityEstimate est;
  est.value = static_cast<double>(v);
  est.method = method;
  est.level = "p=" + std::to_string(p) + "; k=" + std::to_string(k);
  est.exact = v;
  return est;
}

std::vector<LocalFactor> local_factors(const BihomSystem& sys, std::uint64_t pmax, double threshold, int kmax,
                                       std::uint64_t budget) {
  require(kmax >= 1, "kmax must be positive");
  require(threshold > 0, "threshold must be positive");
  const FlatSystem f = flatten(sys);
  const int n = f.n, R = f.R;
  std::vector<LocalFactor> out;
  for (std::uint64_t p : primes_upto(pmax)) {
    HenselCounter hc(f, p, budget);
    LocalFactor lf{p, 1, static_cast<double>(normalise(hc.count(1), p, 1, n, R)), 0.0, true};
    for (int k = 2; k <= kmax; ++k) {
      double v;
      try {
        checked_pow(p, k + 1);
        v = static_cast<double>(normalise(hc.count(k), p, k, n, R));
      } catch (const BudgetExceeded&) {
        break;
      }
      lf.increment = std::fabs(v - lf.value);
      lf.value = v;
      lf.k = k;
      if (lf.increment < threshold) {
        lf.capped = false;
        break;
      }
    }
    out.push_back(lf);
  }
  return out;
}

double complete_sum_total(const BihomSystem& sys, std::uint64_t q, std::uint64_t budget) {
  require(q >= 2, "q must be a prime power");
  std::uint64_t p = 2;
  while (q % p != 0) ++p;
  std::uint64_t t = q;
  while (t % p == 0) t /= p;
  require(t == 1, "q must be a prime power");
  const int R = sys.R();
  const std::int64_t qi = static_cast<std::int64_t>(q);
  const int L = sys.d2() == 1 ? 2 : (sys.d1() == 1 ? 1 : 0);
  double total = 0;
  if (L != 0) {
    // S_{a,q} is a normalised solution count, invariant under a -> u a for units u; each
    // primitive orbit has phi(q) elements and a canonical member whose first unit entry is 1.
    const int nF = sys.n(3 - L);
    const long double classes =
        (std::pow(static_cast<long double>(q), R) - std::pow(static_cast<long double>(q / p), R)) / (q - q / p);
    if (classes * std::pow(static_cast<long double>(q), nF) > budget)
      throw BudgetExceeded("complete sums exceed the term budget");
    for (int lead = 0; lead < R; ++lead) {
      const std::int64_t per_mult = qi / static_cast<std::int64_t>(p);
      for_each_residue(lead, per_mult, [&](const std::vector<std::int64_t>& head) {
        for_each_residue(R - lead - 1, qi, [&](const std::vector<std::int64_t>& tail) {
          std::vector<std::int64_t> a;
          for (auto h : head) a.push_back(h * static_cast<std::int64_t>(p));
          a.push_back(1);
          a.insert(a.end(), tail.begin(), tail.end());
          total += complete_sum(sys, a, qi, budget).real();
          return true;
        });
        return true;
      });
    }
    return total * static_cast<double>(q - q / p);
  }
  if (std::pow(static_cast<long double>(q), R + sys.n1() + sys.n2()) > budget)
    throw BudgetExceeded("complete sums exceed the term budget");
  for_each_residue(R, qi, [&](const std::vector<std::int64_t>& a) {
    bool prim = false;
    for (auto v : a) prim = prim || v % static_cast<std::int64_t>(p) != 0;
    if (prim) total += complete_sum(sys, a, qi, budget).real();
    return true;
  });
  return total;
}

DensityEstimate singular_series(const BihomSystem& sys, double Q, SeriesVariant variant, std::uint64_t budget) {
  require(std::isfinite(Q) && Q >= 1, "Q must be at least 1");
  const std::uint64_t Qi = static_cast<std::uint64_t>(std::floor(Q));
  const auto primes = primes_upto(Qi);
  DensityEstimate est;
  if (variant == SeriesVariant::Euler) {
    est.method = DensityMethod::EulerProduct;
    auto fac = local_factors(sys, Qi, 1e-6, 12, budget);
    double prod = 1, inc = 0, c = 0;
    for (const auto& lf : fac) {
      prod *= lf.value;
      if (lf.value != 0) inc += lf.increment / lf.value;
      if (2 * lf.p > Qi) c = std::max(c, std::fabs(lf.value - 1) * double(lf.p) * double(lf.p));
    }
    // Heuristic tail: sum over p > Q of c p^-2 ~ c / (Q log Q).
    const double tail = Qi >= 2 ? c / (double(Qi) * std::log(double(Qi))) : 0.0;
    est.value = prod;
    est.error_bound = prod == 0 ? 0.0 : std::fabs(prod) * (std::exp(tail + inc) - 1);
    est.level = "p_max=" + std::to_string(Qi) + "; k<=12 adaptive";
    return est;
  }
  est.method = DensityMethod::QSeries;
  est.level = "Q=" + std::to_string(Qi);
  std::vector<double> A(Qi + 1, 0.0);
  std::vector<std::uint64_t> spf(Qi + 1, 0);
  for (std::uint64_t p : primes)
    for (std::uint64_t m = p; m <= Qi; m += p)
      if (!spf[m]) spf[m] = p;
  for (std::uint64_t p : primes)
    for (std::uint64_t q = p; q <= Qi; q *= p) A[q] = complete_sum_total(sys, q, budget);
  std::vector<double> partial(Qi + 1, 0.0);
  partial[1] = 1.0;
  for (std::uint64_t q = 2; q <= Qi; ++q) {
    std::uint64_t p = spf[q], pk = 1, m = q;
    while (m % p == 0) {
      m /= p;
      pk *= p;
    }
    if (m > 1) A[q] = A[pk] * A[m];  // A is multiplicative
    partial[q] = partial[q - 1] + A[q];
  }
  const double total = partial[Qi];
  // Heuristic tail from the partial sums at Q/8, Q/4, Q/2, Q: the worst ratio of successive
  // doubling increments rho, summed as a geometric series and doubled.
  double tail = std::numeric_limits<double>::infinity();
  if (Qi >= 8) {
    const double D0 = partial[Qi] - partial[Qi / 2], D1 = partial[Qi / 2] - partial[Qi / 4],
                 D2 = partial[Qi / 4] - partial[Qi / 8];
    if (D0 == 0 && D1 == 0) {
      tail = 0;
    } else if (D1 != 0 && D2 != 0) {
      const double rho = std::max(std::fabs(D0 / D1), std::fabs(D1 / D2));
      if (rho < 1) tail = 2 * std::fabs(D0) * rho / (1 - rho);
    }
  }
  est.value = total;
  est.error_bound = tail;
  return est;
}

DensityEstimate singular_integral(const BihomSystem& sys, const BoxPair& boxes, IntegralVariant variant,
                                  const IntegralLevel& level) {
  require(boxes.n1() == sys.n1() && boxes.n2() == sys.n2(), "box dimensions do not match the system");
  return variant == IntegralVariant::Gamma ? gamma_integral(sys, boxes, level) : slab_integral(sys, boxes, level);
}

PadicZero smooth_padic_zero(const BihomSystem& sys, std::uint64_t p, int depth, std::uint64_t budget) {
  require(is_prime(p), "p must be prime");
  require(depth >= 1, "depth must be positive");
  const FlatSystem f = flatten(sys);
  const std::int64_t pd = checked_pow(p, depth);
  const std::int64_t pi = static_cast<std::int64_t>(p);
  if (std::pow(static_cast<long double>(p), f.n) > budget) throw BudgetExceeded("local zero search exceeds the budget");
  PadicZero out;
  out.depth = depth;
  out.modulus = static_cast<std::uint64_t>(pd);
  std::vector<std::int64_t> hit;
  // Prefer zeros with both blocks nonzero; fall back to any smooth zero.
  for (int pass = 0; pass < 2 && hit.empty(); ++pass)
    for_each_residue(f.n, pi, [&](const std::vector<std::int64_t>& z) {
      const bool both = !all_zero(z, 0, f.n1) && !all_zero(z, f.n1, f.n);
      if (pass == 0 && !both) return true;
      if (pass == 1 && both) return true;
      if (!all_zero(eval_mod(f, z, pi), 0, f.R)) return true;
      if (rank_mod_p(jacobian_mod(f, z, pi), pi, f.n) != f.R) return true;
      hit = z;
      return false;
    });
  if (hit.empty()) return out;
  std::int64_t pj = pi;
  for (int j = 1; j < depth; ++j) {
    auto F = eval_mod(f, hit, pj * pi);
    std::vector<std::int64_t> b(f.R);
    for (int r = 0; r < f.R; ++r) b[r] = mod_reduce(-(F[r] / pj), pi);
    auto s = solve_mod_p(jacobian_mod(f, hit, pi), b, pi, f.n);
    for (int i = 0; i < f.n; ++i) hit[i] = mod_reduce(hit[i] + static_cast<i128>(s.particular[i]) * pj, pj * pi);
    pj *= pi;
  }
  out.found = true;
  out.x.assign(hit.begin(), hit.begin() + f.n1);
  out.y.assign(hit.begin() + f.n1, hit.end());
  return out;
}

RealZero smooth_real_zero(const BihomSystem& sys, const BoxPair& boxes, int starts) {
  require(starts >= 1, "starts must be positive");
  const int n = sys.n1() + sys.n2(), R = sys.R();
  std::vector<double> lo, hi;
  for (int b = 1; b <= 2; ++b)
    for (int i = 0; i < sys.n(b); ++i) {
      auto [a, h] = axis_d(boxes, b, i);
      lo.push_back(a);
      hi.push_back(h);
    }
  auto residual = [&](const std::vector<double>& z) {
    Eigen::VectorXd F(R);
    for (int r = 0; r < R; ++r) F(r) = real_eval(sys, r, z);
    return F;
  };
  auto jacobian = [&](const std::vector<double>& z) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(R, n);
    for (int r = 0; r < R; ++r)
      for (const auto& m : sys.form(r)) {
        std::vector<int> vars(m.j);
        for (int k : m.k) vars.push_back(sys.n1() + k);
        for (std::size_t pos = 0; pos < vars.size(); ++pos) {
          double v = static_cast<double>(m.coeff);
          for (std::size_t o = 0; o < vars.size(); ++o)
            if (o != pos) v *= z[vars[o]];
          J(r, vars[pos]) += v;
        }
      }
    return J;
  };
  boost::random::sobol_engine<std::uint32_t, 32> gen(n);
  RealZero out;
  for (int s = 0; s < starts; ++s) {
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = lo[i] + (hi[i] - lo[i]) * ((gen() + 0.5) * 0x1p-32);
    Eigen::VectorXd F = residual(z);
    for (int it = 0; it < 100 && F.lpNorm<Eigen::Infinity>() > 1e-14; ++it) {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian(z), Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::VectorXd step = svd.solve(-F);
      double t = 1;
      bool improved = false;
      for (int h = 0; h < 30; ++h, t /= 2) {
        std::vector<double> w(z);
        for (int i = 0; i < n; ++i) w[i] = std::clamp(z[i] + t * step(i), lo[i], hi[i]);
        Eigen::VectorXd Fw = residual(w);
        if (Fw.norm() < F.norm()) {
          z = w;
          F = Fw;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    const double res = F.lpNorm<Eigen::Infinity>();
    if (!(res < 1e-10)) continue;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian(z));
    const double smin = svd.singularValues()(std::min(R, n) - 1);
    if (R > n || !(smin > 1e-6)) continue;
    out.found = true;
    out.x.assign(z.begin(), z.begin() + sys.n1());
    out.y.assign(z.begin() + sys.n1(), z.end());
    out.residual = res;
    out.sigma_min = smin;
    return out;
  }
  return out;
}

DensityEstimate product_estimate(const DensityEstimate& a, const DensityEstimate& b) {
  DensityEstimate e;
  e.value = a.value * b.value;
  // An exact zero factor (0 +- 0) annihilates even an unbounded partner.
  auto term = [](double v, double err) { return v == 0 ? 0.0 : std::fabs(v) * err; };
  e.error_bound = term(a.value, b.error_bound) + term(b.value, a.error_bound);
  if ((a.value == 0 && a.error_bound == 0) || (b.value == 0 && b.error_bound == 0)) e.error_bound = 0;
  e.method = DensityMethod::Product;
  e.level = a.level + " | " + b.level;
  e.seed = b.seed ? b.seed : a.seed;
  return e;
}

SigmaResult sigma_factor(const BihomSystem& sys, const BoxPair& boxes, const SigmaOptions& opt) {
  SigmaResult res;
  res.series = singular_series(sys, static_cast<double>(opt.pmax), SeriesVariant::Euler, opt.budget);
  res.integral = singular_integral(sys, boxes, opt.integral_variant, opt.integral);
  res.sigma = product_estimate(res.series, res.integral);
  if (opt.probe_local_zeros) {
    try {
      bool all = smooth_real_zero(sys, boxes).found;
      for (std::uint64_t p : opt.probe_primes) all = all && smooth_padic_zero(sys, p, 1, opt.budget).found;
      res.positivity_expected = all;
    } catch (const BudgetExceeded&) {
    }
  }
  return res;
}

}  // namespace biforms
