#include "biforms/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "biforms/core.hpp"

namespace biforms {
namespace {

// Symmetric 1D Gauss-Kronrod rule on [-1,1]; Gauss weights are zero off the Gauss nodes.
struct Rule {
  std::vector<double> x, wk, wg;
};

Rule make_gk15() {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using GL = boost::math::quadrature::gauss<double, 7>;
  const auto& ax = GK::abscissa();
  const auto& aw = GK::weights();
  const auto& gw = GL::weights();
  Rule r;
  // Kronrod abscissae at even positions of ax coincide with the Gauss nodes.
  for (int i = static_cast<int>(ax.size()) - 1; i >= 0; --i) {
    for (int s : {-1, 1}) {
      if (i == 0 && s == 1) continue;
      r.x.push_back(s * ax[i]);
      r.wk.push_back(aw[i]);
      r.wg.push_back(i % 2 == 0 ? gw[i / 2] : 0.0);
    }
  }
  return r;
}

struct Region {
  std::vector<double> lo, hi;
  std::complex<double> value;
  double error;
  std::size_t split_axis;
  bool operator<(const Region& o) const { return error < o.error; }
};

void evaluate_1d(const ComplexIntegrand& f, Region& reg, std::uint64_t& evals) {
  static const Rule rule = make_gk15();
  const double mid = 0.5 * (reg.lo[0] + reg.hi[0]), half = 0.5 * (reg.hi[0] - reg.lo[0]);
  std::vector<double> pt(1);
  ComplexAccumulator k, g;
  for (std::size_t i = 0; i < rule.x.size(); ++i) {
    pt[0] = mid + half * rule.x[i];
    std::complex<double> v = f(pt);
    ++evals;
    k.add(rule.wk[i] * v);
    if (rule.wg[i] != 0.0) g.add(rule.wg[i] * v);
  }
  reg.value = half * k.value();
  reg.error = std::abs(half * (k.value() - g.value()));
  reg.split_axis = 0;
}

// Genz-Malik degree-7 rule with an embedded degree-5 rule; the split axis is the one
// with the largest fourth divided difference.
void evaluate_gm(const ComplexIntegrand& f, Region& reg, std::uint64_t& evals) {
  const std::size_t d = reg.lo.size();
  const double dd = static_cast<double>(d);
  static const double l2 = std::sqrt(9.0 / 70.0), l4 = std::sqrt(9.0 / 10.0), l5 = std::sqrt(9.0 / 19.0);
  const double w1 = (12824.0 - 9120.0 * dd + 400.0 * dd * dd) / 19683.0, w2 = 980.0 / 6561.0,
               w3 = (1820.0 - 400.0 * dd) / 19683.0, w4 = 200.0 / 19683.0, w5 = 6859.0 / 19683.0 / std::ldexp(1.0, d);
  const double v1 = (729.0 - 950.0 * dd + 50.0 * dd * dd) / 729.0, v2 = 245.0 / 486.0,
               v3 = (265.0 - 100.0 * dd) / 1458.0, v4 = 25.0 / 729.0;
  std::vector<double> mid(d), half(d), pt(d);
  double vol = 1;
  for (std::size_t i = 0; i < d; ++i) {
    mid[i] = 0.5 * (reg.lo[i] + reg.hi[i]);
    half[i] = 0.5 * (reg.hi[i] - reg.lo[i]);
    vol *= 2 * half[i];
  }
  auto at = [&](const std::vector<double>& p) {
    ++evals;
    return f(p);
  };
  const std::complex<double> f0 = at(mid);
  ComplexAccumulator s2, s3, s4, s5;
  double best = -1;
  reg.split_axis = 0;
  for (std::size_t i = 0; i < d; ++i) {
    pt = mid;
    pt[i] = mid[i] - l2 * half[i];
    auto a = at(pt);
    pt[i] = mid[i] + l2 * half[i];
    auto b = at(pt);
    pt[i] = mid[i] - l4 * half[i];
    auto c = at(pt);
    pt[i] = mid[i] + l4 * half[i];
    auto e = at(pt);
    s2.add(a + b);
    s3.add(c + e);
    const double diff = std::abs(a + b - 2.0 * f0 - (c + e - 2.0 * f0) / 7.0);
    if (diff > best * (1 + 1e-12) || (diff >= best * (1 - 1e-12) && half[i] > half[reg.split_axis])) {
      best = diff;
      reg.split_axis = i;
    }
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      for (int si : {-1, 1})
        for (int sj : {-1, 1}) {
          pt = mid;
          pt[i] = mid[i] + si * l4 * half[i];
          pt[j] = mid[j] + sj * l4 * half[j];
          s4.add(at(pt));
        }
  for (std::uint64_t mask = 0; mask < (1ULL << d); ++mask) {
    for (std::size_t i = 0; i < d; ++i) pt[i] = mid[i] + ((mask >> i) & 1 ? l5 : -l5) * half[i];
    s5.add(at(pt));
  }
  const std::complex<double> r7 = w1 * f0 + w2 * s2.value() + w3 * s3.value() + w4 * s4.value() + w5 * s5.value();
  const std::complex<double> r5 = v1 * f0 + v2 * s2.value() + v3 * s3.value() + v4 * s4.value();
  reg.value = vol * r7;
  reg.error = vol * std::abs(r7 - r5);
}

void evaluate_region(const ComplexIntegrand& f, Region& reg, std::uint64_t& evals) {
  if (reg.lo.size() == 1) evaluate_1d(f, reg, evals);
  else evaluate_gm(f, reg, evals);
}

}  // namespace

CubatureResult adaptive_cubature(const ComplexIntegrand& f, const std::vector<double>& lo,
                                 const std::vector<double>& hi, double tol, std::uint64_t max_evaluations) {
  require(lo.size() == hi.size() && !lo.empty(), "cubature box dimension mismatch");
  require(tol > 0, "tolerance must be positive");
  CubatureResult res;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    require(lo[i] <= hi[i], "cubature box has lo > hi");
    if (lo[i] == hi[i]) {
      res.converged = true;
      return res;
    }
  }
  require(lo.size() <= 20, "cubature dimension above 20");
  std::priority_queue<Region> heap;
  Region first{lo, hi, {}, 0, 0};
  evaluate_region(f, first, res.evaluations);
  heap.push(first);
  double total_err = first.error;
  while (total_err > tol) {
    std::uint64_t per_region = res.evaluations / std::max<std::uint64_t>(1, heap.size() + res.regions);
    if (res.evaluations + 2 * per_region > max_evaluations) break;
    Region r = heap.top();
    heap.pop();
    const std::size_t axis = r.split_axis;
    double m = 0.5 * (r.lo[axis] + r.hi[axis]);
    Region a = r, b = r;
    a.hi[axis] = m;
    b.lo[axis] = m;
    evaluate_region(f, a, res.evaluations);
    evaluate_region(f, b, res.evaluations);
    total_err += a.error + b.error - r.error;
    heap.push(std::move(a));
    heap.push(std::move(b));
    ++res.regions;
  }
  // Re-sum from the leaves to drop the drift of the running error.
  ComplexAccumulator acc;
  double err = 0;
  res.regions = heap.size();
  while (!heap.empty()) {
    acc.add(heap.top().value);
    err += heap.top().error;
    heap.pop();
  }
  res.value = acc.value();
  res.error = err;
  res.converged = err <= tol;
  return res;
}

std::complex<double> expi2pi(double t) {
  double r = t - std::nearbyint(t);
  double a = 2 * std::numbers::pi * r;
  return {std::cos(a), std::sin(a)};
}

std::complex<double> linear_phase_integral(double c, double a, double b) {
  const double w = b - a;
  const double z = 2 * std::numbers::pi * c * w;
  if (std::abs(z) < 1e-3) {
    // e(c a) * int_0^w e(c t) dt with the series of (e^{iz} - 1)/(iz).
    std::complex<double> iz(0, z);
    std::complex<double> s = 1.0 + iz / 2.0 + iz * iz / 6.0 + iz * iz * iz / 24.0 + iz * iz * iz * iz / 120.0;
    return expi2pi(c * a) * w * s;
  }
  return (expi2pi(c * b) - expi2pi(c * a)) / std::complex<double>(0, 2 * std::numbers::pi * c);
}

}  // namespace biforms
