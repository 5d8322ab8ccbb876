#include <numeric>
#include <random>

#include "biforms/expsums.hpp"
#include "doctest.h"
#include "golden.hpp"

using namespace biforms;
using cd = std::complex<double>;

namespace {

bool near(cd a, cd b, double tol = 1e-10) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

// Major-arc membership by exhaustive Farey scan over every (a, q).
bool farey_major(const ArcParams& p, const std::vector<double>& alpha) {
  const auto qmax = static_cast<std::int64_t>(std::floor(std::pow(p.P(), p.Delta) + 1e-9));
  const double thr = std::pow(p.P1, -p.d1) * std::pow(p.P2, -p.d2) * std::pow(p.P(), p.Delta);
  const std::size_t R = alpha.size();
  for (std::int64_t q = 1; q <= qmax; ++q) {
    std::vector<std::int64_t> a(R, 0);
    while (true) {
      std::int64_t g = q;
      bool ok = true;
      for (std::size_t r = 0; r < R; ++r) {
        g = std::gcd(g, a[r]);
        ok = ok && 2 * std::fabs(q * alpha[r] - static_cast<double>(a[r])) < thr;
      }
      if (ok && g == 1) return true;
      std::size_t i = R;
      bool adv = false;
      while (i-- > 0) {
        if (++a[i] <= q) {
          adv = true;
          break;
        }
        a[i] = 0;
      }
      if (!adv) break;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("weighted_sum at alpha = 0 counts the box") {
  const auto sys = oracle::load("b2");
  const auto box = BoxPair::symmetric(3, 3);
  const auto s = weighted_sum(sys, box, Weights::real({0, 0}), 2, 3);
  CHECK(s.real() == doctest::Approx(125.0 * 343));
  CHECK(s.imag() == 0);
}

TEST_CASE("weighted_sum matches the direct oracle") {
  const auto b3 = oracle::load("bilinear3");
  const auto box = BoxPair::symmetric(3, 3);
  CHECK(near(weighted_sum(b3, box, Weights::real({0.5}), 2, 2), oracle::weighted_sum(b3, box, {0.5}, 2, 2)));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 12; ++t) {
    const int d1 = 1 + t % 2, d2 = 1 + (t / 2) % 2;
    const auto sys = oracle::random_system(rng, 2, 2, d1, d2, 2, 3, 5);
    const auto bx = t % 3 ? BoxPair::symmetric(2, 2) : BoxPair::unit(2, 2);
    const std::vector<double> alpha{u(rng), u(rng)};
    const auto got = weighted_sum(sys, bx, Weights::real(alpha), 4, 3);
    CHECK(near(got, oracle::weighted_sum(sys, bx, alpha, 4, 3), 1e-9));
    // Conjugate symmetry.
    const auto neg = weighted_sum(sys, bx, Weights::real({-alpha[0], -alpha[1]}), 4, 3);
    CHECK(near(neg, std::conj(got), 1e-9));
  }
}

TEST_CASE("weighted_sum on full residue boxes reduces to the complete sum") {
  const auto sys = oracle::load("mixed21_2");
  for (std::int64_t q : {2, 3, 5}) {
    const int m = 2;
    const double P = q * m - 1;
    const auto s = weighted_sum(sys, BoxPair::unit(2, 2), Weights::exact({Rational(1, q)}), P, P);
    const auto c = complete_sum(sys, {1}, q);
    CHECK(near(s, c * std::pow(static_cast<double>(q * m), 4), 1e-9));
  }
}

TEST_CASE("complete sum examples") {
  CHECK(near(complete_sum(oracle::load("bilinear3"), {0}, 1), 1));
  CHECK(near(complete_sum(oracle::load("x1y1"), {1}, 2), 0.5));
  for (std::int64_t q = 1; q <= 6; ++q) CHECK(near(complete_sum(oracle::load("b2"), {0, 0}, q), 1));
}

TEST_CASE("complete sums match the frozen golden values") {
  for (const char* name : {"bilinear3", "b2", "diag21_2", "mixed21_2", "x1y1", "diag21_3"}) {
    const auto sys = oracle::load(name);
    const auto g = oracle::golden(name);
    for (const auto& [key, val] : g["complete_sums"].items()) {
      const auto slash = key.find('/');
      std::vector<std::int64_t> a;
      std::string nums = key.substr(0, slash);
      for (std::size_t pos = 0; pos <= nums.size();) {
        const auto comma = nums.find(',', pos);
        a.push_back(std::stoll(nums.substr(pos, comma - pos)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      const std::int64_t q = std::stoll(key.substr(slash + 1));
      const cd want{val[0].get<double>(), val[1].get<double>()};
      CHECK(near(complete_sum(sys, a, q), want, 1e-10));
    }
  }
}

TEST_CASE("complete sums: bound, conjugation and CRT") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 10; ++t) {
    const auto sys = oracle::random_system(rng, 2, 1, 1 + t % 2, 1, 1, 3, 6);
    for (std::int64_t q : {2, 3, 4, 6}) {
      for (std::int64_t a = 0; a < q; ++a) {
        const auto s = complete_sum(sys, {a}, q);
        CHECK(std::abs(s) <= 1 + 1e-12);
        CHECK(near(s, oracle::complete_sum(sys, {a}, q)));
        CHECK(near(complete_sum(sys, {(q - a) % q}, q), std::conj(s)));
      }
    }
    // S_{a, q1 q2} = S_{a q2^-1, q1} S_{a q1^-1, q2} through the CRT.
    const std::int64_t q1 = 3, q2 = 4, q = 12;
    for (std::int64_t a = 1; a < q; ++a) {
      const std::int64_t a1 = a % q1;        // 4^-1 = 1 mod 3
      const std::int64_t a2 = (a * 3) % q2;  // 3^-1 = 3 mod 4
      CHECK(near(complete_sum(sys, {a}, q), complete_sum(sys, {a1}, q1) * complete_sum(sys, {a2}, q2), 1e-10));
    }
  }
}

TEST_CASE("oscillatory integral") {
  const auto b3 = oracle::load("bilinear3");
  const auto vol = oscillatory_integral(b3, BoxPair::symmetric(3, 3), {0.0}, 1e-10);
  CHECK(vol.value.real() == doctest::Approx(64));
  CHECK(oscillatory_integral(b3, BoxPair::unit(3, 3), {0.0}, 1e-10).value.real() == doctest::Approx(1));
  // int_0^1 int_0^1 e(t u v) = sum_k (2 pi i t)^k / (k! (k+1)^2).
  const auto x = oracle::load("x1y1");
  for (double t : {0.3, 1.0, 2.5}) {
    cd series = 0, term = 1;
    for (int k = 0; k < 60; ++k) {
      series += term / static_cast<double>((k + 1) * (k + 1));
      term *= cd(0, 2 * M_PI * t) / static_cast<double>(k + 1);
    }
    const auto r = oscillatory_integral(x, BoxPair::unit(1, 1), {t}, 1e-10);
    CHECK(near(r.value, series, 1e-8));
  }
  const auto d = oracle::load("diag21_2");
  const auto p = oscillatory_integral(d, BoxPair::symmetric(2, 2), {1.7}, 1e-8);
  const auto m = oscillatory_integral(d, BoxPair::symmetric(2, 2), {-1.7}, 1e-8);
  CHECK(near(p.value, std::conj(m.value), 1e-6));
}

TEST_CASE("arc classification") {
  const ArcParams p(0.5, 4, 4, 1, 1);
  const auto zero = arc_classify(p, {0.0});
  CHECK(zero.kind == ArcKind::Major);
  CHECK(zero.witness->q == 1);
  CHECK(zero.witness->a == std::vector<std::int64_t>{0});
  const auto third = arc_classify(p, {1.0 / 3});
  CHECK(third.kind == ArcKind::Major);
  CHECK(third.witness->q == 3);
  CHECK(third.witness->a == std::vector<std::int64_t>{1});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  int minors = 0;
  for (int t = 0; t < 300; ++t) {
    const ArcParams ap(0.25 + 0.05 * (t % 4), 3 + t % 3, 2 + t % 4, 1 + t % 2, 1);
    std::vector<double> alpha{u(rng)};
    if (t % 2) alpha.push_back(u(rng));
    const auto m = arc_classify(ap, alpha);
    CHECK((m.kind == ArcKind::Major) == farey_major(ap, alpha));
    if (m.kind == ArcKind::Major) {
      const double thr = std::pow(ap.P1, -ap.d1) * std::pow(ap.P2, -ap.d2) * std::pow(ap.P(), ap.Delta);
      std::int64_t g = m.witness->q;
      for (std::size_t r = 0; r < alpha.size(); ++r) {
        CHECK(2 * std::fabs(m.witness->q * alpha[r] - m.witness->a[r]) < thr);
        g = std::gcd(g, m.witness->a[r]);
      }
      CHECK(g == 1);
    } else {
      ++minors;
    }
  }
  CHECK(minors > 0);
  CHECK_THROWS_AS(arc_classify(p, {1.5}), ValidationError);
}

TEST_CASE("Weyl auditor at alpha = 0") {
  const auto b3 = oracle::load("bilinear3");
  const auto box = BoxPair::symmetric(3, 3);
  const auto a = audit_weyl(b3, box, Weights::real({0.0}), 4, 4);
  CHECK(a.s_abs == doctest::Approx(std::pow(9, 6)));
  CHECK(a.m1 == 343);
  CHECK(std::isfinite(a.ratio));
  CHECK(a.lhs_log == doctest::Approx(std::log(std::pow(9, 6))));
}

TEST_CASE("auxiliary inequality auditor") {
  const auto b3 = oracle::load("bilinear3");
  const auto box = BoxPair::symmetric(3, 3);
  const auto big = audit_aux_inequality(b3, box, Weights::real({0.3}), PencilWeights::real({1.5}), 6, 6, 1.0);
  CHECK(big.satisfied);
  CHECK(big.lhs <= 1 + 1e-12);
  double prev = 0;
  for (double b : {0.2, 0.4, 0.8}) {
    const auto r = audit_aux_inequality(b3, box, Weights::real({0.0}), PencilWeights::real({b}), 6, 6, 1.0);
    CHECK(r.rhs >= prev);
    prev = r.rhs;
  }
}
