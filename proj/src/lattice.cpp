#include "biforms/lattice.hpp"

#include <algorithm>
#include <limits>

namespace biforms {
namespace {

using i128 = __int128;

struct Overflow {};

std::int64_t narrow(i128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw Overflow{};
  return static_cast<std::int64_t>(v);
}

// g = s a + t b with g = gcd(a,b) >= 0.
void ext_gcd(std::int64_t a, std::int64_t b, std::int64_t& g, std::int64_t& s, std::int64_t& t) {
  i128 r0 = a, r1 = b, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
  while (r1 != 0) {
    i128 q = r0 / r1;
    i128 tmp = r0 - q * r1; r0 = r1; r1 = tmp;
    tmp = s0 - q * s1; s0 = s1; s1 = tmp;
    tmp = t0 - q * t1; t0 = t1; t1 = tmp;
  }
  if (r0 < 0) { r0 = -r0; s0 = -s0; t0 = -t0; }
  g = narrow(r0);
  s = narrow(s0);
  t = narrow(t0);
}

// Replaces (u, v) by (s u + t v, -b/g u + a/g v), a unimodular combination.
void combine(std::vector<std::int64_t>& u, std::vector<std::int64_t>& v, std::int64_t s, std::int64_t t,
             std::int64_t p, std::int64_t q) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    i128 nu = static_cast<i128>(s) * u[i] + static_cast<i128>(t) * v[i];
    i128 nv = static_cast<i128>(p) * u[i] + static_cast<i128>(q) * v[i];
    u[i] = narrow(nu);
    v[i] = narrow(nv);
  }
}

}  // namespace

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) == (b < 0))) ++q;
  return q;
}

std::optional<I64Matrix> kernel_basis(const I64Matrix& M, int n) {
  try {
    // Column operations on [M; I] stored column-major: cols[c] = (M column c, U column c).
    const int rows = static_cast<int>(M.size());
    std::vector<std::vector<std::int64_t>> cols(n, std::vector<std::int64_t>(rows + n, 0));
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r < rows; ++r) cols[c][r] = M[r][c];
      cols[c][rows + c] = 1;
    }
    int pivot = 0;
    for (int r = 0; r < rows && pivot < n; ++r) {
      for (int c = pivot + 1; c < n; ++c) {
        if (cols[c][r] == 0) continue;
        std::int64_t a = cols[pivot][r], b = cols[c][r], g, s, t;
        ext_gcd(a, b, g, s, t);
        combine(cols[pivot], cols[c], s, t, -b / g, a / g);
      }
      if (cols[pivot][r] != 0) ++pivot;
    }
    // Columns pivot..n-1 are zero in every row of M; their U parts span the kernel.
    I64Matrix basis;
    for (int c = pivot; c < n; ++c)
      basis.emplace_back(cols[c].begin() + rows, cols[c].end());
    // Row echelon form by unimodular row operations.
    int lead = 0;
    for (int col = 0; col < n && lead < static_cast<int>(basis.size()); ++col) {
      for (std::size_t r = lead + 1; r < basis.size(); ++r) {
        if (basis[r][col] == 0) continue;
        std::int64_t a = basis[lead][col], b = basis[r][col], g, s, t;
        ext_gcd(a, b, g, s, t);
        combine(basis[lead], basis[r], s, t, -b / g, a / g);
      }
      if (basis[lead][col] == 0) continue;
      if (basis[lead][col] < 0)
        for (auto& v : basis[lead]) v = narrow(-static_cast<i128>(v));
      ++lead;
    }
    return basis;
  } catch (const Overflow&) {
    return std::nullopt;
  }
}

namespace {

struct Enumerator {
  const I64Matrix& basis;
  const std::vector<std::int64_t>& lo;
  const std::vector<std::int64_t>& hi;
  std::vector<int> pivots;
  LatticeCount out;

  bool in_range(const std::vector<std::int64_t>& w, int from, int to) const {
    for (int c = from; c < to; ++c)
      if (w[c] < lo[c] || w[c] > hi[c]) return false;
    return true;
  }

  void run(std::size_t level, std::vector<std::int64_t>& w) {
    const int n = static_cast<int>(lo.size());
    const int prev = level == 0 ? 0 : pivots[level - 1] + 1;
    const auto& b = basis[level];
    const int p = pivots[level];
    if (!in_range(w, prev, p)) return;
    if (level + 1 == basis.size()) {
      // Closed-form count of t with lo <= w + t b <= hi on coordinates >= p.
      i128 tlo = std::numeric_limits<std::int64_t>::min(), thi = std::numeric_limits<std::int64_t>::max();
      for (int c = p; c < n; ++c) {
        if (b[c] == 0) {
          if (w[c] < lo[c] || w[c] > hi[c]) return;
          continue;
        }
        std::int64_t l = lo[c] - w[c], h = hi[c] - w[c];
        std::int64_t a1, a2;
        if (b[c] > 0) { a1 = ceil_div(l, b[c]); a2 = floor_div(h, b[c]); }
        else { a1 = ceil_div(h, b[c]); a2 = floor_div(l, b[c]); }
        tlo = std::max<i128>(tlo, a1);
        thi = std::min<i128>(thi, a2);
        if (tlo > thi) return;
      }
      out.count += static_cast<std::uint64_t>(thi - tlo + 1);
      ++out.nodes;
      return;
    }
    std::int64_t tmin = ceil_div(lo[p] - w[p], b[p]);
    std::int64_t tmax = floor_div(hi[p] - w[p], b[p]);
    if (tmin > tmax) return;
    for (int c = p; c < n; ++c) w[c] += tmin * b[c];
    for (std::int64_t t = tmin; t <= tmax; ++t) {
      ++out.nodes;
      run(level + 1, w);
      for (int c = p; c < n; ++c) w[c] += b[c];
    }
    for (int c = p; c < n; ++c) w[c] -= (tmax + 1) * b[c];
  }
};

}  // namespace

LatticeCount count_in_box(const I64Matrix& basis, const std::vector<std::int64_t>& lo,
                          const std::vector<std::int64_t>& hi) {
  const int n = static_cast<int>(lo.size());
  for (int c = 0; c < n; ++c)
    if (lo[c] > hi[c]) return {};
  if (basis.empty()) {
    bool origin = true;
    for (int c = 0; c < n; ++c) origin = origin && lo[c] <= 0 && hi[c] >= 0;
    return {origin ? 1u : 0u, 1};
  }
  Enumerator e{basis, lo, hi, {}, {}};
  for (const auto& row : basis) {
    int p = 0;
    while (row[p] == 0) ++p;
    e.pivots.push_back(p);
  }
  std::vector<std::int64_t> w(n, 0);
  e.run(0, w);
  return e.out;
}

}  // namespace biforms
