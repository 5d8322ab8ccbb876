#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace biforms {

using I64Matrix = std::vector<std::vector<std::int64_t>>;

// Row-echelon basis of the integer kernel {v in Z^n : M v = 0}; each row has a positive
// pivot and zeros before it, pivots strictly increasing. nullopt when an intermediate
// value leaves 64-bit range.
std::optional<I64Matrix> kernel_basis(const I64Matrix& M, int n);

struct LatticeCount {
  std::uint64_t count = 0;
  std::uint64_t nodes = 0;  // partial sums visited
};

// Number of lattice vectors of the echelon basis inside the closed box [lo, hi].
LatticeCount count_in_box(const I64Matrix& basis, const std::vector<std::int64_t>& lo,
                          const std::vector<std::int64_t>& hi);

std::int64_t floor_div(std::int64_t a, std::int64_t b);
std::int64_t ceil_div(std::int64_t a, std::int64_t b);

}  // namespace biforms
