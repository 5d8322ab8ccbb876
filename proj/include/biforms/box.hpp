#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "biforms/core.hpp"

namespace biforms {

struct Interval {
  Rational lo;
  Rational hi;
};

// Product of axis-parallel closed boxes B1 x B2, each interval inside [-1,1].
class BoxPair {
 public:
  BoxPair(std::vector<Interval> x, std::vector<Interval> y);
  static BoxPair symmetric(int n1, int n2);  // [-1,1] on every axis
  static BoxPair unit(int n1, int n2);       // [0,1] on every axis

  int n1() const { return static_cast<int>(x_.size()); }
  int n2() const { return static_cast<int>(y_.size()); }
  const std::vector<Interval>& block(int b) const { return b == 1 ? x_ : y_; }
  const Interval& axis(int b, int i) const { return block(b).at(i); }

  // True when every side has length at most one.
  bool side_lengths_conform() const;
  double volume() const;
  bool contains_origin(int b) const;

  // Integers t with lo <= t/P <= hi on axis i of block b; empty ranges have first > second.
  std::pair<std::int64_t, std::int64_t> int_range(int b, int i, double P) const;
  // Number of integer points of P * B_b.
  BigInt point_count(int b, double P) const;

  BoxPair swapped() const { return BoxPair(y_, x_); }

 private:
  std::vector<Interval> x_, y_;
};

BoxPair parse_boxes(const std::string& text, int n1, int n2, bool unit_default);
BoxPair load_boxes(const std::string& path, int n1, int n2, bool unit_default);
std::string serialize_boxes(const BoxPair& boxes);

}  // namespace biforms
