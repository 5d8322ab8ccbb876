#include "biforms/box.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace biforms {

BoxPair::BoxPair(std::vector<Interval> x, std::vector<Interval> y) : x_(std::move(x)), y_(std::move(y)) {
  require(!x_.empty() && !y_.empty(), "boxes need at least one axis per block");
  for (const auto* blk : {&x_, &y_})
    for (const auto& iv : *blk) {
      require(iv.lo <= iv.hi, "box interval has lo > hi");
      require(iv.lo >= -1 && iv.hi <= 1, "box interval must lie in [-1,1]");
    }
}

BoxPair BoxPair::symmetric(int n1, int n2) {
  return BoxPair(std::vector<Interval>(n1, Interval{Rational(-1), Rational(1)}),
                 std::vector<Interval>(n2, Interval{Rational(-1), Rational(1)}));
}

BoxPair BoxPair::unit(int n1, int n2) {
  return BoxPair(std::vector<Interval>(n1, Interval{Rational(0), Rational(1)}),
                 std::vector<Interval>(n2, Interval{Rational(0), Rational(1)}));
}

bool BoxPair::side_lengths_conform() const {
  for (const auto* blk : {&x_, &y_})
    for (const auto& iv : *blk)
      if (iv.hi - iv.lo > 1) return false;
  return true;
}

double BoxPair::volume() const {
  Rational v = 1;
  for (const auto* blk : {&x_, &y_})
    for (const auto& iv : *blk) v *= iv.hi - iv.lo;
  return static_cast<double>(v);
}

bool BoxPair::contains_origin(int b) const {
  for (const auto& iv : block(b))
    if (iv.lo > 0 || iv.hi < 0) return false;
  return true;
}

std::pair<std::int64_t, std::int64_t> BoxPair::int_range(int b, int i, double P) const {
  require(std::isfinite(P) && P > 0, "scale must be positive");
  const Interval& iv = axis(b, i);
  Rational p = exact_rational(P);
  return {to_i64(ceil_rational(iv.lo * p), "box bound"), to_i64(floor_rational(iv.hi * p), "box bound")};
}

BigInt BoxPair::point_count(int b, double P) const {
  BigInt c = 1;
  for (int i = 0; i < static_cast<int>(block(b).size()); ++i) {
    auto [lo, hi] = int_range(b, i, P);
    if (hi < lo) return 0;
    c *= BigInt(hi - lo + 1);
  }
  return c;
}

BoxPair parse_boxes(const std::string& text, int n1, int n2, bool unit_default) {
  Interval def = unit_default ? Interval{Rational(0), Rational(1)} : Interval{Rational(-1), Rational(1)};
  std::vector<Interval> x(n1, def), y(n2, def);
  std::vector<bool> seen_x(n1, false), seen_y(n2, false);
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream ls(line);
    std::string axis, lo, hi, extra;
    if (!(ls >> axis)) continue;
    require(static_cast<bool>(ls >> lo >> hi) && !(ls >> extra), "malformed box line '" + raw + "'");
    require(axis.size() >= 2 && (axis[0] == 'x' || axis[0] == 'y'), "malformed box axis '" + axis + "'");
    int idx = 0;
    try {
      std::size_t pos = 0;
      idx = std::stoi(axis.substr(1), &pos);
      require(pos == axis.size() - 1, "malformed box axis '" + axis + "'");
    } catch (const std::logic_error&) {
      throw ValidationError("malformed box axis '" + axis + "'");
    }
    auto& target = axis[0] == 'x' ? x : y;
    auto& seen = axis[0] == 'x' ? seen_x : seen_y;
    require(idx >= 1 && idx <= static_cast<int>(target.size()), "box axis index out of range");
    require(!seen[idx - 1], "duplicate box axis " + axis);
    seen[idx - 1] = true;
    target[idx - 1] = Interval{parse_rational(lo), parse_rational(hi)};
  }
  return BoxPair(std::move(x), std::move(y));
}

BoxPair load_boxes(const std::string& path, int n1, int n2, bool unit_default) {
  std::ifstream in(path);
  require(in.good(), "cannot open box file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_boxes(ss.str(), n1, n2, unit_default);
}

std::string serialize_boxes(const BoxPair& boxes) {
  std::ostringstream out;
  for (int b = 1; b <= 2; ++b)
    for (int i = 0; i < static_cast<int>(boxes.block(b).size()); ++i)
      out << (b == 1 ? 'x' : 'y') << i + 1 << ' ' << boxes.axis(b, i).lo << ' ' << boxes.axis(b, i).hi << "\n";
  return out.str();
}

}  // namespace biforms
