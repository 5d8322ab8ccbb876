#include "biforms/forms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace biforms {
namespace {

std::int64_t factorial(int d) {
  std::int64_t f = 1;
  for (int i = 2; i <= d; ++i) f *= i;
  return f;
}

// Number of distinct orderings of a sorted multi-index.
std::int64_t distinct_orderings(const std::vector<int>& idx) {
  std::int64_t r = factorial(static_cast<int>(idx.size()));
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && idx[j] == idx[i]) ++j;
    r /= factorial(static_cast<int>(j - i));
    i = j;
  }
  return r;
}

std::vector<std::vector<int>> all_orderings(std::vector<int> idx) {
  std::sort(idx.begin(), idx.end());
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

int parse_int(const std::string& tok, const std::string& context) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &pos);
  } catch (const std::exception&) {
    throw ValidationError("malformed integer '" + tok + "' in " + context);
  }
  if (pos != tok.size()) throw ValidationError("malformed integer '" + tok + "' in " + context);
  return v;
}

}  // namespace

int IntPoly::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms) {
    int s = 0;
    for (int v : e) s += v;
    d = std::max(d, s);
  }
  return d;
}

BihomSystem::BihomSystem(int n1, int n2, int d1, int d2, std::vector<std::vector<Monomial>> forms)
    : n1_(n1), n2_(n2), d1_(d1), d2_(d2) {
  require(n1 >= 1 && n2 >= 1, "n1 and n2 must be positive");
  require(d1 >= 1 && d2 >= 1, "d1 and d2 must be positive");
  require(d1 <= 6 && d2 <= 6, "bidegree components above 6 are not supported");
  require(!forms.empty(), "system needs at least one form");
  factorial_scale_ = factorial(d1) * factorial(d2);
  denominator_ = 1;
  for (auto& raw : forms) {
    std::map<std::pair<std::vector<int>, std::vector<int>>, BigInt> merged;
    for (auto& m : raw) {
      require(static_cast<int>(m.j.size()) == d1 && static_cast<int>(m.k.size()) == d2,
              "monomial does not have bidegree (" + std::to_string(d1) + "," + std::to_string(d2) + ")");
      for (int v : m.j) require(v >= 0 && v < n1, "index out of range");
      for (int v : m.k) require(v >= 0 && v < n2, "index out of range");
      std::sort(m.j.begin(), m.j.end());
      std::sort(m.k.begin(), m.k.end());
      merged[{m.j, m.k}] += m.coeff;
    }
    std::vector<Monomial> canon;
    for (auto& [key, c] : merged)
      if (c != 0) canon.push_back(Monomial{key.first, key.second, c});
    require(!canon.empty(), "empty form");
    forms_.push_back(std::move(canon));
  }
  for (const auto& f : forms_) {
    std::vector<TensorEntry> entries;
    for (const auto& m : f) {
      std::int64_t mj = distinct_orderings(m.j), mk = distinct_orderings(m.k);
      // d1!d2! c / (mj mk) is integral because mj | d1! and mk | d2!.
      BigInt scaled = m.coeff * BigInt(factorial_scale_) / BigInt(mj * mk);
      Rational sym(m.coeff, BigInt(mj * mk));
      denominator_ = boost::multiprecision::lcm(denominator_, BigInt(boost::multiprecision::denominator(sym)));
      for (const auto& jo : all_orderings(m.j))
        for (const auto& ko : all_orderings(m.k)) entries.push_back(TensorEntry{jo, ko, scaled});
    }
    tensor_.push_back(std::move(entries));
  }
}

Rational BihomSystem::coefficient(int r, std::vector<int> j, std::vector<int> k) const {
  require(r >= 0 && r < R(), "form index out of range");
  require(static_cast<int>(j.size()) == d1_ && static_cast<int>(k.size()) == d2_, "multi-index length mismatch");
  std::sort(j.begin(), j.end());
  std::sort(k.begin(), k.end());
  for (const auto& m : forms_[r])
    if (m.j == j && m.k == k) return Rational(m.coeff, BigInt(distinct_orderings(j) * distinct_orderings(k)));
  return Rational(0);
}

BigInt BihomSystem::scaled_coefficient(int r, std::vector<int> j, std::vector<int> k) const {
  Rational c = coefficient(r, std::move(j), std::move(k)) * Rational(factorial_scale_);
  return boost::multiprecision::numerator(c);
}

BigInt BihomSystem::max_abs_coeff() const {
  BigInt m = 0;
  for (const auto& f : forms_)
    for (const auto& mono : f) m = std::max(m, BigInt(abs(mono.coeff)));
  return m;
}

IntPoly BihomSystem::as_poly(int r) const {
  IntPoly p;
  p.nvars = n1_ + n2_;
  for (const auto& m : forms_.at(r)) {
    std::vector<int> e(p.nvars, 0);
    for (int v : m.j) ++e[v];
    for (int v : m.k) ++e[n1_ + v];
    p.terms.emplace_back(std::move(e), m.coeff);
  }
  return p;
}

BihomSystem parse_system(const std::string& text) {
  std::map<std::string, int> header;
  std::vector<std::vector<Monomial>> forms;
  std::vector<bool> declared;
  int current = -1;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  auto where = [&]() { return "line " + std::to_string(lineno); };
  auto need_header = [&]() {
    for (const char* key : {"n1", "n2", "d1", "d2", "R"})
      require(header.count(key), std::string("missing header field ") + key);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    auto toks = split_ws(line);
    const std::string& head = toks[0];
    if (head == "n1" || head == "n2" || head == "d1" || head == "d2" || head == "R") {
      require(toks.size() == 2, "malformed header at " + where());
      require(!header.count(head), "duplicate header field " + head);
      require(forms.empty(), "header field after forms at " + where());
      header[head] = parse_int(toks[1], where());
      continue;
    }
    if (head == "form" || (head.rfind("form", 0) == 0 && head.size() > 4 && std::isdigit(head[4]))) {
      need_header();
      if (forms.empty()) {
        require(header["R"] >= 1, "R must be positive");
        forms.resize(header["R"]);
        declared.assign(header["R"], false);
      }
      std::string rest = trim(line.substr(4));
      if (!rest.empty() && rest.back() == ':') rest.pop_back();
      int r = parse_int(trim(rest), where());
      require(r >= 1 && r <= header["R"], "form number out of range at " + where());
      require(!declared[r - 1], "duplicate form " + std::to_string(r));
      declared[r - 1] = true;
      current = r - 1;
      continue;
    }
    require(current >= 0, "monomial before any form declaration at " + where());
    auto bar = line.find('|');
    auto eq = line.find('=');
    require(bar != std::string::npos && eq != std::string::npos && bar < eq, "malformed monomial at " + where());
    Monomial m;
    for (const auto& t : split_ws(line.substr(0, bar))) {
      int v = parse_int(t, where());
      require(v >= 1 && v <= header["n1"], "index out of range at " + where());
      m.j.push_back(v - 1);
    }
    for (const auto& t : split_ws(line.substr(bar + 1, eq - bar - 1))) {
      int v = parse_int(t, where());
      require(v >= 1 && v <= header["n2"], "index out of range at " + where());
      m.k.push_back(v - 1);
    }
    require(static_cast<int>(m.j.size()) == header["d1"] && static_cast<int>(m.k.size()) == header["d2"],
            "monomial degree mismatch at " + where());
    auto ctoks = split_ws(line.substr(eq + 1));
    require(ctoks.size() == 1, "malformed coefficient at " + where());
    std::string c = ctoks[0];
    if (!c.empty() && c[0] == '+') c = c.substr(1);
    bool ok = !c.empty();
    for (std::size_t i = (c[0] == '-' ? 1 : 0); i < c.size(); ++i)
      ok = ok && std::isdigit(static_cast<unsigned char>(c[i]));
    require(ok && c != "-", "malformed coefficient at " + where());
    m.coeff = BigInt(c);
    forms[current].push_back(std::move(m));
  }
  need_header();
  require(!forms.empty(), "no forms declared");
  for (std::size_t r = 0; r < forms.size(); ++r)
    require(declared[r] && !forms[r].empty(), "empty form " + std::to_string(r + 1));
  return BihomSystem(header["n1"], header["n2"], header["d1"], header["d2"], std::move(forms));
}

BihomSystem swap_blocks(const BihomSystem& sys) {
  std::vector<std::vector<Monomial>> forms;
  for (int r = 0; r < sys.R(); ++r) {
    std::vector<Monomial> f;
    for (const auto& m : sys.form(r)) f.push_back(Monomial{m.k, m.j, m.coeff});
    forms.push_back(std::move(f));
  }
  return BihomSystem(sys.n2(), sys.n1(), sys.d2(), sys.d1(), std::move(forms));
}

BihomSystem load_system(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open system file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system(ss.str());
}

std::string serialize_system(const BihomSystem& sys) {
  std::ostringstream out;
  out << "n1 " << sys.n1() << "\nn2 " << sys.n2() << "\nd1 " << sys.d1() << "\nd2 " << sys.d2()
      << "\nR " << sys.R() << "\n";
  for (int r = 0; r < sys.R(); ++r) {
    out << "form " << r + 1 << "\n";
    for (const auto& m : sys.form(r)) {
      for (int v : m.j) out << v + 1 << ' ';
      out << '|';
      for (int v : m.k) out << ' ' << v + 1;
      out << " = " << m.coeff << "\n";
    }
  }
  return out.str();
}

std::vector<BigInt> evaluate(const BihomSystem& sys, const std::vector<std::int64_t>& x,
                             const std::vector<std::int64_t>& y) {
  require(static_cast<int>(x.size()) == sys.n1() && static_cast<int>(y.size()) == sys.n2(),
          "vector length mismatch");
  std::vector<BigInt> out(sys.R());
  for (int r = 0; r < sys.R(); ++r) {
    BigInt acc = 0;
    for (const auto& m : sys.form(r)) {
      BigInt t = m.coeff;
      for (int v : m.j) t *= x[v];
      for (int v : m.k) t *= y[v];
      acc += t;
    }
    out[r] = acc;
  }
  return out;
}

Weights Weights::real(std::vector<double> values) {
  for (double v : values) require(std::isfinite(v), "non-finite weight");
  Weights w;
  w.values_ = std::move(values);
  return w;
}

Weights Weights::exact(std::vector<Rational> values) {
  Weights w;
  for (const auto& v : values) w.values_.push_back(static_cast<double>(v));
  w.exact_ = std::move(values);
  return w;
}

const std::vector<Rational>& Weights::exact_values() const {
  require(exact_.has_value(), "weights are not exact");
  return *exact_;
}

double Weights::sup_norm() const {
  double m = 0;
  for (double v : values_) m = std::max(m, std::fabs(v));
  return m;
}

bool Weights::is_zero() const {
  if (exact_) return std::all_of(exact_->begin(), exact_->end(), [](const Rational& v) { return v == 0; });
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

Weights Weights::scaled(const Rational& c) const {
  if (exact_) {
    std::vector<Rational> v = *exact_;
    for (auto& e : v) e *= c;
    return exact(std::move(v));
  }
  std::vector<double> v = values_;
  double cd = static_cast<double>(c);
  for (auto& e : v) e *= cd;
  return real(std::move(v));
}

Weights Weights::operator+(const Weights& other) const {
  require(size() == other.size(), "weight length mismatch");
  if (exact_ && other.exact_) {
    std::vector<Rational> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = (*exact_)[i] + (*other.exact_)[i];
    return exact(std::move(v));
  }
  std::vector<double> v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = values_[i] + other.values_[i];
  return real(std::move(v));
}

Weights Weights::operator-() const { return scaled(Rational(-1)); }

PencilWeights::PencilWeights(Weights w) : Weights(std::move(w)) {
  require(size() > 0 && !is_zero(), "pencil weights must not all vanish");
}

namespace {

void check_weights(const BihomSystem& sys, const Weights& beta) {
  require(static_cast<int>(beta.size()) == sys.R(), "weight vector length must equal R");
}

template <class Vec>
void check_args(const BihomSystem& sys, const std::vector<Vec>& xs, const std::vector<Vec>& ys) {
  require(static_cast<int>(xs.size()) == sys.d1() && static_cast<int>(ys.size()) == sys.d2(),
          "multilinear argument count mismatch");
  for (const auto& v : xs) require(static_cast<int>(v.size()) == sys.n1(), "vector length mismatch");
  for (const auto& v : ys) require(static_cast<int>(v.size()) == sys.n2(), "vector length mismatch");
}

// Sorted (j,k) keys present in any form.
std::vector<std::pair<std::vector<int>, std::vector<int>>> support_keys(const BihomSystem& sys) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> keys;
  for (int r = 0; r < sys.R(); ++r)
    for (const auto& m : sys.form(r)) keys.emplace_back(m.j, m.k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

}  // namespace

double multilinear_eval(const BihomSystem& sys, const Weights& beta,
                        const std::vector<std::vector<double>>& xs,
                        const std::vector<std::vector<double>>& ys) {
  check_weights(sys, beta);
  check_args(sys, xs, ys);
  double total = 0;
  for (int r = 0; r < sys.R(); ++r) {
    if (beta[r] == 0.0) continue;
    double acc = 0;
    for (const auto& e : sys.ordered_tensor(r)) {
      double t = static_cast<double>(e.value);
      for (int a = 0; a < sys.d1(); ++a) t *= xs[a][e.j[a]];
      for (int b = 0; b < sys.d2(); ++b) t *= ys[b][e.k[b]];
      acc += t;
    }
    total += beta[r] * acc;
  }
  return total;
}

Rational multilinear_eval_exact(const BihomSystem& sys, const Weights& beta,
                                const std::vector<std::vector<std::int64_t>>& xs,
                                const std::vector<std::vector<std::int64_t>>& ys) {
  check_weights(sys, beta);
  check_args(sys, xs, ys);
  const auto& bv = beta.exact_values();
  Rational total = 0;
  for (int r = 0; r < sys.R(); ++r) {
    if (bv[r] == 0) continue;
    BigInt acc = 0;
    for (const auto& e : sys.ordered_tensor(r)) {
      BigInt t = e.value;
      for (int a = 0; a < sys.d1(); ++a) t *= xs[a][e.j[a]];
      for (int b = 0; b < sys.d2(); ++b) t *= ys[b][e.k[b]];
      acc += t;
    }
    total += bv[r] * Rational(acc);
  }
  return total;
}

double beta_sup_norm(const BihomSystem& sys, const PencilWeights& beta) {
  check_weights(sys, beta);
  if (beta.is_exact()) return static_cast<double>(beta_sup_norm_exact(sys, beta));
  double m = 0;
  for (const auto& [j, k] : support_keys(sys)) {
    double s = 0;
    for (int r = 0; r < sys.R(); ++r) s += beta[r] * static_cast<double>(sys.coefficient(r, j, k));
    m = std::max(m, std::fabs(s));
  }
  return m;
}

Rational beta_sup_norm_exact(const BihomSystem& sys, const PencilWeights& beta) {
  check_weights(sys, beta);
  const auto& bv = beta.exact_values();
  Rational m = 0;
  for (const auto& [j, k] : support_keys(sys)) {
    Rational s = 0;
    for (int r = 0; r < sys.R(); ++r) s += bv[r] * sys.coefficient(r, j, k);
    m = std::max(m, Rational(abs(s)));
  }
  return m;
}

std::vector<BigMatrix> bilinear_matrices(const BihomSystem& sys) {
  require(sys.is_bilinear(), "bilinear_matrices requires bidegree (1,1)");
  std::vector<BigMatrix> out;
  for (int r = 0; r < sys.R(); ++r) {
    BigMatrix a(sys.n2(), std::vector<BigInt>(sys.n1(), 0));
    for (const auto& m : sys.form(r)) a[m.k[0]][m.j[0]] += m.coeff;
    out.push_back(std::move(a));
  }
  return out;
}

Eigen::MatrixXd HSlices::at(const std::vector<double>& y) const {
  require(y.size() == slices.size(), "vector length mismatch");
  require(!slices.empty(), "no slices");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(slices[0].rows(), slices[0].cols());
  for (std::size_t l = 0; l < y.size(); ++l) h += y[l] * slices[l];
  return h;
}

HSlices h_slices(const BihomSystem& sys, const Weights& beta) {
  require(sys.d1() == 2 && sys.d2() == 1, "h_slices requires bidegree (2,1)");
  check_weights(sys, beta);
  HSlices out;
  out.slices.assign(sys.n2(), Eigen::MatrixXd::Zero(sys.n1(), sys.n1()));
  for (int r = 0; r < sys.R(); ++r)
    for (const auto& e : sys.ordered_tensor(r))
      // value = 2! * 1! * F_{(a,b),l}
      out.slices[e.k[0]](e.j[0], e.j[1]) += beta[r] * static_cast<double>(e.value) / 2.0;
  return out;
}

std::vector<std::vector<std::vector<Rational>>> h_slices_exact(const BihomSystem& sys, const Weights& beta) {
  require(sys.d1() == 2 && sys.d2() == 1, "h_slices requires bidegree (2,1)");
  check_weights(sys, beta);
  const auto& bv = beta.exact_values();
  std::vector<std::vector<std::vector<Rational>>> out(
      sys.n2(), std::vector<std::vector<Rational>>(sys.n1(), std::vector<Rational>(sys.n1(), Rational(0))));
  for (int r = 0; r < sys.R(); ++r)
    for (const auto& e : sys.ordered_tensor(r))
      out[e.k[0]][e.j[0]][e.j[1]] += bv[r] * Rational(e.value, BigInt(2));
  return out;
}

IntPoly pencil_poly(const BihomSystem& sys, const Weights& beta) {
  check_weights(sys, beta);
  const auto& bv = beta.exact_values();
  std::map<std::vector<int>, Rational> acc;
  for (int r = 0; r < sys.R(); ++r) {
    if (bv[r] == 0) continue;
    IntPoly p = sys.as_poly(r);
    for (auto& [e, c] : p.terms) acc[e] += bv[r] * Rational(c);
  }
  BigInt den = 1;
  for (const auto& [e, c] : acc) den = boost::multiprecision::lcm(den, BigInt(boost::multiprecision::denominator(c)));
  IntPoly out;
  out.nvars = sys.n1() + sys.n2();
  for (const auto& [e, c] : acc) {
    if (c == 0) continue;
    out.terms.emplace_back(e, boost::multiprecision::numerator(c * Rational(den)));
  }
  return out;
}

}  // namespace biforms
