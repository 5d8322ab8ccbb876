#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "biforms/counting.hpp"
#include "biforms/densities.hpp"
#include "biforms/expsums.hpp"
#include "biforms/geometry.hpp"
#include "biforms/workbench.hpp"

namespace biforms {

namespace {

using nlohmann::json;

std::string str(const BigInt& v) { return v.str(); }
std::string str(const Rational& v) {
  std::ostringstream o;
  o << v;
  return o.str();
}

template <class T>
std::vector<T> split_list(const std::string& text, T (*conv)(const std::string&)) {
  std::vector<T> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    require(!tok.empty(), "empty entry in list '" + text + "'");
    out.push_back(conv(tok));
  }
  require(!out.empty(), "empty list");
  return out;
}

Rational to_rat(const std::string& s) { return parse_rational(s); }
double to_dbl(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::logic_error&) {
    throw ValidationError("malformed number '" + s + "'");
  }
}
std::int64_t to_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    require(pos == s.size(), "malformed integer '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ValidationError("malformed integer '" + s + "'");
  }
}
std::uint64_t to_u64(const std::string& s) {
  const auto v = to_int(s);
  require(v >= 0, "expected a nonnegative integer, got '" + s + "'");
  return static_cast<std::uint64_t>(v);
}

Weights weights(const std::string& text) { return Weights::exact(split_list<Rational>(text, to_rat)); }

json rationals(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& r : v) a.push_back(str(r));
  return a;
}

json estimate(const DensityEstimate& e) {
  json j{{"value", e.value}, {"error_bound", e.error_bound}, {"method", to_string(e.method)}, {"level", e.level}};
  if (e.seed) j["seed"] = *e.seed;
  if (e.exact) j["exact"] = str(*e.exact);
  return j;
}

json fp_dim(const FpDimension& d) {
  return json{{"dim", d.dim}, {"stable", d.stable}, {"primes", d.primes}, {"per_prime", d.per_prime},
              {"counts", d.counts}};
}

json sigma_json(const SigmaResult& s) {
  json j{{"sigma", estimate(s.sigma)}, {"series", estimate(s.series)}, {"integral", estimate(s.integral)}};
  if (s.positivity_expected) j["positivity_expected"] = *s.positivity_expected;
  return j;
}

json invariants_json(const InvariantReport& r) {
  json j{{"n1", r.n1}, {"n2", r.n2}, {"R", r.R}, {"d1", r.d1}, {"d2", r.d2}, {"height", r.height},
         {"primes", r.primes}};
  if (r.pencil) {
    json w = json::array();
    for (const auto& k : r.pencil->witnesses)
      w.push_back({{"beta", rationals(k.beta)}, {"certified", k.certified}, {"rank", k.rank}, {"ker1", k.ker1},
                   {"ker2", k.ker2}, {"rank_nullity", k.rank_nullity}});
    j["sigma1_lb"] = r.pencil->sigma1_lb;
    j["sigma2_lb"] = r.pencil->sigma2_lb;
    j["rho_ub"] = r.pencil->rho_ub;
    j["pencil_witnesses"] = w;
    j["directions_scanned"] = r.pencil->directions_scanned;
    j["real_samples"] = r.pencil->samples;
  }
  if (r.s) {
    json w = json::array();
    for (const auto& s : r.s->witnesses)
      w.push_back({{"beta", rationals(s.beta)}, {"slice", fp_dim(s.slice)}, {"hx", fp_dim(s.hx)},
                   {"dims_nested", s.dims_nested}});
    j["s1_est"] = r.s->s1_est;
    j["s2_est"] = r.s->s2_est;
    j["s_witnesses"] = w;
  }
  j["sing_locus_dim_est"] = r.sing_locus_dim_est < 0 ? json("empty") : json(r.sing_locus_dim_est);
  j["sing_locus_witness"] = rationals(r.sing_locus_witness);
  json sm{{"verdict", to_string(r.smooth.verdict)}, {"singular_primes", r.smooth.singular_primes}};
  if (r.smooth.witness_prime)
    sm["witness"] = {{"p", *r.smooth.witness_prime}, {"x", r.smooth.witness_x}, {"y", r.smooth.witness_y}};
  j["smooth"] = sm;
  j["variety"] = fp_dim(r.variety);
  j["complete_intersection_probable"] = r.complete_intersection_probable;
  for (int i = 0; i < 2; ++i) {
    const std::string key = "dim_V" + std::to_string(i + 1) + "_star";
    j[key] = r.schindler_dim[i] ? json(*r.schindler_dim[i]) : json(nullptr);
  }
  return j;
}

void write_csv(const json& result, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  auto cell = [](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  if (result.contains("rows") && result["rows"].is_array() && !result["rows"].empty()) {
    const json& rows = result["rows"];
    std::vector<std::string> keys;
    for (auto it = rows[0].begin(); it != rows[0].end(); ++it) keys.push_back(it.key());
    for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << keys[i];
    out << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < keys.size(); ++i) out << (i ? "," : "") << (r.contains(keys[i]) ? cell(r[keys[i]]) : "");
      out << "\n";
    }
    return;
  }
  out << "key,value\n";
  for (auto it = result.begin(); it != result.end(); ++it)
    if (!it->is_structured()) out << it.key() << "," << cell(*it) << "\n";
}

struct Globals {
  std::string system, boxes, json_out, csv_out;
  int threads = 1;
  std::uint64_t budget = kDefaultPointBudget;
  std::uint64_t seed = 1;
  bool unit_box = false;
};

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Bihomogeneous forms workbench: counting, exponential sums, densities, pencil invariants"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--system", g.system, "system file (.frm)")->required();
  app.add_option("--boxes", g.boxes, "box file; default [-1,1] on every axis");
  app.add_flag("--unit-box", g.unit_box, "default axes to [0,1]");
  app.add_option("--json", g.json_out, "also write the JSON result to this file");
  app.add_option("--csv", g.csv_out, "write a CSV mirror of the result");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--budget", g.budget, "enumeration budget")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "random seed");

  // Subcommand options live here; each handler reads what it needs.
  std::string P1s, P2s, method, beta_s, alpha_s, a_s, gamma_s, E_s, primes_s, variant, schedule;
  double B = 2, bound = 0.5, tol = 1e-3, Delta = 0.1, eps = 0.01, Cs = 1, C = 1, Q = 100, gamma_max = 8,
         slabP = 1000, lopsided = 1;
  int side = 1, k = 1, height = 1, samples = 64, depth = 4, starts = 256, replicates = 16;
  std::int64_t q = 1;
  std::uint64_t p = 2, pmax = 200, qmc = 1u << 18;
  bool primed = false, no_probe = false;

  auto P_opts = [&](CLI::App* s) {
    s->add_option("--P1,--P", P1s, "scale of the x box")->required();
    s->add_option("--P2", P2s, "scale of the y box; defaults to P1");
  };
  auto integral_opts = [&](CLI::App* s) {
    s->add_option("--variant", variant, "gamma|slab (integral) or euler|qseries (series)");
    s->add_option("--gamma-max", gamma_max, "half-side of the gamma cube");
    s->add_option("--tol", tol, "relative quadrature tolerance");
    s->add_option("--slab-P", slabP, "slab scale");
    s->add_option("--samples", qmc, "quasi-Monte Carlo points per replicate");
    s->add_option("--replicates", replicates, "independent randomizations");
  };
  auto invariant_opts = [&](CLI::App* s) {
    s->add_option("--height", height, "beta height for pencil scans");
    s->add_option("--samples", samples, "random real pencil directions");
    s->add_option("--primes", primes_s, "probe primes, comma separated");
  };

  auto* c_count = app.add_subcommand("count", "exact N(P1,P2)");
  P_opts(c_count);
  c_count->add_option("--method", method, "generic|hyperplane|fixed-y|fixed-x");
  auto* c_aux = app.add_subcommand("aux", "auxiliary count N_side^aux(beta;B)");
  c_aux->add_option("--side", side)->check(CLI::Range(1, 2));
  c_aux->add_option("--beta", beta_s)->required();
  c_aux->add_option("--B", B)->required();
  auto* c_m = app.add_subcommand("mcount", "multilinear small-value count M_side");
  c_m->add_option("--side", side)->check(CLI::Range(1, 2));
  c_m->add_option("--alpha", alpha_s)->required();
  P_opts(c_m);
  c_m->add_option("--bound", bound);
  auto* c_k = app.add_subcommand("kcell", "dyadic K-cell counts of the x box");
  c_k->add_option("--beta", beta_s)->required();
  c_k->add_option("--B", B)->required();
  c_k->add_option("--E", E_s, "explicit E_1..E_(k+1); default: the full dyadic partition");
  c_k->add_option("--k", k);
  auto* c_sum = app.add_subcommand("sum", "exponential sum S(alpha)");
  c_sum->add_option("--alpha", alpha_s)->required();
  P_opts(c_sum);
  auto* c_csum = app.add_subcommand("csum", "complete sum S_{a,q}");
  c_csum->add_option("--a", a_s)->required();
  c_csum->add_option("--q", q)->required();
  auto* c_sinf = app.add_subcommand("sinf", "oscillatory integral S_inf(gamma)");
  c_sinf->add_option("--gamma", gamma_s)->required();
  c_sinf->add_option("--tol", tol);
  auto* c_arcs = app.add_subcommand("arcs", "major/minor arc membership");
  c_arcs->add_option("--alpha", alpha_s)->required();
  c_arcs->add_option("--Delta", Delta)->required();
  P_opts(c_arcs);
  c_arcs->add_flag("--primed", primed);
  auto* c_aw = app.add_subcommand("audit-weyl", "Weyl inequality audit");
  c_aw->add_option("--alpha", alpha_s)->required();
  P_opts(c_aw);
  c_aw->add_option("--eps", eps);
  auto* c_aa = app.add_subcommand("audit-aux", "auxiliary inequality audit");
  c_aa->add_option("--alpha", alpha_s)->required();
  c_aa->add_option("--beta", beta_s)->required();
  P_opts(c_aa);
  c_aa->add_option("--Cs", Cs, "exponent C of the inequality");
  c_aa->add_option("--C", C, "constant");
  c_aa->add_option("--eps", eps);
  auto* c_dp = app.add_subcommand("density-p", "p-adic density at level k");
  c_dp->add_option("--p", p)->required();
  c_dp->add_option("--k", k)->required();
  c_dp->add_option("--method", method, "residue|hensel");
  auto* c_series = app.add_subcommand("series", "truncated singular series");
  c_series->add_option("--Q", Q, "truncation level");
  c_series->add_option("--variant", variant, "euler|qseries");
  auto* c_si = app.add_subcommand("sintegral", "singular integral");
  integral_opts(c_si);
  auto* c_sigma = app.add_subcommand("sigma", "main-term constant sigma");
  integral_opts(c_sigma);
  c_sigma->add_option("--pmax", pmax);
  c_sigma->add_flag("--no-probe", no_probe);
  auto* c_lz = app.add_subcommand("local-zeros", "smooth p-adic and real zero search");
  c_lz->add_option("--primes", primes_s);
  c_lz->add_option("--depth", depth);
  c_lz->add_option("--starts", starts);
  auto* c_inv = app.add_subcommand("invariants", "pencil invariants and smoothness probes");
  invariant_opts(c_inv);
  auto* c_hyp = app.add_subcommand("hypotheses", "theorem hypothesis table");
  invariant_opts(c_hyp);
  P_opts(c_hyp);
  auto* c_ver = app.add_subcommand("verify", "asymptotic verification over a schedule");
  c_ver->add_option("--schedule", schedule)->required();
  c_ver->add_option("--lopsided-b", lopsided);
  integral_opts(c_ver);
  c_ver->add_option("--pmax", pmax);
  auto* c_fl = app.add_subcommand("floor-check", "trivial-solution floor over a schedule");
  c_fl->add_option("--schedule", schedule)->required();
  c_fl->add_option("--lopsided-b", lopsided);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  try {
    const BihomSystem sys = load_system(g.system);
    const BoxPair boxes = g.boxes.empty() ? (g.unit_box ? BoxPair::unit(sys.n1(), sys.n2())
                                                        : BoxPair::symmetric(sys.n1(), sys.n2()))
                                          : load_boxes(g.boxes, sys.n1(), sys.n2(), g.unit_box);
    const double P1 = P1s.empty() ? 0 : to_dbl(P1s);
    const double P2 = P2s.empty() ? P1 : to_dbl(P2s);
    CountOptions copt;
    copt.budget = g.budget;
    copt.threads = g.threads;
    const std::vector<std::uint64_t> primes =
        primes_s.empty() ? std::vector<std::uint64_t>{} : split_list<std::uint64_t>(primes_s, to_u64);
    IntegralLevel level;
    level.gamma_max = gamma_max;
    level.tol = tol;
    level.P = slabP;
    level.samples = qmc;
    level.replicates = replicates;
    level.seed = g.seed;
    auto integral_variant = [&] {
      if (variant.empty() || variant == "slab") return IntegralVariant::Slab;
      require(variant == "gamma", "unknown integral variant " + variant);
      return IntegralVariant::Gamma;
    };
    InvariantOptions iopt;
    iopt.height = height;
    iopt.samples = samples;
    iopt.seed = g.seed;
    if (!primes.empty()) iopt.primes = primes;
    iopt.budget = std::min<std::uint64_t>(g.budget, kDefaultProbeBudget);

    json result;
    if (cmd == "count") {
      if (!method.empty()) {
        if (method == "generic") copt.force = CountMethod::GenericBrute;
        else if (method == "hyperplane") copt.force = CountMethod::BilinearHyperplane;
        else if (method == "fixed-y") copt.force = CountMethod::FixedYLinear;
        else if (method == "fixed-x") copt.force = CountMethod::FixedXLinear;
        else throw ValidationError("unknown count method " + method);
      }
      const auto r = count_N(sys, boxes, P1, P2, copt);
      result = {{"P1", P1}, {"P2", P2}, {"N", str(r.count)}, {"enumerated", str(r.enumerated)},
                {"method", to_string(r.method)}};
    } else if (cmd == "aux") {
      const PencilWeights beta(weights(beta_s));
      result = {{"side", side}, {"B", B}, {"beta", beta_s}, {"count", str(count_aux(sys, side, beta, B, copt))}};
    } else if (cmd == "mcount") {
      result = {{"side", side}, {"P1", P1}, {"P2", P2}, {"bound", bound},
                {"count", str(count_M(sys, side, weights(alpha_s), P1, P2, bound, copt))}};
    } else if (cmd == "kcell") {
      const PencilWeights beta(weights(beta_s));
      json rows = json::array();
      BigInt total = 0;
      std::vector<KCellSpec> specs;
      if (!E_s.empty()) {
        KCellSpec s;
        s.k = k;
        s.E = split_list<double>(E_s, to_dbl);
        s.B = B;
        s.beta = beta;
        specs.push_back(s);
      } else {
        specs = dyadic_cell_specs(sys.n1(), B, beta);
      }
      for (const auto& s : specs) {
        const BigInt c = k_cell_count(sys, s, g.budget);
        total += c;
        rows.push_back({{"k", s.k}, {"E", s.E}, {"count", str(c)}});
      }
      result = {{"B", B}, {"rows", rows}, {"total", str(total)}};
      if (E_s.empty()) {
        const BigInt box = boost::multiprecision::pow(BigInt(2 * static_cast<std::int64_t>(std::floor(B)) + 1), sys.n1());
        result["box_points"] = str(box);
        result["partition_exact"] = total == box;
      }
    } else if (cmd == "sum") {
      const auto s = weighted_sum(sys, boxes, weights(alpha_s), P1, P2, g.budget);
      result = {{"re", s.real()}, {"im", s.imag()}, {"abs", std::abs(s)}};
    } else if (cmd == "csum") {
      const auto s = complete_sum(sys, split_list<std::int64_t>(a_s, to_int), q, g.budget);
      result = {{"q", q}, {"re", s.real()}, {"im", s.imag()}};
    } else if (cmd == "sinf") {
      const auto r = oscillatory_integral(sys, boxes, split_list<double>(gamma_s, to_dbl), tol);
      result = {{"re", r.value.real()}, {"im", r.value.imag()}, {"error", r.error}, {"converged", r.converged},
                {"evaluations", r.evaluations}};
    } else if (cmd == "arcs") {
      const ArcParams ap(Delta, P1, P2, sys.d1(), sys.d2());
      const auto m = arc_classify(ap, split_list<double>(alpha_s, to_dbl), primed);
      result = {{"kind", m.kind == ArcKind::Major ? "major" : "minor"}, {"b", ap.b()}, {"u", ap.u()}};
      if (m.witness) result["witness"] = {{"a", m.witness->a}, {"q", m.witness->q}};
    } else if (cmd == "audit-weyl") {
      const auto w = audit_weyl(sys, boxes, weights(alpha_s), P1, P2, eps, copt);
      result = {{"s_abs", w.s_abs}, {"M1", str(w.m1)}, {"lhs_log", w.lhs_log}, {"rhs_log", w.rhs_log},
                {"ratio", w.ratio}};
    } else if (cmd == "audit-aux") {
      const auto a = audit_aux_inequality(sys, boxes, weights(alpha_s), PencilWeights(weights(beta_s)), P1, P2, Cs, C,
                                          eps);
      result = {{"satisfied", a.satisfied}, {"lhs", a.lhs}, {"rhs", a.rhs}, {"margin", a.margin}, {"base", a.base}};
    } else if (cmd == "density-p") {
      DensityMethod m = DensityMethod::HenselStabilized;
      if (method == "residue") m = DensityMethod::ResidueCount;
      else require(method.empty() || method == "hensel", "unknown density method " + method);
      result = estimate(padic_density(sys, p, k, m, g.budget));
      result["p"] = p;
      result["k"] = k;
    } else if (cmd == "series") {
      SeriesVariant v = SeriesVariant::Euler;
      if (variant == "qseries") v = SeriesVariant::QSeries;
      else require(variant.empty() || variant == "euler", "unknown series variant " + variant);
      result = estimate(singular_series(sys, Q, v, g.budget));
    } else if (cmd == "sintegral") {
      result = estimate(singular_integral(sys, boxes, integral_variant(), level));
    } else if (cmd == "sigma") {
      SigmaOptions so;
      so.pmax = pmax;
      so.integral = level;
      so.integral_variant = integral_variant();
      so.probe_local_zeros = !no_probe;
      so.budget = g.budget;
      result = sigma_json(sigma_factor(sys, boxes, so));
    } else if (cmd == "local-zeros") {
      json rows = json::array();
      for (std::uint64_t pr : primes.empty() ? std::vector<std::uint64_t>{2, 3, 5, 7} : primes) {
        const auto z = smooth_padic_zero(sys, pr, depth, g.budget);
        json row{{"place", std::to_string(pr)}, {"found", z.found}};
        if (z.found) row["point"] = {{"x", z.x}, {"y", z.y}, {"modulus", z.modulus}};
        rows.push_back(row);
      }
      const auto rz = smooth_real_zero(sys, boxes, starts);
      json row{{"place", "real"}, {"found", rz.found}};
      if (rz.found) row["point"] = {{"x", rz.x}, {"y", rz.y}, {"residual", rz.residual}, {"sigma_min", rz.sigma_min}};
      rows.push_back(row);
      result = {{"rows", rows}};
    } else if (cmd == "invariants") {
      result = invariants_json(compute_invariants(sys, iopt));
    } else if (cmd == "hypotheses") {
      const auto inv = compute_invariants(sys, iopt);
      const auto h = hypothesis_report(inv, P1, P2);
      json rows = json::array();
      for (const auto& r : h.rows)
        rows.push_back({{"condition", r.name}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"slack", r.slack},
                        {"holds", r.holds}, {"conditional", r.conditional}, {"note", r.note}});
      result = {{"P1", P1}, {"P2", P2}, {"b", h.b}, {"u", h.u}, {"rows", rows}, {"invariants", invariants_json(inv)}};
    } else if (cmd == "verify") {
      ExperimentPlan plan;
      plan.system_ref = g.system;
      plan.schedule = parse_schedule(schedule, lopsided);
      plan.sigma.pmax = pmax;
      plan.sigma.integral = level;
      plan.sigma.integral_variant = integral_variant();
      plan.sigma.probe_local_zeros = false;
      plan.sigma.budget = g.budget;
      plan.count = copt;
      plan.threads = g.threads;
      const auto r = run_asymptotic(sys, boxes, plan);
      json rows = json::array();
      for (const auto& row : r.rows) {
        json j{{"P1", row.P1}, {"P2", row.P2}, {"b", row.b}, {"u", row.u}, {"main_term", row.main_term},
               {"note", row.note}};
        j["N"] = row.N ? json(str(*row.N)) : json(nullptr);
        j["ratio"] = row.N ? json(row.ratio) : json(nullptr);
        j["residual_exponent"] =
            row.N && std::isfinite(row.residual_exponent) ? json(row.residual_exponent) : json(nullptr);
        rows.push_back(j);
      }
      result = {{"sigma", sigma_json(r.sigma)}, {"rows", rows}, {"fit_rows", r.fit_rows}, {"fit_note", r.fit_note}};
      result["delta"] = r.delta ? json(*r.delta) : json(nullptr);
    } else if (cmd == "floor-check") {
      json rows = json::array();
      bool all = true;
      for (const auto& row : run_lower_bound_check(sys, boxes, parse_schedule(schedule, lopsided), copt)) {
        rows.push_back({{"P1", row.P1}, {"P2", row.P2}, {"N", str(row.N)}, {"floor", str(row.floor)},
                        {"holds", row.holds}});
        all = all && row.holds;
      }
      result = {{"rows", rows}, {"all_hold", all}};
    }

    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    json doc{{"schema", "biforms/1"}, {"command", cmd}, {"system", g.system}, {"seed", g.seed},
             {"result", result}, {"wall_ms", ms}, {"timestamp", static_cast<std::int64_t>(std::time(nullptr))}};
    const std::string text = doc.dump(2);
    std::cout << text << "\n";
    if (!g.json_out.empty()) {
      std::ofstream out(g.json_out);
      require(out.good(), "cannot write " + g.json_out);
      out << text << "\n";
    }
    if (!g.csv_out.empty()) write_csv(result, g.csv_out);
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace biforms
