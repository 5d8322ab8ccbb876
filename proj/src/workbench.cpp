#include "biforms/workbench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "biforms/parallel.hpp"

namespace biforms {

std::vector<SchedulePoint> parse_schedule(const std::string& text, double b) {
  require(b >= 1, "lopsidedness b must be at least 1");
  std::vector<double> p2;
  if (text.find(':') != std::string::npos) {
    std::istringstream in(text);
    std::string a, c, d;
    require(std::getline(in, a, ':') && std::getline(in, c, ':') && std::getline(in, d), "schedule must be start:stop:step");
    const double start = std::stod(a), stop = std::stod(c), step = std::stod(d);
    require(step > 0 && start > 1 && stop >= start, "schedule needs 1 < start <= stop and step > 0");
    for (double v = start; v <= stop * (1 + 1e-12); v += step) p2.push_back(v);
  } else {
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) p2.push_back(std::stod(tok));
  }
  std::vector<SchedulePoint> out;
  for (double v : p2) out.push_back({std::pow(v, b), v});
  return out;
}

void ExperimentPlan::validate() const {
  require(!schedule.empty(), "schedule is empty");
  double prev = 0;
  for (const auto& s : schedule) {
    require(s.P1 > 1 && s.P2 > 1, "schedule entries need P1, P2 > 1");
    const double m = std::min(s.P1, s.P2);
    require(m > prev, "schedule must increase strictly in min(P1,P2)");
    prev = m;
  }
  require(sigma.pmax >= 2 && sigma.integral.samples > 0 && sigma.integral.replicates >= 2 && sigma.budget > 0 &&
              count.budget > 0,
          "budgets must be positive");
  require(threads >= 1, "threads must be positive");
}

AsymptoticResult run_asymptotic(const BihomSystem& sys, const BoxPair& boxes, const ExperimentPlan& plan) {
  plan.validate();
  return run_asymptotic(sys, boxes, plan, sigma_factor(sys, boxes, plan.sigma));
}

AsymptoticResult run_asymptotic(const BihomSystem& sys, const BoxPair& boxes, const ExperimentPlan& plan,
                                const SigmaResult& sigma) {
  plan.validate();
  const double s = sigma.sigma.value, hw = sigma.sigma.error_bound;
  require(s > 0 && hw < 0.05 * s, "sigma needs a relative half-width below 5%");
  AsymptoticResult res;
  res.sigma = sigma;
  const int R = sys.R();
  const auto n = static_cast<std::int64_t>(plan.schedule.size());
  CountOptions copt = plan.count;
  copt.threads = plan.threads > 1 ? 1 : copt.threads;
  using Rows = std::vector<AsymptoticRow>;
  res.rows = parallel_reduce<Rows>(
      n, plan.threads, Rows{},
      [&](std::int64_t i) {
        const auto [P1, P2] = plan.schedule[i];
        AsymptoticRow row;
        row.P1 = P1;
        row.P2 = P2;
        const double ratio = std::log(P1) / std::log(P2);
        row.b = std::max(ratio, 1.0);
        row.u = std::max(1.0 / ratio, 1.0);
        row.main_term =
            s * std::pow(P1, sys.n1() - sys.d1() * R) * std::pow(P2, sys.n2() - sys.d2() * R);
        try {
          row.N = count_N(sys, boxes, P1, P2, copt).count;
          row.ratio = static_cast<double>(*row.N) / row.main_term;
          const double dev = std::abs(row.ratio - 1);
          row.residual_exponent = dev > 0 ? -std::log(dev) / std::log(std::min(P1, P2)) : INFINITY;
        } catch (const BudgetExceeded&) {
          row.note = "skipped: enumeration budget exceeded";
        }
        return Rows{row};
      },
      [](Rows acc, const Rows& r) {
        acc.insert(acc.end(), r.begin(), r.end());
        return acc;
      });

  // Least squares of log|ratio - 1| against log min(P1,P2) over the last half of the schedule,
  // keeping rows whose deviation clears ten sigma half-widths.
  const double floor_dev = 10 * hw / s;
  std::vector<double> xs, ys;
  for (std::size_t i = res.rows.size() / 2; i < res.rows.size(); ++i) {
    const auto& r = res.rows[i];
    if (!r.N) continue;
    const double dev = std::abs(r.ratio - 1);
    if (dev <= floor_dev) continue;
    xs.push_back(std::log(std::min(r.P1, r.P2)));
    ys.push_back(std::log(dev));
  }
  res.fit_rows = static_cast<int>(xs.size());
  if (xs.size() < 2) {
    res.fit_note = "not fitted: fewer than two usable rows";
    return res;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0) {
    res.fit_note = "not fitted: degenerate abscissae";
    return res;
  }
  res.delta = -sxy / sxx;
  res.fit_note = "fitted";
  return res;
}

BigInt trivial_floor(const BoxPair& boxes, double P1, double P2) {
  const bool o1 = boxes.contains_origin(1), o2 = boxes.contains_origin(2);
  BigInt f = 0;
  if (o2) f += boxes.point_count(1, P1);
  if (o1) f += boxes.point_count(2, P2);
  if (o1 && o2) f -= 1;
  return f;
}

std::vector<FloorRow> run_lower_bound_check(const BihomSystem& sys, const BoxPair& boxes,
                                            const std::vector<SchedulePoint>& schedule, const CountOptions& opt) {
  std::vector<FloorRow> out;
  for (const auto& [P1, P2] : schedule) {
    FloorRow row;
    row.P1 = P1;
    row.P2 = P2;
    row.N = count_N(sys, boxes, P1, P2, opt).count;
    row.floor = trivial_floor(boxes, P1, P2);
    row.holds = row.N >= row.floor;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace biforms
