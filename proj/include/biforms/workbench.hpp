#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biforms/box.hpp"
#include "biforms/counting.hpp"
#include "biforms/densities.hpp"
#include "biforms/forms.hpp"

namespace biforms {

struct SchedulePoint {
  double P1;
  double P2;
};

// "start:stop:step" or a comma list of P2 values; P1 = P2^b (b = 1 gives P1 = P2).
std::vector<SchedulePoint> parse_schedule(const std::string& text, double b = 1.0);

struct ExperimentPlan {
  std::string system_ref;
  std::vector<SchedulePoint> schedule;  // strictly increasing in min(P1,P2)
  SigmaOptions sigma;
  CountOptions count;
  int threads = 1;
  std::string output;
  void validate() const;
};

struct AsymptoticRow {
  double P1 = 0, P2 = 0;
  double b = 1, u = 1;
  std::optional<BigInt> N;  // unset when the row was skipped
  double main_term = 0;     // sigma P1^(n1-d1 R) P2^(n2-d2 R)
  double ratio = 0;         // N / main_term
  double residual_exponent = 0;  // -log|ratio - 1| / log min(P1,P2)
  std::string note;
};

struct AsymptoticResult {
  SigmaResult sigma;
  std::vector<AsymptoticRow> rows;
  std::optional<double> delta;  // fitted decay exponent of |ratio - 1|
  int fit_rows = 0;
  std::string fit_note;
};

// Requires sigma with relative half-width below 5%.
AsymptoticResult run_asymptotic(const BihomSystem& sys, const BoxPair& boxes, const ExperimentPlan& plan,
                                const SigmaResult& sigma);
AsymptoticResult run_asymptotic(const BihomSystem& sys, const BoxPair& boxes, const ExperimentPlan& plan);

struct FloorRow {
  double P1 = 0, P2 = 0;
  BigInt N;
  BigInt floor;  // solutions with x = 0 or y = 0
  bool holds = false;
};

// Exact count of the trivial solutions: x = 0 kills every form, and so does y = 0.
BigInt trivial_floor(const BoxPair& boxes, double P1, double P2);

std::vector<FloorRow> run_lower_bound_check(const BihomSystem& sys, const BoxPair& boxes,
                                            const std::vector<SchedulePoint>& schedule,
                                            const CountOptions& opt = {});

// Command-line entry point; returns 0, 2 on validation errors, 3 when a budget is exceeded.
int cli_main(int argc, char** argv);

}  // namespace biforms
