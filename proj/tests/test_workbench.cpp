#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "biforms/workbench.hpp"
#include "doctest.h"
#include "golden.hpp"

using namespace biforms;

namespace {

struct Run {
  int code;
  std::string out;
};

Run cli(const std::string& args) {
  const std::string cmd = std::string(BIFORMS_CLI) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

nlohmann::json stable(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("wall_ms");
  j.erase("timestamp");
  return j;
}

SigmaResult fixed_sigma(double v) {
  SigmaResult s;
  s.sigma.value = v;
  s.sigma.error_bound = v * 1e-3;
  return s;
}

}  // namespace

TEST_CASE("trivial floor formulas") {
  const auto sym = BoxPair::symmetric(2, 3);
  CHECK(trivial_floor(sym, 4, 2) == 81 + 125 - 1);
  const auto unit = BoxPair::unit(2, 3);
  CHECK(trivial_floor(unit, 4, 2) == 25 + 27 - 1);
  const auto shifted = load_boxes(oracle::corpus("shifted.box"), 1, 1, false);
  CHECK(trivial_floor(shifted, 10, 10) == 6);
}

TEST_CASE("floor equality when only trivial solutions exist") {
  const auto sys = oracle::load("x1y1");
  const auto boxes = load_boxes(oracle::corpus("shifted.box"), 1, 1, false);
  for (const auto& r : run_lower_bound_check(sys, boxes, parse_schedule("2:20:3"))) {
    CHECK(r.holds);
    CHECK(r.N == r.floor);
  }
}

TEST_CASE("floor check on the corpus at small scale") {
  for (const char* name : {"bilinear3", "b1", "b2", "diag21_2", "mixed21_2", "diag21_3", "x1y1"}) {
    const auto sys = oracle::load(name);
    for (const auto& r : run_lower_bound_check(sys, BoxPair::symmetric(sys.n1(), sys.n2()), parse_schedule("2,3,4")))
      CHECK(r.holds);
  }
}

TEST_CASE("schedule parsing") {
  const auto s = parse_schedule("10:60:10");
  REQUIRE(s.size() == 6);
  CHECK(s.back().P2 == doctest::Approx(60));
  const auto l = parse_schedule("3,4,5", 2);
  CHECK(l[1].P1 == doctest::Approx(16));
  CHECK(l[1].P2 == doctest::Approx(4));
  CHECK_THROWS_AS(parse_schedule("5:2:1"), ValidationError);
  CHECK_THROWS_AS(parse_schedule("2:5:1", 0.5), ValidationError);
  ExperimentPlan plan;
  plan.schedule = parse_schedule("4,3");
  CHECK_THROWS_AS(plan.validate(), ValidationError);
}

TEST_CASE("single-row schedule is not fitted") {
  const auto sys = oracle::load("bilinear3");
  ExperimentPlan plan;
  plan.schedule = parse_schedule("5");
  const auto r = run_asymptotic(sys, BoxPair::symmetric(3, 3), plan, fixed_sigma(63.3));
  REQUIRE(r.rows.size() == 1);
  CHECK_FALSE(r.delta);
  CHECK(r.rows[0].N);
  CHECK(r.rows[0].ratio == doctest::Approx(static_cast<double>(*r.rows[0].N) / (63.3 * 625)));
  SigmaResult loose = fixed_sigma(63.3);
  loose.sigma.error_bound = 10;
  CHECK_THROWS_AS(run_asymptotic(sys, BoxPair::symmetric(3, 3), plan, loose), ValidationError);
}

TEST_CASE("lopsided schedule echoes b and u") {
  const auto sys = oracle::load("b2");
  ExperimentPlan plan;
  plan.schedule = parse_schedule("2,3", 2);
  const auto r = run_asymptotic(sys, BoxPair::symmetric(3, 3), plan, fixed_sigma(10));
  for (const auto& row : r.rows) {
    CHECK(row.b == doctest::Approx(2));
    CHECK(row.u == doctest::Approx(1));
  }
}

TEST_CASE("skipped rows on budget exhaustion") {
  const auto sys = oracle::load("diag21_2");
  ExperimentPlan plan;
  plan.schedule = parse_schedule("3,400");
  plan.count.budget = 100000;
  const auto r = run_asymptotic(sys, BoxPair::symmetric(2, 2), plan, fixed_sigma(5));
  CHECK(r.rows[0].N);
  CHECK_FALSE(r.rows[1].N);
  CHECK(r.rows[1].note.find("skipped") != std::string::npos);
}

TEST_CASE("swapping x and y leaves bilinear ratios unchanged") {
  const auto sys = oracle::load("b2");
  const auto boxes = parse_boxes("x1 -1 1\nx2 0 1\nx3 -1/2 1\ny1 -1 1\ny2 -1 1/2\ny3 0 1\n", 3, 3, false);
  ExperimentPlan a, b;
  a.schedule = {{4, 3}, {6, 5}};
  b.schedule = {{3, 4}, {5, 6}};
  const auto ra = run_asymptotic(sys, boxes, a, fixed_sigma(7));
  const auto rb = run_asymptotic(swap_blocks(sys), boxes.swapped(), b, fixed_sigma(7));
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    CHECK(*ra.rows[i].N == *rb.rows[i].N);
    CHECK(ra.rows[i].ratio == doctest::Approx(rb.rows[i].ratio));
  }
}

TEST_CASE("CLI exit codes") {
  const std::string b3 = oracle::corpus("bilinear3.frm");
  CHECK(cli("--system " + b3 + " csum --a 1 --q 4").code == 0);
  CHECK(cli("csum --a 1 --q 4").code == 2);
  CHECK(cli("--system " + b3 + " no-such-command").code == 2);
  CHECK(cli("--system " + oracle::corpus("missing.frm") + " count --P1 3").code == 2);
  CHECK(cli("--system " + b3 + " count --P1 0.5").code == 2);
  CHECK(cli("--system " + b3 + " --budget 10 count --P1 5").code == 3);
}

TEST_CASE("CLI payloads") {
  const std::string b3 = oracle::corpus("bilinear3.frm");
  const auto cs = nlohmann::json::parse(cli("--system " + b3 + " csum --a 1 --q 4").out);
  CHECK(cs["schema"] == "biforms/1");
  CHECK(cs["result"]["re"].get<double>() == doctest::Approx(1.0 / 64));
  const auto x = oracle::corpus("x1y1.frm");
  const auto n = nlohmann::json::parse(cli("--system " + x + " --boxes " + oracle::corpus("shifted.box") + " count --P1 10").out);
  CHECK(n["result"]["N"] == "6");
  const auto fl = nlohmann::json::parse(cli("--system " + b3 + " floor-check --schedule 2:4:1").out);
  CHECK(fl["result"]["all_hold"] == true);
}

TEST_CASE("CLI output is deterministic up to timing fields") {
  const std::string d = oracle::corpus("diag21_2.frm");
  const std::string args = "--system " + d + " --seed 7 sintegral --variant slab --samples 4096 --replicates 4";
  const auto a = cli(args), b = cli(args);
  REQUIRE(a.code == 0);
  CHECK(stable(a.out) == stable(b.out));
  CHECK(stable(a.out).dump() == stable(b.out).dump());
}

TEST_CASE("CLI JSON and CSV files") {
  const auto dir = std::filesystem::temp_directory_path() / "biforms_cli_test";
  std::filesystem::create_directories(dir);
  const auto json_path = dir / "out.json", csv_path = dir / "out.csv";
  const std::string b3 = oracle::corpus("bilinear3.frm");
  const auto r = cli("--system " + b3 + " --json " + json_path.string() + " --csv " + csv_path.string() +
                     " floor-check --schedule 2,3");
  REQUIRE(r.code == 0);
  std::ifstream jin(json_path);
  const auto j = nlohmann::json::parse(jin);
  CHECK(j["result"]["rows"].size() == 2);
  std::ifstream cin(csv_path);
  std::string header, line;
  std::getline(cin, header);
  CHECK(header.find("floor") != std::string::npos);
  int lines = 0;
  while (std::getline(cin, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 2);
  std::filesystem::remove_all(dir);
}
