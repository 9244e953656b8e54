#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "robdn/common.hpp"
#include "robdn/compact.hpp"
#include "robdn/decomposition.hpp"
#include "robdn/evaluation.hpp"
#include "robdn/search.hpp"
#include "util.hpp"

using namespace robdn;

namespace {

// Recourse with a cheap tier y0 (capped at 2), an expensive tier y1 marked
// as a penalty, and a joint cap of 4: rec(u) = u for u <= 2, then
// 2 + 10 (u - 2) up to u = 4, infeasible beyond.
compact::CompactTwoStageProblem tiered() {
  compact::CompactTwoStageProblem p;
  p.nx1 = 0;
  p.nx2 = 1;
  p.ny = 2;
  p.nu = 1;
  p.c1 = {3.0};
  p.c2 = {1.0, 10.0};
  p.second.push_back({.y = {{0, 1.0}, {1, 1.0}},
                      .u = {{0, -1.0}},
                      .name = "demand"});
  p.second.push_back({.y = {{0, -1.0}}, .d = -2.0, .name = "tier0_cap"});
  p.second.push_back(
      {.y = {{0, -1.0}, {1, -1.0}}, .d = -4.0, .name = "joint_cap"});
  p.u_names = {"demand"};
  p.penalty_vars = {1};
  p.recourse_lb = 0.0;
  p.validate();
  return p;
}

// Same closed form as the oracle suite: rec(u, x) = 6 max(0, u/4 - x/2)
// + u/2 with first-stage cost 2x, x <= 1.
compact::CompactTwoStageProblem kinked() {
  compact::CompactTwoStageProblem p;
  p.nx1 = 0;
  p.nx2 = 1;
  p.ny = 2;
  p.nu = 1;
  p.c1 = {2.0};
  p.c2 = {1.0, 5.0};
  p.first.push_back({.x = {{0, 1.0}}, .b = 1.0, .name = "xcap"});
  p.second.push_back({.x = {{0, 1.0}},
                      .y = {{0, 1.0}, {1, 1.0}},
                      .u = {{0, -1.0}},
                      .name = "g0"});
  p.second.push_back({.y = {{0, 1.0}, {1, -1.0}},
                      .u = {{0, -0.5}},
                      .sense = compact::RowSense::Eq,
                      .name = "e0"});
  p.u_names = {"u0"};
  p.recourse_lb = 0.0;
  p.validate();
  return p;
}

}  // namespace

TEST_CASE("plan assessment reproduces hand statistics") {
  auto p = tiered();
  std::vector<double> x{1.0};
  std::vector<std::vector<double>> scen{{1.0}, {1.5}, {3.0}, {5.0}};
  auto rep = evaluation::evaluate(p, x, scen);

  CHECK(rep.first_stage_cost == doctest::Approx(3.0));
  CHECK(rep.scenarios == 4);
  CHECK(rep.infeasible == 1);  // u = 5 exceeds the joint cap
  // feasible values 1, 1.5, 12
  CHECK(rep.mean_recourse == doctest::Approx(14.5 / 3.0).epsilon(1e-9));
  double mean = 14.5 / 3.0;
  double var = (std::pow(1.0 - mean, 2) + std::pow(1.5 - mean, 2) +
                std::pow(12.0 - mean, 2)) /
               2.0;
  CHECK(rep.std_recourse == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
  CHECK(rep.worst_recourse == doctest::Approx(12.0).epsilon(1e-9));
  CHECK(rep.penalized == 1);  // only u = 3 activates the expensive tier
  CHECK(rep.total_cost ==
        doctest::Approx(rep.first_stage_cost + rep.mean_recourse));

  CHECK_THROWS_AS(evaluation::evaluate(p, {1.0, 2.0}, scen), InputError);
  CHECK_THROWS_AS(evaluation::evaluate(p, x, {{1.0, 2.0}}), InputError);

  auto empty = evaluation::evaluate(p, x, {});
  CHECK(empty.scenarios == 0);
  CHECK(empty.mean_recourse == 0.0);
  CHECK(empty.total_cost == doctest::Approx(3.0));
}

TEST_CASE("scenario files round trip") {
  std::vector<std::string> names{"load[2][0]", "pv[4][1]"};
  std::vector<std::vector<double>> rows{{1.0, 2.5}, {3.25, -4.0}};
  std::string text = evaluation::scenarios_to_json(names, rows, 99u);

  std::vector<std::string> names2;
  std::vector<std::vector<double>> rows2;
  unsigned seed = 0;
  evaluation::scenarios_from_json(text, &names2, &rows2, &seed);
  CHECK(names2 == names);
  CHECK(rows2 == rows);
  CHECK(seed == 99u);

  CHECK_THROWS_AS(evaluation::scenarios_from_json("{not json", nullptr,
                                                  nullptr, nullptr),
                  InputError);
  CHECK_THROWS_AS(evaluation::scenarios_from_json("{\"kind\":\"other\"}",
                                                  nullptr, nullptr, nullptr),
                  InputError);
}

TEST_CASE("box sampling stays in bounds and is seed-deterministic") {
  std::vector<double> lo{0.0, -2.0, 5.0};
  std::vector<double> hi{1.0, 2.0, 5.0};
  auto a = evaluation::sample_box(lo, hi, 40, 7);
  auto b = evaluation::sample_box(lo, hi, 40, 7);
  auto c = evaluation::sample_box(lo, hi, 40, 8);
  REQUIRE(a.size() == 40);
  CHECK(a == b);
  CHECK(a != c);
  for (const auto& row : a) {
    REQUIRE(row.size() == 3);
    for (size_t i = 0; i < row.size(); ++i) {
      CHECK(row[i] >= lo[i]);
      CHECK(row[i] <= hi[i]);
    }
    CHECK(row[2] == doctest::Approx(5.0));
  }
  CHECK_THROWS_AS(evaluation::sample_box(lo, {1.0}, 4, 1), InputError);
}

TEST_CASE("set sampling respects the box and the deviation budget") {
  auto set = uncertainty::make_generalized_set(
      {10.0, 0.0, -5.0}, {8.0, -1.0, -6.5}, {13.0, 1.0, -4.0}, 1.5);

  auto rows = evaluation::sample_set(set, 200, 11);
  REQUIRE(rows.size() == 200);
  for (const auto& u : rows) {
    CHECK(set.contains(u, 1e-6));
    CHECK(set.budget_usage(u) <= set.budget + 1e-6);
  }
  // the walk actually moves
  CHECK(rows.front() != rows.back());

  CHECK(rows == evaluation::sample_set(set, 200, 11));
  CHECK(rows != evaluation::sample_set(set, 200, 12));

  SUBCASE("slack budget reduces to plain box sampling") {
    auto wide = uncertainty::make_generalized_set(
        set.center, set.lo, set.hi, 3.0);
    auto got = evaluation::sample_set(wide, 25, 4);
    CHECK(got == evaluation::sample_box(set.lo, set.hi, 25, 4));
  }

  SUBCASE("degenerate set pins the center") {
    auto point = uncertainty::make_generalized_set(
        set.center, set.center, set.center, 2.0);
    auto got = evaluation::sample_set(point, 5, 3);
    REQUIRE(got.size() == 5);
    for (const auto& u : got) CHECK(u == set.center);
  }
}

TEST_CASE("proportional-margin baseline maximizes the margin within budget") {
  auto p = kinked();
  std::vector<double> nominal{1.5};

  // worst case sits at 1.5 (1 + delta); below the x cap the robust value is
  // 2.25 (1 + delta), so the budget 2.75 is crossed at delta = 2/9
  ccg::CcgOptions copts;
  copts.epsilon = 1e-6;
  search::SearchOptions sopts;
  sopts.subdivisions = 13;

  auto r = evaluation::igdt_baseline(p, nominal, 2.75, copts, sopts);
  CHECK_FALSE(r.search.budget_infeasible);
  double radius = search::plan(13).final_length() + sopts.h_alpha + 1e-3;
  CHECK(std::fabs(r.search.alpha_star - 2.0 / 9.0) <= radius);
  CHECK(r.search.value <= 2.75 * (1.0 + 1e-6));

  CHECK(r.set_at_star.dim() == 1);
  CHECK(r.set_at_star.budget == doctest::Approx(1.0));
  double d = r.search.alpha_star;
  CHECK(r.set_at_star.lo[0] == doctest::Approx(1.5 * (1.0 - d)).epsilon(1e-9));
  CHECK(r.set_at_star.hi[0] == doctest::Approx(1.5 * (1.0 + d)).epsilon(1e-9));

  SUBCASE("budget below the nominal robust cost") {
    auto bad = evaluation::igdt_baseline(p, nominal, 2.0, copts, sopts);
    CHECK(bad.search.budget_infeasible);
    CHECK(bad.search.alpha_star == 0.0);
  }

  CHECK_THROWS_AS(
      evaluation::igdt_baseline(p, {1.0, 2.0}, 2.75, copts, sopts),
      InputError);
}

TEST_CASE("scenario-average baseline prices its own sample exactly") {
  auto cc = testutil::make_case({.buses = 4, .periods = 2, .uncertain = 2},
                                17);
  const auto& p = cc.problem;
  auto set = uncertainty::instantiate(cc.curves, 0.7, 0.7, 2);

  const int n = 12;
  const unsigned seed = 5;
  auto r = evaluation::tssp_baseline(p, set, n, seed, 1e-7);
  REQUIRE(r.status == solver::Status::Optimal);
  CHECK(r.scenarios == n);
  CHECK(r.seed == seed);
  REQUIRE(static_cast<int>(r.x.size()) == p.nx());

  // rebuild the sample and price the returned plan scenario by scenario
  auto samples = evaluation::sample_set(set, n, seed);
  double mean = 0.0;
  for (const auto& u : samples) {
    auto rec = compact::recourse_value(p, r.x, u);
    REQUIRE(rec.status == solver::Status::Optimal);
    mean += rec.value / n;
  }
  double rebuilt = compact::first_stage_cost(p, r.x) + mean;
  CHECK(r.objective == doctest::Approx(rebuilt).epsilon(1e-5));

  // no other plan beats the minimizer on its own sample: check the robust one
  ccg::CcgEngine engine(p, {});
  auto rob = engine.solve(set, 0.7);
  REQUIRE(rob.status == solver::Status::Optimal);
  double mean_rob = 0.0;
  for (const auto& u : samples) {
    auto rec = compact::recourse_value(p, rob.x, u);
    REQUIRE(rec.status == solver::Status::Optimal);
    mean_rob += rec.value / n;
  }
  double alt = compact::first_stage_cost(p, rob.x) + mean_rob;
  CHECK(alt >= r.objective - 1e-5 * std::max(1.0, std::fabs(r.objective)));

  CHECK_THROWS_AS(evaluation::tssp_baseline(p, set, 0, seed), InputError);
}

TEST_CASE("budget sweep rows serialize to the documented csv shape") {
  CHECK(evaluation::sweep_csv_header() ==
        "gamma,alpha_star,robust_value,first_stage_cost,mean_recourse,"
        "std_recourse,penalized,evaluations,total_inner");

  evaluation::GammaSweepRow row;
  row.gamma = 0.5;
  row.alpha_star = 0.25;
  row.robust_value = 1234.5;
  row.first_stage_cost = 1000.0;
  row.mean_recourse = 200.25;
  row.std_recourse = 12.5;
  row.penalized = 3;
  row.evaluations = 7;
  row.total_inner = 21;
  std::string line = evaluation::sweep_csv_line(row);
  CHECK(line == "0.5,0.25,1234.5,1000,200.25,12.5,3,7,21");
  CHECK(std::count(line.begin(), line.end(), ',') == 8);
}
