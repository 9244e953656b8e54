#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "robdn/common.hpp"
#include "robdn/solver.hpp"

using namespace robdn;
using namespace robdn::solver;

namespace {

Term t(int var, double coef) { return Term{var, coef}; }

}  // namespace

TEST_CASE("engine loads and reports a version") {
  REQUIRE(engine_available());
  CHECK(!engine_version().empty());
}

TEST_CASE("minimal LP with a binding lower constraint") {
  Model m("lb");
  int x = m.add_var(0, 10, VarKind::Continuous, 1.0, "x");
  std::vector<Term> row{t(x, 1.0)};
  m.add_row(RowSense::Ge, 3.0, row, "floor");
  auto r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(3.0));
  CHECK(r.primal[x] == doctest::Approx(3.0));
  // minimization, binding >= row: nonnegative dual equal to the cost slope
  REQUIRE(r.duals.size() == 1);
  CHECK(r.duals[0] == doctest::Approx(1.0));
}

TEST_CASE("binary covering picks the shared element") {
  Model m("cover");
  int a = m.add_var(0, 1, VarKind::Binary, 1.0, "a");
  int b = m.add_var(0, 1, VarKind::Binary, 1.0, "b");
  int c = m.add_var(0, 1, VarKind::Binary, 1.0, "c");
  std::vector<Term> r1{t(a, 1), t(b, 1)};
  std::vector<Term> r2{t(b, 1), t(c, 1)};
  m.add_row(RowSense::Ge, 1.0, r1, "c1");
  m.add_row(RowSense::Ge, 1.0, r2, "c2");
  auto r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.primal[b] == doctest::Approx(1.0));
}

TEST_CASE("status mapping") {
  SUBCASE("infeasible LP") {
    Model m("inf");
    int x = m.add_var(0, 10, VarKind::Continuous, 1.0);
    std::vector<Term> up{t(x, 1.0)}, dn{t(x, 1.0)};
    m.add_row(RowSense::Ge, 5.0, up);
    m.add_row(RowSense::Le, 2.0, dn);
    CHECK(m.solve().status == Status::Infeasible);
  }
  SUBCASE("unbounded LP") {
    Model m("unb");
    int x = m.add_var(0, kInf, VarKind::Continuous, -1.0);
    std::vector<Term> row{t(x, 1.0)};
    m.add_row(RowSense::Ge, 0.0, row);
    CHECK(m.solve().status == Status::Unbounded);
  }
  SUBCASE("infeasible MIP") {
    Model m("infmip");
    int x = m.add_var(0, 1, VarKind::Binary, 1.0);
    std::vector<Term> up{t(x, 1.0)}, dn{t(x, 1.0)};
    m.add_row(RowSense::Ge, 0.6, up);
    m.add_row(RowSense::Le, 0.4, dn);
    CHECK(m.solve().status == Status::Infeasible);
  }
}

TEST_CASE("incremental rows and columns re-solve correctly") {
  Model m("inc");
  int x = m.add_var(0, 10, VarKind::Continuous, 1.0, "x");
  std::vector<Term> row{t(x, 1.0)};
  m.add_row(RowSense::Ge, 1.0, row, "r1");
  auto r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));

  // cut off the current optimum
  m.add_row(RowSense::Ge, 4.0, row, "r2");
  r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(4.0));

  // a cheaper substitute in the second row only
  int y = m.add_var(0, kInf, VarKind::Continuous, 0.25, "y");
  (void)y;
  // y participates in nothing yet; objective unchanged
  r = m.solve();
  CHECK(r.objective == doctest::Approx(4.0));

  std::vector<Term> mix{t(x, 1.0), t(y, 1.0)};
  m.add_row(RowSense::Ge, 8.0, mix, "r3");
  r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  // x stays at 4 (forced), remaining 4 served by y at 0.25 each
  CHECK(r.objective == doctest::Approx(5.0));
}

TEST_CASE("bound, rhs and objective mutators behave like a fresh model") {
  Model m("mut");
  int x = m.add_var(0, 10, VarKind::Continuous, 2.0, "x");
  std::vector<Term> row{t(x, 1.0)};
  int r0 = m.add_row(RowSense::Ge, 3.0, row, "floor");
  auto r = m.solve();
  CHECK(r.objective == doctest::Approx(6.0));

  m.set_row_rhs(r0, 5.0);
  r = m.solve();
  CHECK(r.objective == doctest::Approx(10.0));

  m.set_obj_coef(x, 1.0);
  r = m.solve();
  CHECK(r.objective == doctest::Approx(5.0));

  m.set_var_bounds(x, 7.0, 10.0);
  r = m.solve();
  CHECK(r.objective == doctest::Approx(7.0));

  Model fresh("mut2");
  int z = fresh.add_var(7.0, 10.0, VarKind::Continuous, 1.0, "x");
  std::vector<Term> frow{t(z, 1.0)};
  fresh.add_row(RowSense::Ge, 5.0, frow, "floor");
  auto fr = fresh.solve();
  CHECK(fr.objective == doctest::Approx(r.objective));
  CHECK(fr.primal[0] == doctest::Approx(r.primal[0]));
}

TEST_CASE("maximization flips the dual sign convention") {
  Model m("max");
  m.set_obj_sense(ObjSense::Max);
  int x = m.add_var(0, kInf, VarKind::Continuous, 1.0, "x");
  std::vector<Term> row{t(x, 1.0)};
  m.add_row(RowSense::Le, 4.0, row, "cap");
  auto r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  CHECK(r.objective == doctest::Approx(4.0));
  // maximization, binding <= row: nonnegative dual
  CHECK(r.duals[0] == doctest::Approx(1.0));
}

TEST_CASE("random LPs satisfy complementary slackness and strong duality") {
  for (unsigned seed = 1; seed <= 10; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> coef(0.1, 2.0);
    std::uniform_real_distribution<double> cost(0.5, 3.0);
    std::uniform_real_distribution<double> rhs(1.0, 8.0);
    int nv = 4 + int(seed % 3);
    int nr = 3 + int(seed % 4);

    Model m("rand");
    std::vector<int> vars;
    std::vector<double> c;
    for (int j = 0; j < nv; ++j) {
      c.push_back(cost(rng));
      vars.push_back(m.add_var(0, kInf, VarKind::Continuous, c.back()));
    }
    std::vector<std::vector<Term>> rows;
    std::vector<double> b;
    for (int i = 0; i < nr; ++i) {
      std::vector<Term> row;
      for (int j = 0; j < nv; ++j)
        if ((rng() & 1) == 0) row.push_back(t(vars[j], coef(rng)));
      if (row.empty()) row.push_back(t(vars[0], coef(rng)));
      b.push_back(rhs(rng));
      rows.push_back(row);
      m.add_row(RowSense::Ge, b.back(), rows.back());
    }
    auto r = m.solve();
    REQUIRE(r.status == Status::Optimal);

    // primal feasibility and complementary slackness
    double dual_obj = 0.0;
    for (int i = 0; i < nr; ++i) {
      double act = 0.0;
      for (auto& term : rows[i]) act += term.coef * r.primal[term.var];
      CHECK(act >= b[i] - 1e-7);
      CHECK(r.duals[i] >= -1e-9);
      CHECK(std::fabs(r.duals[i] * (act - b[i])) < 1e-6);
      dual_obj += r.duals[i] * b[i];
    }
    // reduced costs: nonnegative everywhere (all vars bounded below at 0),
    // zero where the variable is strictly positive
    for (int j = 0; j < nv; ++j) {
      double rc = c[j];
      for (int i = 0; i < nr; ++i)
        for (auto& term : rows[i])
          if (term.var == vars[j]) rc -= term.coef * r.duals[i];
      CHECK(rc >= -1e-7);
      if (r.primal[vars[j]] > 1e-7) CHECK(std::fabs(rc) < 1e-6);
    }
    // strong duality with all lower bounds at zero
    CHECK(r.objective == doctest::Approx(dual_obj).epsilon(1e-7));
  }
}

TEST_CASE("repeat solves of identical models are bit-for-bit identical") {
  auto build = [] {
    Model m("det");
    int x = m.add_var(0, 5, VarKind::Continuous, 1.0);
    int y = m.add_var(0, 5, VarKind::Continuous, 2.0);
    std::vector<Term> row{t(x, 1.0), t(y, 1.0)};
    m.add_row(RowSense::Ge, 6.0, row);
    return m.solve();
  };
  auto a = build();
  auto b = build();
  REQUIRE(a.status == Status::Optimal);
  CHECK(a.objective == b.objective);
  REQUIRE(a.primal.size() == b.primal.size());
  for (size_t i = 0; i < a.primal.size(); ++i) CHECK(a.primal[i] == b.primal[i]);
}

TEST_CASE("model dump writes CPLEX LP format") {
  Model m("dump");
  int x = m.add_var(0, 10, VarKind::Continuous, 1.0, "xvar");
  std::vector<Term> row{t(x, 1.0)};
  m.add_row(RowSense::Ge, 3.0, row, "floor");
  SolveOptions opts;
  opts.lp_dump_path = "solver_dump_test.lp";
  auto r = m.solve(opts);
  REQUIRE(r.status == Status::Optimal);
  std::ifstream in(opts.lp_dump_path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  CHECK(text.find("xvar") != std::string::npos);
  CHECK(text.find("floor") != std::string::npos);
  std::remove(opts.lp_dump_path.c_str());
}

TEST_CASE("integer tolerance keeps binaries clean") {
  // knapsack with fractional LP relaxation; the MIP answer must be integral
  Model m("knap");
  m.set_obj_sense(ObjSense::Max);
  std::vector<int> xs;
  double w[4] = {3, 5, 7, 2};
  double v[4] = {4, 7, 9, 2};
  std::vector<Term> cap;
  for (int j = 0; j < 4; ++j) {
    xs.push_back(m.add_var(0, 1, VarKind::Binary, v[j]));
    cap.push_back(t(xs[j], w[j]));
  }
  m.add_row(RowSense::Le, 10.0, cap);
  auto r = m.solve();
  REQUIRE(r.status == Status::Optimal);
  for (int j = 0; j < 4; ++j) {
    double frac = std::fabs(r.primal[xs[j]] - std::round(r.primal[xs[j]]));
    CHECK(frac < 1e-7);
  }
  CHECK(r.objective == doctest::Approx(13.0));  // {0,1,3} or {0,2}, both 13
}
