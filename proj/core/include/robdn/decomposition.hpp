#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robdn/compact.hpp"
#include "robdn/uncertainty.hpp"

namespace robdn::ccg {

// A recourse dual point on InequalityView rows (componentwise >= 0).
struct DualPoint {
  std::vector<double> pi;
};

// One optimality cut in the master: a scenario u (with its own recourse
// block) and, when generated by the subproblem, the dual point that lets the
// scenario be re-targeted when the uncertainty set changes.
struct OptimalityCut {
  std::optional<DualPoint> dual;  // empty for the seeded nominal-scenario cut
  std::vector<double> u;
  double set_alpha = -1.0;  // alpha the scenario was last refreshed for
};

struct RoundLog {
  int round = 0;
  double lb = 0.0, ub = 0.0, gap = 0.0;
  double master_seconds = 0.0, sub_seconds = 0.0;
  int cuts = 0;
};

struct CcgOptions {
  double epsilon = 0.005;          // relative optimality gap target
  int max_rounds = 60;
  double mip_gap = 1e-6;           // master and subproblem MIP gap
  double time_limit_s = 0.0;       // per engine solve; 0 = unlimited
  bool recycle_cuts = true;        // re-target pooled cuts between solves
  bool verify_subproblem = true;   // recompute worst-case value by plain LP
  double big_m_fallback = 1e5;
  int big_m_max_escalations = 3;
  std::string lp_dump_dir;         // when set, dump models per round
};

struct CcgResult {
  solver::Status status = solver::Status::Limit;
  double value = 0.0;  // converged lower bound: the robust optimum
  double upper = 0.0;
  std::vector<double> x;
  std::vector<double> worst_u;
  int rounds = 0;      // master/subproblem iterations in this solve
  std::vector<RoundLog> log;
};

struct SubproblemResult {
  double value = 0.0;  // worst-case recourse cost for the given x
  std::vector<double> u;
  DualPoint dual;      // view-row duals certifying the value
  int escalations = 0; // big-M growth rounds that were needed
  int binaries = 0;    // binary count after exact reductions
};

// Master problem: min c1'x + eta over Ax <= b plus one recourse block per
// cut. eta is bounded below by the problem's recourse_lb. Rows are appended
// incrementally as cuts arrive.
class Master {
 public:
  Master(const compact::CompactTwoStageProblem& p, const CcgOptions& opts);
  void add_cut(const OptimalityCut& cut);
  int cuts() const { return n_cuts_; }

  struct Solution {
    solver::Status status = solver::Status::Limit;
    double objective = 0.0;  // c1'x + eta
    double eta = 0.0;
    std::vector<double> x;
  };
  Solution solve(double mip_gap_override = -1.0);

 private:
  const compact::CompactTwoStageProblem& p_;
  const CcgOptions& opts_;
  solver::Model model_;
  int eta_ = -1;
  int n_cuts_ = 0;
};

// Worst-case scenario search for fixed x: maximizes the recourse cost over
// the uncertainty set through the stationarity conditions of the inner LP,
// linearized with per-row big-M constants derived from interval arithmetic
// (with fallback and escalation on detected saturation).
SubproblemResult solve_subproblem(const compact::CompactTwoStageProblem& p,
                                  const compact::InequalityView& view,
                                  const std::vector<double>& x,
                                  const uncertainty::GeneralizedSet& set,
                                  const CcgOptions& opts);

// Exact re-targeting of a pooled cut: the scenario most violated for the
// stored dual point under a (possibly different) uncertainty set.
std::vector<double> refresh_scenario(const compact::CompactTwoStageProblem& p,
                                     const compact::InequalityView& view,
                                     const DualPoint& dual,
                                     const uncertainty::GeneralizedSet& set);

// Column-and-constraint generation engine. The cut pool persists across
// solve() calls; with recycle_cuts enabled every pooled cut is re-targeted
// to the new uncertainty set before the master is rebuilt, which is what
// makes repeated solves along an alpha sweep cheap.
class CcgEngine {
 public:
  CcgEngine(const compact::CompactTwoStageProblem& p, CcgOptions opts);

  CcgResult solve(const uncertainty::GeneralizedSet& set, double alpha = -1.0);

  int pool_size() const { return static_cast<int>(pool_.size()); }
  const std::vector<OptimalityCut>& pool() const { return pool_; }
  const CcgOptions& options() const { return opts_; }

 private:
  const compact::CompactTwoStageProblem& p_;
  compact::InequalityView view_;
  CcgOptions opts_;
  std::vector<OptimalityCut> pool_;
};

std::string round_log_csv_header();
std::string round_log_csv_line(const RoundLog& r);

}  // namespace robdn::ccg
