#pragma once

#include <string>
#include <vector>

#include "robdn/compact.hpp"
#include "robdn/decomposition.hpp"
#include "robdn/search.hpp"
#include "robdn/uncertainty.hpp"

namespace robdn::evaluation {

// Out-of-sample assessment of a committed first-stage plan: one recourse LP
// per scenario.
struct EvaluationReport {
  double first_stage_cost = 0.0;  // C_I
  double mean_recourse = 0.0;     // average C_II over feasible scenarios
  double std_recourse = 0.0;      // sample standard deviation
  double worst_recourse = 0.0;
  double total_cost = 0.0;  // C_TOL = C_I + mean recourse
  int scenarios = 0;
  int penalized = 0;   // scenarios that activate load shedding / curtailment
  int infeasible = 0;  // recourse infeasibilities (0 under complete recourse)
  unsigned seed = 0;   // sampling seed when the caller drew the scenarios
};

EvaluationReport evaluate(const compact::CompactTwoStageProblem& p,
                          const std::vector<double>& x,
                          const std::vector<std::vector<double>>& scenarios);

// Uniform samples from the budgeted set via hit-and-run. The walk starts at
// the center, moves along random directions over the non-degenerate
// coordinates, and takes the exact feasible segment through the box and the
// piecewise-linear budget boundary. Falls back to independent per-coordinate
// draws when the budget never binds.
std::vector<std::vector<double>> sample_set(
    const uncertainty::GeneralizedSet& set, int count, unsigned seed);

std::vector<std::vector<double>> sample_box(const std::vector<double>& lo,
                                            const std::vector<double>& hi,
                                            int count, unsigned seed);

std::string scenarios_to_json(const std::vector<std::string>& u_names,
                              const std::vector<std::vector<double>>& rows,
                              unsigned seed);
void scenarios_from_json(const std::string& text,
                         std::vector<std::string>* u_names,
                         std::vector<std::vector<double>>* rows,
                         unsigned* seed);

// Robustness baseline with a proportional-margin box around the nominal
// point: every component may deviate by the same fraction delta and the
// deviation budget never binds. The same interval-shrink search maximizes
// delta subject to the cost budget.
struct IgdtBaselineResult {
  search::SearchResult search;  // alpha_star carries delta*
  uncertainty::GeneralizedSet set_at_star;
};
IgdtBaselineResult igdt_baseline(const compact::CompactTwoStageProblem& p,
                                 const std::vector<double>& nominal_u,
                                 double lambda,
                                 const ccg::CcgOptions& ccg_opts,
                                 const search::SearchOptions& opts);

// Scenario-based two-stage baseline: minimizes first-stage cost plus the
// average recourse cost over scenarios sampled from the set.
struct TsspBaselineResult {
  solver::Status status = solver::Status::Limit;
  double objective = 0.0;
  std::vector<double> x;
  int scenarios = 0;
  unsigned seed = 0;
};
TsspBaselineResult tssp_baseline(const compact::CompactTwoStageProblem& p,
                                 const uncertainty::GeneralizedSet& set,
                                 int n_scenarios, unsigned seed,
                                 double mip_gap = 1e-4,
                                 double time_limit_s = 0.0);

// One row of a budget-parameter sweep report.
struct GammaSweepRow {
  double gamma = 0.0;
  double alpha_star = 0.0;
  double robust_value = 0.0;
  double first_stage_cost = 0.0;
  double mean_recourse = 0.0;
  double std_recourse = 0.0;
  int penalized = 0;
  int evaluations = 0;
  int total_inner = 0;
};
std::string sweep_csv_header();
std::string sweep_csv_line(const GammaSweepRow& r);

}  // namespace robdn::evaluation
