#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace robdn::search {

// Interval-shrink schedule on [0,1]: lengths[k] is the bracket width after
// k-1 subdivision rounds (lengths[1] = 1); each width is a ratio of
// consecutive Fibonacci numbers, so lengths[n] = 1/F(n-1).
struct FibonacciPlan {
  int n = 0;
  std::vector<double> lengths;  // 1-based: lengths[1..n]
  double final_length() const { return lengths.back(); }
};
FibonacciPlan plan(int n);

// One probe of the value function.
struct ProbeOutcome {
  double value = 0.0;
  int inner_rounds = 0;
  std::vector<double> x;
  std::vector<double> worst_u;
};
using ValueFn = std::function<ProbeOutcome(double alpha)>;

struct BudgetSpec {
  double lambda = std::nan("");      // absolute budget, wins when set
  double multiplier = std::nan("");  // relative to a reference cost
  double resolve(double reference_cost) const;
};

struct SearchOptions {
  int subdivisions = 8;  // evaluation budget of the shrink schedule
  double h_alpha = 1e-3; // probe snap grid (cache key and set resolution)
  bool prune = true;     // skip probes whose side is already decided
  double epsilon = 0.005;
  double feas_slack = 1e-9;  // relative slack when comparing against budget
};

struct SearchTraceRow {
  int round = 0;
  double alpha_left = 0.0, alpha_right = 0.0;
  double value_left = std::nan(""), value_right = std::nan("");
  bool evaluated_left = false, evaluated_right = false;
  bool kept_right = false;
  int inner_rounds = 0;  // engine rounds spent by this round's evaluations
  double bracket_lo = 0.0, bracket_hi = 1.0;
};

struct SearchResult {
  double alpha_star = 0.0;
  double value = 0.0;  // worst-case optimum at alpha_star
  std::vector<double> x;
  std::vector<double> worst_u;
  bool budget_infeasible = false;  // even alpha = 0 exceeds the budget
  int evaluations = 0;             // distinct value-function calls
  int total_inner = 0;
  double final_bracket = 0.0;
  std::vector<SearchTraceRow> trace;
  std::vector<std::string> warnings;
  std::map<int, double> probe_values;  // snapped grid index -> value
};

// Largest alpha (within the shrink schedule's resolution) whose robust
// optimum stays within the budget. The value function must be nondecreasing
// in alpha; violations beyond the tolerance disable pruning and are
// reported.
SearchResult solve_cl_igdt(const ValueFn& fn, double lambda,
                           const SearchOptions& opts = {});

std::string trace_csv_header();
std::string trace_csv_line(const SearchTraceRow& r);

}  // namespace robdn::search
