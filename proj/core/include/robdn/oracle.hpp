#pragma once

#include <map>
#include <vector>

#include "robdn/compact.hpp"
#include "robdn/search.hpp"
#include "robdn/uncertainty.hpp"

namespace robdn::oracle {

// Exact two-stage robust optimum by brute force: one recourse block per
// vertex of the uncertainty set inside a single MILP. The recourse value is
// convex in u, so the worst case over the polytope is attained at a vertex
// and the enumeration is exact. Only viable for small sets (the vertex count
// is exponential in the number of active components).
struct ExtensiveSolution {
  solver::Status status = solver::Status::Limit;
  double value = 0.0;
  std::vector<double> x;
  double recourse_worst = 0.0;
  std::vector<std::vector<double>> vertices;
  std::vector<double> vertex_recourse;  // c2'y_v at the reported optimum
  int worst_vertex = -1;
};

ExtensiveSolution extensive_solve(const compact::CompactTwoStageProblem& p,
                                  const uncertainty::GeneralizedSet& set,
                                  double mip_gap = 1e-6,
                                  double time_limit_s = 0.0);

// Reference answer for the certainty-level search: evaluates the value
// function at every grid point and returns the largest one within budget.
// Deliberately naive, meant only to certify the interval-shrink search.
struct GridScanResult {
  double alpha = 0.0;
  double value = 0.0;
  bool any_feasible = false;
  int evaluations = 0;
  std::map<int, double> values;  // grid index -> value
};

GridScanResult grid_search_alpha(const search::ValueFn& fn, double lambda,
                                 double h_alpha);

}  // namespace robdn::oracle
