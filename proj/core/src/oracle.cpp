#include "robdn/oracle.hpp"

#include <cmath>

#include "robdn/common.hpp"

namespace robdn::oracle {

using compact::CompactTwoStageProblem;
using compact::Entry;
using compact::SecondStageRow;

ExtensiveSolution extensive_solve(const CompactTwoStageProblem& p,
                                  const uncertainty::GeneralizedSet& set,
                                  double mip_gap, double time_limit_s) {
  if (set.dim() != p.nu) throw ModelError("extensive_solve: set dimension");
  if (p.nu > 12) {
    throw InputError("extensive enumeration limited to 12 components");
  }
  ExtensiveSolution out;
  out.vertices = set.vertices();
  if (out.vertices.empty()) {
    throw ModelError("extensive_solve: empty vertex list");
  }

  solver::Model m("extensive");
  for (int j = 0; j < p.nx(); ++j) {
    const bool bin = j < p.nx1;
    m.add_var(0.0, bin ? 1.0 : kInf,
              bin ? solver::VarKind::Binary : solver::VarKind::Continuous,
              p.c1[j], p.x_meta.empty() ? "" : p.x_meta[j].name);
  }
  std::vector<solver::Term> terms;
  for (const compact::FirstStageRow& row : p.first) {
    terms.clear();
    for (const Entry& e : row.x) terms.push_back({e.idx, e.coef});
    m.add_row(solver::RowSense::Le, row.b, terms, row.name);
  }
  int eta = m.add_var(-kInf, kInf, solver::VarKind::Continuous, 1.0, "eta");
  m.set_var_bounds(eta, p.recourse_lb, kInf);

  std::vector<int> y0(out.vertices.size());
  for (size_t v = 0; v < out.vertices.size(); ++v) {
    const std::vector<double>& u = out.vertices[v];
    int base = m.num_vars();
    y0[v] = base;
    for (int j = 0; j < p.ny; ++j) {
      m.add_var(0.0, kInf, solver::VarKind::Continuous, 0.0, "");
    }
    for (const SecondStageRow& row : p.second) {
      terms.clear();
      double rhs = row.d;
      for (const Entry& e : row.x) terms.push_back({e.idx, e.coef});
      for (const Entry& e : row.y) terms.push_back({base + e.idx, e.coef});
      for (const Entry& e : row.u) rhs -= e.coef * u[e.idx];
      m.add_row(row.sense == compact::RowSense::Eq ? solver::RowSense::Eq
                                                   : solver::RowSense::Ge,
                rhs, terms, row.name);
    }
    terms.clear();
    terms.push_back({eta, 1.0});
    for (int j = 0; j < p.ny; ++j) {
      if (p.c2[j] != 0.0) terms.push_back({base + j, -p.c2[j]});
    }
    m.add_row(solver::RowSense::Ge, 0.0, terms, "eta_cover");
  }

  solver::SolveOutcome res =
      m.solve({.mip_gap = mip_gap, .time_limit_s = time_limit_s});
  out.status = res.status;
  if (res.status != solver::Status::Optimal &&
      !(res.status == solver::Status::Limit && res.has_incumbent)) {
    return out;
  }
  out.value = res.objective;
  out.x.assign(res.primal.begin(), res.primal.begin() + p.nx());
  out.recourse_worst = res.primal[eta];
  out.vertex_recourse.resize(out.vertices.size());
  double worst = -kInf;
  for (size_t v = 0; v < out.vertices.size(); ++v) {
    double cost = 0.0;
    for (int j = 0; j < p.ny; ++j) cost += p.c2[j] * res.primal[y0[v] + j];
    out.vertex_recourse[v] = cost;
    if (cost > worst) {
      worst = cost;
      out.worst_vertex = static_cast<int>(v);
    }
  }
  return out;
}

GridScanResult grid_search_alpha(const search::ValueFn& fn, double lambda,
                                 double h_alpha) {
  if (h_alpha <= 0 || h_alpha > 0.5) {
    throw InputError("alpha grid step must lie in (0, 0.5]");
  }
  GridScanResult out;
  int grid = static_cast<int>(std::floor(1.0 / h_alpha + 1e-9));
  for (int k = 0; k <= grid; ++k) {
    double alpha = std::min(1.0, k * h_alpha);
    search::ProbeOutcome probe = fn(alpha);
    ++out.evaluations;
    out.values[k] = probe.value;
    if (probe.value <= lambda + 1e-9 * std::max(1.0, std::fabs(lambda))) {
      out.any_feasible = true;
      out.alpha = alpha;
      out.value = probe.value;
    }
  }
  return out;
}

}  // namespace robdn::oracle
