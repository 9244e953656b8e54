#include "robdn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "robdn/common.hpp"

namespace robdn::evaluation {

using compact::CompactTwoStageProblem;
using nlohmann::json;
using uncertainty::GeneralizedSet;

EvaluationReport evaluate(const CompactTwoStageProblem& p,
                          const std::vector<double>& x,
                          const std::vector<std::vector<double>>& scenarios) {
  if (static_cast<int>(x.size()) != p.nx()) {
    throw InputError("evaluate: plan size mismatch");
  }
  EvaluationReport rep;
  rep.first_stage_cost = compact::first_stage_cost(p, x);
  rep.scenarios = static_cast<int>(scenarios.size());
  double sum = 0.0, sumsq = 0.0;
  int feasible = 0;
  for (const std::vector<double>& u : scenarios) {
    if (static_cast<int>(u.size()) != p.nu) {
      throw InputError("evaluate: scenario size mismatch");
    }
    compact::RecourseSolution rec = compact::recourse_value(p, x, u);
    if (rec.status != solver::Status::Optimal) {
      ++rep.infeasible;
      continue;
    }
    ++feasible;
    sum += rec.value;
    sumsq += rec.value * rec.value;
    rep.worst_recourse = std::max(rep.worst_recourse, rec.value);
    double pen = 0.0;
    for (int j : p.penalty_vars) pen += rec.y[j];
    if (pen > 1e-6) ++rep.penalized;
  }
  if (feasible > 0) {
    rep.mean_recourse = sum / feasible;
    if (feasible > 1) {
      double var =
          (sumsq - sum * sum / feasible) / static_cast<double>(feasible - 1);
      rep.std_recourse = std::sqrt(std::max(0.0, var));
    }
  }
  rep.total_cost = rep.first_stage_cost + rep.mean_recourse;
  return rep;
}

std::vector<std::vector<double>> sample_box(const std::vector<double>& lo,
                                            const std::vector<double>& hi,
                                            int count, unsigned seed) {
  if (lo.size() != hi.size()) throw InputError("sample_box: bound sizes");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> out(count,
                                       std::vector<double>(lo.size(), 0.0));
  for (int s = 0; s < count; ++s) {
    for (size_t i = 0; i < lo.size(); ++i) {
      out[s][i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    }
  }
  return out;
}

namespace {

// Normalized deviation of coordinate i at value v.
double coord_dev(const GeneralizedSet& set, int i, double v) {
  double c = set.center[i];
  if (v >= c) {
    double w = set.width_up(i);
    return w > 0 ? (v - c) / w : 0.0;
  }
  double w = set.width_dn(i);
  return w > 0 ? (c - v) / w : 0.0;
}

double line_usage(const GeneralizedSet& set, const std::vector<double>& x,
                  const std::vector<int>& active,
                  const std::vector<double>& d, double t) {
  double g = 0.0;
  for (size_t k = 0; k < active.size(); ++k) {
    int i = active[k];
    g += coord_dev(set, i, x[i] + t * d[k]);
  }
  return g;
}

}  // namespace

std::vector<std::vector<double>> sample_set(const GeneralizedSet& set,
                                            int count, unsigned seed) {
  const int n = set.dim();
  std::vector<int> active;
  for (int i = 0; i < n; ++i) {
    if (set.width_dn(i) + set.width_up(i) > 0) active.push_back(i);
  }
  if (active.empty() || count <= 0) {
    return std::vector<std::vector<double>>(count, set.center);
  }
  if (set.budget >= static_cast<double>(active.size()) - 1e-12) {
    return sample_box(set.lo, set.hi, count, seed);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<double> x = set.center;
  std::vector<double> d(active.size(), 0.0);
  auto step = [&]() {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& di : d) {
        di = gauss(rng);
        norm += di * di;
      }
    } while (norm < 1e-12);

    // Box segment through x along d.
    double t_lo = -kInf, t_hi = kInf;
    for (size_t k = 0; k < active.size(); ++k) {
      int i = active[k];
      if (d[k] == 0.0) continue;
      double a = (set.lo[i] - x[i]) / d[k];
      double b = (set.hi[i] - x[i]) / d[k];
      t_lo = std::max(t_lo, std::min(a, b));
      t_hi = std::min(t_hi, std::max(a, b));
    }
    if (!(t_lo < t_hi)) return;

    // The budget usage is piecewise linear in t with kinks where a
    // coordinate crosses its center; scan the breakpoints for the exact
    // segment where it stays within budget.
    std::vector<double> ts{t_lo, 0.0, t_hi};
    for (size_t k = 0; k < active.size(); ++k) {
      if (d[k] == 0.0) continue;
      double tk = (set.center[active[k]] - x[active[k]]) / d[k];
      if (tk > t_lo && tk < t_hi) ts.push_back(tk);
    }
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    std::vector<double> gs(ts.size());
    for (size_t k = 0; k < ts.size(); ++k) {
      gs[k] = line_usage(set, x, active, d, ts[k]);
    }
    size_t at0 = std::lower_bound(ts.begin(), ts.end(), 0.0) - ts.begin();
    at0 = std::min(at0, ts.size() - 1);
    double cap = set.budget + 1e-12;

    double left = ts[at0];
    for (size_t k = at0; k-- > 0;) {
      if (gs[k] <= cap) {
        left = ts[k];
        continue;
      }
      left = ts[k + 1] + (ts[k] - ts[k + 1]) * (cap - gs[k + 1]) /
                             (gs[k] - gs[k + 1]);
      break;
    }
    double right = ts[at0];
    for (size_t k = at0 + 1; k < ts.size(); ++k) {
      if (gs[k] <= cap) {
        right = ts[k];
        continue;
      }
      right = ts[k - 1] + (ts[k] - ts[k - 1]) * (cap - gs[k - 1]) /
                              (gs[k] - gs[k - 1]);
      break;
    }
    if (!(right > left)) return;

    double t = left + (right - left) * unit(rng);
    for (size_t k = 0; k < active.size(); ++k) {
      int i = active[k];
      x[i] = std::clamp(x[i] + t * d[k], set.lo[i], set.hi[i]);
    }
  };

  const int burn = 100 * static_cast<int>(active.size());
  const int stride = 2 * static_cast<int>(active.size());
  for (int s = 0; s < burn; ++s) step();
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    for (int j = 0; j < stride; ++j) step();
    out.push_back(x);
  }
  return out;
}

std::string scenarios_to_json(const std::vector<std::string>& u_names,
                              const std::vector<std::vector<double>>& rows,
                              unsigned seed) {
  json j;
  j["kind"] = "scenarios";
  j["seed"] = seed;
  j["u_names"] = u_names;
  json r = json::array();
  for (const std::vector<double>& row : rows) r.push_back(row);
  j["rows"] = std::move(r);
  return j.dump(2);
}

void scenarios_from_json(const std::string& text,
                         std::vector<std::string>* u_names,
                         std::vector<std::vector<double>>* rows,
                         unsigned* seed) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario file: ") + e.what());
  }
  if (j.value("kind", "") != "scenarios") {
    throw InputError("scenario file: kind must be \"scenarios\"");
  }
  if (u_names) *u_names = j.value("u_names", std::vector<std::string>{});
  if (seed) *seed = j.value("seed", 0u);
  if (rows) {
    rows->clear();
    for (const json& r : j.at("rows")) {
      rows->push_back(r.get<std::vector<double>>());
    }
  }
}

namespace {

search::ProbeOutcome probe_from(const ccg::CcgResult& r) {
  search::ProbeOutcome out;
  if (r.status == solver::Status::Optimal) {
    // The upper bound is what the returned plan certifiably achieves.
    out.value = r.upper < kInf ? r.upper : r.value;
  } else if (r.upper < kInf) {
    out.value = r.upper;
  } else {
    throw SolverError("worst-case evaluation failed: " +
                      std::string(solver::to_string(r.status)));
  }
  out.inner_rounds = static_cast<int>(r.rounds);
  out.x = r.x;
  out.worst_u = r.worst_u;
  return out;
}

}  // namespace

IgdtBaselineResult igdt_baseline(const CompactTwoStageProblem& p,
                                 const std::vector<double>& nominal_u,
                                 double lambda,
                                 const ccg::CcgOptions& ccg_opts,
                                 const search::SearchOptions& opts) {
  if (static_cast<int>(nominal_u.size()) != p.nu) {
    throw InputError("igdt_baseline: nominal point size mismatch");
  }
  auto box_at = [&](double delta) {
    std::vector<double> lo(nominal_u.size()), hi(nominal_u.size());
    for (size_t i = 0; i < nominal_u.size(); ++i) {
      double spread = delta * std::fabs(nominal_u[i]);
      lo[i] = nominal_u[i] - spread;
      hi[i] = nominal_u[i] + spread;
    }
    return uncertainty::make_generalized_set(
        nominal_u, lo, hi, static_cast<double>(nominal_u.size()));
  };
  ccg::CcgEngine engine(p, ccg_opts);
  search::ValueFn fn = [&](double delta) {
    return probe_from(engine.solve(box_at(delta), delta));
  };
  IgdtBaselineResult out;
  out.search = search::solve_cl_igdt(fn, lambda, opts);
  out.set_at_star = box_at(out.search.alpha_star);
  return out;
}

TsspBaselineResult tssp_baseline(const CompactTwoStageProblem& p,
                                 const GeneralizedSet& set, int n_scenarios,
                                 unsigned seed, double mip_gap,
                                 double time_limit_s) {
  if (n_scenarios <= 0) throw InputError("tssp_baseline: scenario count");
  std::vector<std::vector<double>> samples =
      sample_set(set, n_scenarios, seed);

  solver::Model m("tssp");
  for (int j = 0; j < p.nx(); ++j) {
    const bool bin = j < p.nx1;
    m.add_var(0.0, bin ? 1.0 : kInf,
              bin ? solver::VarKind::Binary : solver::VarKind::Continuous,
              p.c1[j], p.x_meta.empty() ? "" : p.x_meta[j].name);
  }
  std::vector<solver::Term> terms;
  for (const compact::FirstStageRow& row : p.first) {
    terms.clear();
    for (const compact::Entry& e : row.x) terms.push_back({e.idx, e.coef});
    m.add_row(solver::RowSense::Le, row.b, terms, row.name);
  }
  const double w = 1.0 / n_scenarios;
  for (const std::vector<double>& u : samples) {
    int base = m.num_vars();
    for (int j = 0; j < p.ny; ++j) {
      m.add_var(0.0, kInf, solver::VarKind::Continuous, w * p.c2[j], "");
    }
    for (const compact::SecondStageRow& row : p.second) {
      terms.clear();
      double rhs = row.d;
      for (const compact::Entry& e : row.x) terms.push_back({e.idx, e.coef});
      for (const compact::Entry& e : row.y)
        terms.push_back({base + e.idx, e.coef});
      for (const compact::Entry& e : row.u) rhs -= e.coef * u[e.idx];
      m.add_row(row.sense == compact::RowSense::Eq ? solver::RowSense::Eq
                                                   : solver::RowSense::Ge,
                rhs, terms, row.name);
    }
  }
  solver::SolveOutcome res =
      m.solve({.mip_gap = mip_gap, .time_limit_s = time_limit_s});
  TsspBaselineResult out;
  out.status = res.status;
  out.scenarios = n_scenarios;
  out.seed = seed;
  if (res.status != solver::Status::Optimal &&
      !(res.status == solver::Status::Limit && res.has_incumbent)) {
    return out;
  }
  out.objective = res.objective;
  out.x.assign(res.primal.begin(), res.primal.begin() + p.nx());
  return out;
}

std::string sweep_csv_header() {
  return "gamma,alpha_star,robust_value,first_stage_cost,mean_recourse,"
         "std_recourse,penalized,evaluations,total_inner";
}

std::string sweep_csv_line(const GammaSweepRow& r) {
  std::ostringstream os;
  os.precision(12);
  os << r.gamma << ',' << r.alpha_star << ',' << r.robust_value << ','
     << r.first_stage_cost << ',' << r.mean_recourse << ',' << r.std_recourse
     << ',' << r.penalized << ',' << r.evaluations << ',' << r.total_inner;
  return os.str();
}

}  // namespace robdn::evaluation
