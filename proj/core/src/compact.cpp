#include "robdn/compact.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"
#include "robdn/common.hpp"

namespace robdn::compact {

using nlohmann::json;

void CompactTwoStageProblem::validate() const {
  auto fail = [](const std::string& m) { throw ModelError("compact: " + m); };
  if (nx1 < 0 || nx2 < 0 || ny < 0 || nu < 0) fail("negative dimension");
  if (static_cast<int>(c1.size()) != nx()) fail("c1 size mismatch");
  if (static_cast<int>(c2.size()) != ny) fail("c2 size mismatch");
  if (!x_meta.empty() && static_cast<int>(x_meta.size()) != nx())
    fail("x_meta size mismatch");
  if (!y_meta.empty() && static_cast<int>(y_meta.size()) != ny)
    fail("y_meta size mismatch");
  if (!u_names.empty() && static_cast<int>(u_names.size()) != nu)
    fail("u_names size mismatch");
  auto check_entries = [&](const std::vector<Entry>& es, int dim,
                           const std::string& what) {
    for (const Entry& e : es) {
      if (e.idx < 0 || e.idx >= dim) fail("index out of range in " + what);
      if (!std::isfinite(e.coef)) fail("non-finite coefficient in " + what);
    }
  };
  for (const auto& r : first) check_entries(r.x, nx(), "first-stage row " + r.name);
  for (const auto& r : second) {
    check_entries(r.x, nx(), "second-stage row " + r.name);
    check_entries(r.y, ny, "second-stage row " + r.name);
    check_entries(r.u, nu, "second-stage row " + r.name);
  }
  for (int j : penalty_vars) {
    if (j < 0 || j >= ny) fail("penalty index out of range");
    if (c2[j] < 0) fail("penalty variable with negative cost");
  }
  for (const auto& s : y_splits) {
    if (s.plus < 0 || s.plus >= ny || s.minus < 0 || s.minus >= ny)
      fail("split pair index out of range");
    if (std::abs(c2[s.plus] + c2[s.minus]) > 1e-12)
      fail("split pair costs are not opposite: " + s.name);
  }
}

InequalityView InequalityView::build(const CompactTwoStageProblem& p) {
  InequalityView v;
  v.rows_.reserve(p.second.size());
  for (int r = 0; r < static_cast<int>(p.second.size()); ++r) {
    v.rows_.push_back({r, +1});
    if (p.second[r].sense == RowSense::Eq) v.rows_.push_back({r, -1});
  }
  return v;
}

std::vector<double> InequalityView::apply_b2_transpose(
    const CompactTwoStageProblem& p, const std::vector<double>& pi) const {
  std::vector<double> out(p.ny, 0.0);
  for (int k = 0; k < size(); ++k) {
    if (pi[k] == 0.0) continue;
    const auto& vr = rows_[k];
    for (const Entry& e : p.second[vr.row].y)
      out[e.idx] += vr.sign * e.coef * pi[k];
  }
  return out;
}

std::vector<double> InequalityView::neg_e_transpose(
    const CompactTwoStageProblem& p, const std::vector<double>& pi) const {
  std::vector<double> out(p.nu, 0.0);
  for (int k = 0; k < size(); ++k) {
    if (pi[k] == 0.0) continue;
    const auto& vr = rows_[k];
    for (const Entry& e : p.second[vr.row].u)
      out[e.idx] -= vr.sign * e.coef * pi[k];
  }
  return out;
}

std::vector<double> InequalityView::rhs_minus_b1x(
    const CompactTwoStageProblem& p, const std::vector<double>& x) const {
  std::vector<double> out(size(), 0.0);
  for (int k = 0; k < size(); ++k) {
    const auto& vr = rows_[k];
    const SecondStageRow& row = p.second[vr.row];
    double v = row.d;
    for (const Entry& e : row.x) v -= e.coef * x[e.idx];
    out[k] = vr.sign * v;
  }
  return out;
}

std::vector<double> InequalityView::e_row(const CompactTwoStageProblem& p,
                                          int view_row,
                                          std::vector<double>* scratch) const {
  std::vector<double> local;
  std::vector<double>& out = scratch ? *scratch : local;
  out.assign(p.nu, 0.0);
  const auto& vr = rows_[view_row];
  for (const Entry& e : p.second[vr.row].u) out[e.idx] += vr.sign * e.coef;
  return out;
}

namespace {

double row_rhs_at(const SecondStageRow& row, const std::vector<double>& x,
                  const std::vector<double>& u) {
  double rhs = row.d;
  for (const Entry& e : row.x) rhs -= e.coef * x[e.idx];
  for (const Entry& e : row.u) rhs -= e.coef * u[e.idx];
  return rhs;
}

}  // namespace

RecourseSolution recourse_value(const CompactTwoStageProblem& p,
                                const std::vector<double>& x,
                                const std::vector<double>& u, bool want_duals,
                                const std::string& lp_dump_path) {
  if (static_cast<int>(x.size()) != p.nx())
    throw ModelError("recourse_value: x size mismatch");
  if (static_cast<int>(u.size()) != p.nu)
    throw ModelError("recourse_value: u size mismatch");

  solver::Model m("recourse");
  for (int j = 0; j < p.ny; ++j)
    m.add_var(0.0, kInf, solver::VarKind::Continuous, p.c2[j],
              p.y_meta.empty() ? "" : p.y_meta[j].name);
  std::vector<solver::Term> terms;
  for (const SecondStageRow& row : p.second) {
    terms.clear();
    for (const Entry& e : row.y) terms.push_back({e.idx, e.coef});
    m.add_row(row.sense == RowSense::Eq ? solver::RowSense::Eq
                                        : solver::RowSense::Ge,
              row_rhs_at(row, x, u), terms, row.name);
  }
  solver::SolveOptions opts;
  opts.lp_dump_path = lp_dump_path;
  solver::SolveOutcome res = m.solve(opts);

  RecourseSolution out;
  out.status = res.status;
  if (res.status != solver::Status::Optimal) return out;
  out.value = res.objective;
  out.y = std::move(res.primal);
  if (want_duals) {
    InequalityView view = InequalityView::build(p);
    out.view_duals.resize(view.size(), 0.0);
    for (int k = 0; k < view.size(); ++k) {
      const double lambda = res.duals[view[k].row];
      const double signed_dual = view[k].sign * lambda;
      out.view_duals[k] = std::max(signed_dual, 0.0);
    }
  }
  return out;
}

std::string diagnose_recourse_infeasibility(const CompactTwoStageProblem& p,
                                            const std::vector<double>& x,
                                            const std::vector<double>& u,
                                            int max_rows) {
  // Elastic relaxation: one artificial slack per row, minimize total slack;
  // the rows with positive slack are the irreducibly violated ones.
  solver::Model m("recourse_elastic");
  for (int j = 0; j < p.ny; ++j)
    m.add_var(0.0, kInf, solver::VarKind::Continuous, 0.0);
  std::vector<int> slack_of(p.second.size());
  for (std::size_t r = 0; r < p.second.size(); ++r)
    slack_of[r] = m.add_var(0.0, kInf, solver::VarKind::Continuous, 1.0);
  std::vector<solver::Term> terms;
  for (std::size_t r = 0; r < p.second.size(); ++r) {
    const SecondStageRow& row = p.second[r];
    terms.clear();
    for (const Entry& e : row.y) terms.push_back({e.idx, e.coef});
    if (row.sense == RowSense::Ge) {
      terms.push_back({slack_of[r], 1.0});
      m.add_row(solver::RowSense::Ge, row_rhs_at(row, x, u), terms, row.name);
    } else {
      // |violation| for an equality needs slack in both directions.
      const int s2 = m.add_var(0.0, kInf, solver::VarKind::Continuous, 1.0);
      terms.push_back({slack_of[r], 1.0});
      terms.push_back({s2, -1.0});
      m.add_row(solver::RowSense::Eq, row_rhs_at(row, x, u), terms, row.name);
    }
  }
  solver::SolveOutcome res = m.solve();
  std::ostringstream os;
  if (res.status != solver::Status::Optimal) {
    os << "elastic diagnosis failed (" << solver::to_string(res.status) << ")";
    return os.str();
  }
  os << "total violation " << res.objective << ";";
  std::vector<std::pair<double, std::size_t>> bad;
  for (std::size_t r = 0; r < p.second.size(); ++r) {
    double s = res.primal[slack_of[r]];
    if (s > kTol) bad.emplace_back(s, r);
  }
  std::sort(bad.rbegin(), bad.rend());
  int shown = 0;
  for (const auto& [s, r] : bad) {
    if (shown++ >= max_rows) break;
    os << " [" << (p.second[r].name.empty() ? ("row" + std::to_string(r))
                                            : p.second[r].name)
       << " violated by " << s << "]";
  }
  return os.str();
}

double max_residual(const CompactTwoStageProblem& p,
                    const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<double>& u) {
  double worst = 0.0;
  auto note = [&](double violation) { worst = std::max(worst, violation); };
  for (int j = 0; j < p.nx(); ++j) {
    note(-x[j]);
    if (j < p.nx1) note(std::min(std::abs(x[j]), std::abs(x[j] - 1.0)));
  }
  for (int j = 0; j < p.ny; ++j) note(-y[j]);
  for (const FirstStageRow& row : p.first) {
    double lhs = 0.0;
    for (const Entry& e : row.x) lhs += e.coef * x[e.idx];
    note(lhs - row.b);
  }
  for (const SecondStageRow& row : p.second) {
    double lhs = 0.0;
    for (const Entry& e : row.x) lhs += e.coef * x[e.idx];
    for (const Entry& e : row.y) lhs += e.coef * y[e.idx];
    for (const Entry& e : row.u) lhs += e.coef * u[e.idx];
    if (row.sense == RowSense::Ge)
      note(row.d - lhs);
    else
      note(std::abs(lhs - row.d));
  }
  return worst;
}

double first_stage_cost(const CompactTwoStageProblem& p,
                        const std::vector<double>& x) {
  double v = 0.0;
  for (int j = 0; j < p.nx(); ++j) v += p.c1[j] * x[j];
  return v;
}

namespace {

void add_first_stage(const CompactTwoStageProblem& p, solver::Model& m) {
  for (int j = 0; j < p.nx(); ++j) {
    const bool bin = j < p.nx1;
    m.add_var(0.0, bin ? 1.0 : kInf,
              bin ? solver::VarKind::Binary : solver::VarKind::Continuous, 0.0,
              p.x_meta.empty() ? "" : p.x_meta[j].name);
  }
  std::vector<solver::Term> terms;
  for (const FirstStageRow& row : p.first) {
    terms.clear();
    for (const Entry& e : row.x) terms.push_back({e.idx, e.coef});
    m.add_row(solver::RowSense::Le, row.b, terms, row.name);
  }
}

}  // namespace

RecourseCheckReport check_relatively_complete_recourse(
    const CompactTwoStageProblem& p, const std::vector<double>& u_lo,
    const std::vector<double>& u_hi, int samples, unsigned seed) {
  RecourseCheckReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::ostringstream detail;
  for (int s = 0; s < samples; ++s) {
    solver::Model m("x_sample");
    add_first_stage(p, m);
    for (int j = 0; j < p.nx(); ++j)
      m.set_obj_coef(j, 2.0 * unit(rng) - 1.0);
    solver::SolveOutcome res = m.solve({.mip_gap = 1e-4});
    if (res.status == solver::Status::Unbounded) {
      // Rays exist (e.g. paired flow variables); nonnegative costs restore
      // boundedness while still exercising varied vertices.
      solver::Model m2("x_sample");
      add_first_stage(p, m2);
      for (int j = 0; j < p.nx(); ++j) m2.set_obj_coef(j, unit(rng));
      res = m2.solve({.mip_gap = 1e-4});
    }
    if (res.status != solver::Status::Optimal)
      throw ModelError("first-stage sampling failed: " +
                       std::string(solver::to_string(res.status)));
    std::vector<double> u(p.nu);
    for (int i = 0; i < p.nu; ++i)
      u[i] = u_lo[i] + (u_hi[i] - u_lo[i]) * unit(rng);
    RecourseSolution rec = recourse_value(p, res.primal, u);
    ++rep.samples;
    if (rec.status != solver::Status::Optimal) {
      ++rep.infeasible;
      rep.ok = false;
      if (rep.infeasible <= 3)
        detail << "[sample " << s << ": "
               << diagnose_recourse_infeasibility(p, res.primal, u) << "] ";
      continue;
    }
    double pen = 0.0;
    for (int j : p.penalty_vars) pen += rec.y[j];
    rep.max_penalty = std::max(rep.max_penalty, pen);
  }
  rep.detail = detail.str();
  return rep;
}

namespace {

json entries_to_coo(const std::vector<Entry>& es, int row) {
  json arr = json::array();
  for (const Entry& e : es) arr.push_back({row, e.idx, e.coef});
  return arr;
}

}  // namespace

std::string to_json(const CompactTwoStageProblem& p) {
  json j;
  j["kind"] = "compact_two_stage";
  j["nx1"] = p.nx1;
  j["nx2"] = p.nx2;
  j["ny"] = p.ny;
  j["nu"] = p.nu;
  j["c1"] = p.c1;
  j["c2"] = p.c2;
  j["recourse_lb"] = p.recourse_lb;
  json first = json::object();
  {
    json coo = json::array();
    json b = json::array(), names = json::array();
    for (int r = 0; r < static_cast<int>(p.first.size()); ++r) {
      for (const auto& t : entries_to_coo(p.first[r].x, r)) coo.push_back(t);
      b.push_back(p.first[r].b);
      names.push_back(p.first[r].name);
    }
    first["rows"] = p.first.size();
    first["a"] = coo;
    first["b"] = b;
    first["names"] = names;
  }
  j["first"] = first;
  json second = json::object();
  {
    json b1 = json::array(), b2 = json::array(), e = json::array();
    json d = json::array(), sense = json::array(), names = json::array();
    for (int r = 0; r < static_cast<int>(p.second.size()); ++r) {
      const auto& row = p.second[r];
      for (const auto& t : entries_to_coo(row.x, r)) b1.push_back(t);
      for (const auto& t : entries_to_coo(row.y, r)) b2.push_back(t);
      for (const auto& t : entries_to_coo(row.u, r)) e.push_back(t);
      d.push_back(row.d);
      sense.push_back(row.sense == RowSense::Ge ? "ge" : "eq");
      names.push_back(row.name);
    }
    second["rows"] = p.second.size();
    second["b1"] = b1;
    second["b2"] = b2;
    second["e"] = e;
    second["d"] = d;
    second["sense"] = sense;
    second["names"] = names;
  }
  j["second"] = second;
  auto meta_names = [](const std::vector<VarMeta>& ms) {
    json a = json::array();
    for (const auto& m : ms) a.push_back(m.name);
    return a;
  };
  j["x_names"] = meta_names(p.x_meta);
  json ymeta = json::array();
  for (const auto& m : p.y_meta) {
    json e;
    e["name"] = m.name;
    if (std::isfinite(m.implied_ub)) e["implied_ub"] = m.implied_ub;
    if (m.u_index >= 0) {
      e["u_index"] = m.u_index;
      e["u_scale"] = m.u_scale;
    }
    ymeta.push_back(e);
  }
  j["y_meta"] = ymeta;
  j["u_names"] = p.u_names;
  json splits = json::array();
  for (const auto& s : p.y_splits) {
    json e;
    e["plus"] = s.plus;
    e["minus"] = s.minus;
    e["name"] = s.name;
    if (std::isfinite(s.diff_lo)) e["diff_lo"] = s.diff_lo;
    if (std::isfinite(s.diff_hi)) e["diff_hi"] = s.diff_hi;
    splits.push_back(e);
  }
  j["y_splits"] = splits;
  j["penalty_vars"] = p.penalty_vars;
  return j.dump(2);
}

CompactTwoStageProblem problem_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("bad problem JSON: ") + e.what());
  }
  if (j.value("kind", "") != "compact_two_stage")
    throw InputError("problem JSON: unexpected kind");
  CompactTwoStageProblem p;
  p.nx1 = j.at("nx1").get<int>();
  p.nx2 = j.at("nx2").get<int>();
  p.ny = j.at("ny").get<int>();
  p.nu = j.at("nu").get<int>();
  p.c1 = j.at("c1").get<std::vector<double>>();
  p.c2 = j.at("c2").get<std::vector<double>>();
  p.recourse_lb = j.value("recourse_lb", 0.0);
  {
    const json& f = j.at("first");
    p.first.resize(f.at("rows").get<int>());
    const auto b = f.at("b").get<std::vector<double>>();
    const auto names = f.at("names").get<std::vector<std::string>>();
    for (std::size_t r = 0; r < p.first.size(); ++r) {
      p.first[r].b = b[r];
      p.first[r].name = names[r];
    }
    for (const auto& t : f.at("a"))
      p.first[t[0].get<int>()].x.push_back(
          {t[1].get<int>(), t[2].get<double>()});
  }
  {
    const json& s = j.at("second");
    p.second.resize(s.at("rows").get<int>());
    const auto d = s.at("d").get<std::vector<double>>();
    const auto sense = s.at("sense").get<std::vector<std::string>>();
    const auto names = s.at("names").get<std::vector<std::string>>();
    for (std::size_t r = 0; r < p.second.size(); ++r) {
      p.second[r].d = d[r];
      p.second[r].sense = sense[r] == "eq" ? RowSense::Eq : RowSense::Ge;
      p.second[r].name = names[r];
    }
    for (const auto& t : s.at("b1"))
      p.second[t[0].get<int>()].x.push_back(
          {t[1].get<int>(), t[2].get<double>()});
    for (const auto& t : s.at("b2"))
      p.second[t[0].get<int>()].y.push_back(
          {t[1].get<int>(), t[2].get<double>()});
    for (const auto& t : s.at("e"))
      p.second[t[0].get<int>()].u.push_back(
          {t[1].get<int>(), t[2].get<double>()});
  }
  for (const auto& n : j.value("x_names", std::vector<std::string>{})) {
    VarMeta m;
    m.name = n;
    m.implied_ub = kInf;
    p.x_meta.push_back(m);
  }
  if (j.contains("y_meta")) {
    for (const auto& e : j["y_meta"]) {
      VarMeta m;
      m.name = e.value("name", "");
      m.implied_ub = e.contains("implied_ub") ? e["implied_ub"].get<double>()
                                              : kInf;
      m.u_index = e.value("u_index", -1);
      m.u_scale = e.value("u_scale", 0.0);
      p.y_meta.push_back(m);
    }
  }
  p.u_names = j.value("u_names", std::vector<std::string>{});
  if (j.contains("y_splits")) {
    for (const auto& e : j["y_splits"]) {
      SplitPair s;
      s.plus = e.at("plus").get<int>();
      s.minus = e.at("minus").get<int>();
      s.diff_lo = e.contains("diff_lo") ? e["diff_lo"].get<double>() : -kInf;
      s.diff_hi = e.contains("diff_hi") ? e["diff_hi"].get<double>() : kInf;
      s.name = e.value("name", "");
      p.y_splits.push_back(s);
    }
  }
  p.penalty_vars = j.value("penalty_vars", std::vector<int>{});
  p.validate();
  return p;
}

DeterministicSolution deterministic_solve(const CompactTwoStageProblem& p,
                                          const std::vector<double>& u,
                                          double mip_gap,
                                          double time_limit_s) {
  if (static_cast<int>(u.size()) != p.nu)
    throw ModelError("deterministic_solve: u size mismatch");
  solver::Model m("deterministic");
  add_first_stage(p, m);
  for (int j = 0; j < p.nx(); ++j) m.set_obj_coef(j, p.c1[j]);
  std::vector<int> yvar(p.ny);
  for (int j = 0; j < p.ny; ++j)
    yvar[j] = m.add_var(0.0, kInf, solver::VarKind::Continuous, p.c2[j],
                        p.y_meta.empty() ? "" : p.y_meta[j].name);
  std::vector<solver::Term> terms;
  for (const SecondStageRow& row : p.second) {
    terms.clear();
    double rhs = row.d;
    for (const Entry& e : row.x) terms.push_back({e.idx, e.coef});
    for (const Entry& e : row.y) terms.push_back({yvar[e.idx], e.coef});
    for (const Entry& e : row.u) rhs -= e.coef * u[e.idx];
    m.add_row(row.sense == RowSense::Eq ? solver::RowSense::Eq
                                        : solver::RowSense::Ge,
              rhs, terms, row.name);
  }
  solver::SolveOutcome res =
      m.solve({.mip_gap = mip_gap, .time_limit_s = time_limit_s});
  DeterministicSolution out;
  out.status = res.status;
  if (res.status != solver::Status::Optimal &&
      !(res.status == solver::Status::Limit && res.has_incumbent))
    return out;
  out.objective = res.objective;
  out.x.assign(res.primal.begin(), res.primal.begin() + p.nx());
  out.y.assign(res.primal.begin() + p.nx(), res.primal.end());
  return out;
}

}  // namespace robdn::compact
