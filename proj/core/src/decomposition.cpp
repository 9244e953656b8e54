#include "robdn/decomposition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "robdn/common.hpp"

namespace robdn::ccg {

using compact::CompactTwoStageProblem;
using compact::Entry;
using compact::InequalityView;
using compact::SecondStageRow;
using uncertainty::GeneralizedSet;

Master::Master(const CompactTwoStageProblem& p, const CcgOptions& opts)
    : p_(p), opts_(opts), model_("master") {
  for (int j = 0; j < p.nx(); ++j) {
    const bool bin = j < p.nx1;
    model_.add_var(0.0, bin ? 1.0 : kInf,
                   bin ? solver::VarKind::Binary : solver::VarKind::Continuous,
                   p.c1[j], p.x_meta.empty() ? "" : p.x_meta[j].name);
  }
  // Worst-case recourse estimate; its floor is the certified lower bound on
  // any recourse objective (not zero: adjustment credits can be negative).
  eta_ = model_.add_var(p.recourse_lb, kInf, solver::VarKind::Continuous, 1.0,
                        "eta");
  std::vector<solver::Term> terms;
  for (const auto& row : p.first) {
    terms.clear();
    for (const Entry& e : row.x) terms.push_back({e.idx, e.coef});
    model_.add_row(solver::RowSense::Le, row.b, terms, row.name);
  }
}

void Master::add_cut(const OptimalityCut& cut) {
  const int base = model_.num_vars();
  for (int j = 0; j < p_.ny; ++j)
    model_.add_var(0.0, kInf, solver::VarKind::Continuous, 0.0);
  std::vector<solver::Term> terms;
  for (const SecondStageRow& row : p_.second) {
    terms.clear();
    double rhs = row.d;
    for (const Entry& e : row.x) terms.push_back({e.idx, e.coef});
    for (const Entry& e : row.y) terms.push_back({base + e.idx, e.coef});
    for (const Entry& e : row.u) rhs -= e.coef * cut.u[e.idx];
    model_.add_row(row.sense == compact::RowSense::Eq ? solver::RowSense::Eq
                                                      : solver::RowSense::Ge,
                   rhs, terms);
  }
  terms.clear();
  terms.push_back({eta_, 1.0});
  for (int j = 0; j < p_.ny; ++j)
    if (p_.c2[j] != 0.0) terms.push_back({base + j, -p_.c2[j]});
  model_.add_row(solver::RowSense::Ge, 0.0, terms);
  ++n_cuts_;
}

Master::Solution Master::solve(double mip_gap_override) {
  solver::SolveOptions so;
  so.mip_gap = mip_gap_override > 0 ? mip_gap_override : opts_.mip_gap;
  so.time_limit_s = opts_.time_limit_s;
  if (!opts_.lp_dump_dir.empty())
    so.lp_dump_path = opts_.lp_dump_dir + "/master_" +
                      std::to_string(n_cuts_) + ".lp";
  solver::SolveOutcome res = model_.solve(so);
  Solution out;
  out.status = res.status;
  if (res.status != solver::Status::Optimal) return out;
  out.objective = res.objective;
  out.eta = res.primal[eta_];
  out.x.assign(res.primal.begin(), res.primal.begin() + p_.nx());
  return out;
}

namespace {

struct Interval {
  double lo = 0.0, hi = 0.0;
  void add_scaled(double coef, double vlo, double vhi) {
    const double a = coef * vlo, b = coef * vhi;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
};

// Per-y lookup of the split pair it belongs to (index into y_splits, or -1).
std::vector<int> pair_lookup(const CompactTwoStageProblem& p) {
  std::vector<int> of(p.ny, -1);
  for (int s = 0; s < static_cast<int>(p.y_splits.size()); ++s) {
    of[p.y_splits[s].plus] = s;
    of[p.y_splits[s].minus] = s;
  }
  return of;
}

// Slack range of a Ge structural row over y >= 0 (with implied/pair bounds)
// and u in the set's box, with x already folded into rhs.
Interval slack_interval(const CompactTwoStageProblem& p,
                        const SecondStageRow& row, double rhs,
                        const GeneralizedSet& set,
                        const std::vector<int>& pair_of) {
  Interval iv;
  iv.lo = -rhs;
  iv.hi = -rhs;
  // Group exact-opposite pair members so their joint range is the (much
  // tighter) difference range instead of two one-sided infinities.
  std::vector<char> handled(row.y.size(), 0);
  for (std::size_t a = 0; a < row.y.size(); ++a) {
    if (handled[a]) continue;
    const Entry& ea = row.y[a];
    const int s = pair_of[ea.idx];
    bool paired = false;
    if (s >= 0) {
      for (std::size_t b = a + 1; b < row.y.size() && !paired; ++b) {
        if (handled[b]) continue;
        const Entry& eb = row.y[b];
        if (pair_of[eb.idx] == s && std::abs(ea.coef + eb.coef) < 1e-12) {
          const auto& sp = p.y_splits[s];
          // coef applies to (plus - minus); orient by which member ea is.
          const double c = ea.idx == sp.plus ? ea.coef : -ea.coef;
          iv.add_scaled(c, sp.diff_lo, sp.diff_hi);
          handled[a] = handled[b] = 1;
          paired = true;
        }
      }
    }
    if (!paired) {
      const double ub =
          p.y_meta.empty() ? kInf : p.y_meta[ea.idx].implied_ub;
      iv.add_scaled(ea.coef, 0.0, ub);
      handled[a] = 1;
    }
  }
  for (const Entry& e : row.u) iv.add_scaled(e.coef, set.lo[e.idx], set.hi[e.idx]);
  return iv;
}

enum class RowMode {
  EqualityDual,   // one free multiplier shared by the two view copies
  EqualityMirror, // negated copy of an equality; no variable of its own
  NeverBinding,   // pi fixed to zero
  AlwaysBinding,  // slack identically zero: pi in [0, cap], no binary
  Binary          // needs an activation binary
};

}  // namespace

SubproblemResult solve_subproblem(const CompactTwoStageProblem& p,
                                  const InequalityView& view,
                                  const std::vector<double>& x,
                                  const GeneralizedSet& set,
                                  const CcgOptions& opts) {
  const int R = view.size();
  const std::vector<double> rhs = view.rhs_minus_b1x(p, x);
  const std::vector<int> pair_of = pair_lookup(p);

  // Classify view rows once; intervals do not change across escalations.
  std::vector<RowMode> mode(R);
  std::vector<double> slack_hi(R, 0.0);
  for (int k = 0; k < R; ++k) {
    const auto& vr = view[k];
    if (p.second[vr.row].sense == compact::RowSense::Eq) {
      // build() emits the +1 copy first, then the -1 copy of the same row.
      mode[k] = vr.sign > 0 ? RowMode::EqualityDual : RowMode::EqualityMirror;
      continue;
    }
    const Interval iv =
        slack_interval(p, p.second[vr.row], rhs[k], set, pair_of);
    if (iv.lo > kTol)
      mode[k] = RowMode::NeverBinding;
    else if (iv.hi < kTol)
      mode[k] = RowMode::AlwaysBinding;
    else {
      mode[k] = RowMode::Binary;
      slack_hi[k] = iv.hi;
    }
  }

  std::vector<double> m_pi(R, opts.big_m_fallback);
  std::vector<double> m_slack(R, 0.0);
  std::vector<char> slack_fb(R, 0), y_fb(p.ny, 0);
  for (int k = 0; k < R; ++k)
    if (mode[k] == RowMode::Binary) {
      slack_fb[k] = !std::isfinite(slack_hi[k]);
      m_slack[k] = slack_fb[k] ? opts.big_m_fallback : 1.01 * slack_hi[k] + 1.0;
    }
  std::vector<double> m_y(p.ny), m_rc(p.ny, opts.big_m_fallback);
  for (int j = 0; j < p.ny; ++j) {
    const double ub = p.y_meta.empty() ? kInf : p.y_meta[j].implied_ub;
    y_fb[j] = !std::isfinite(ub);
    m_y[j] = y_fb[j] ? opts.big_m_fallback : 1.01 * ub + 1.0;
  }

  SubproblemResult out;
  double prev_obj = std::nan("");
  for (int attempt = 0;; ++attempt) {
    solver::Model m("worst_case");
    m.set_obj_sense(solver::ObjSense::Max);

    std::vector<int> uv(p.nu), ed(p.nu, -1), eu(p.nu, -1);
    for (int i = 0; i < p.nu; ++i) {
      uv[i] = m.add_var(set.lo[i], set.hi[i], solver::VarKind::Continuous, 0.0,
                        p.u_names.empty() ? "" : p.u_names[i]);
      if (set.width_dn(i) > 0)
        ed[i] = m.add_var(0.0, 1.0, solver::VarKind::Continuous);
      if (set.width_up(i) > 0)
        eu[i] = m.add_var(0.0, 1.0, solver::VarKind::Continuous);
    }
    std::vector<int> yv(p.ny);
    for (int j = 0; j < p.ny; ++j)
      yv[j] = m.add_var(0.0, kInf, solver::VarKind::Continuous, p.c2[j],
                        p.y_meta.empty() ? "" : p.y_meta[j].name);
    std::vector<int> piv(R, -1);
    for (int k = 0; k < R; ++k) {
      if (mode[k] == RowMode::EqualityDual)
        piv[k] = m.add_var(-m_pi[k], m_pi[k], solver::VarKind::Continuous);
      else if (mode[k] == RowMode::Binary || mode[k] == RowMode::AlwaysBinding)
        piv[k] = m.add_var(0.0, m_pi[k], solver::VarKind::Continuous);
    }
    std::vector<int> wv(R, -1), vv(p.ny, -1);
    int binaries = 0;
    for (int k = 0; k < R; ++k)
      if (mode[k] == RowMode::Binary) {
        wv[k] = m.add_var(0.0, 1.0, solver::VarKind::Binary);
        ++binaries;
      }
    for (int j = 0; j < p.ny; ++j)
      if (pair_of[j] < 0) {
        vv[j] = m.add_var(0.0, 1.0, solver::VarKind::Binary);
        ++binaries;
      }
    out.binaries = binaries;

    std::vector<solver::Term> terms;
    // Deviation coordinates: u = center - wd .* eps_dn + wu .* eps_up.
    for (int i = 0; i < p.nu; ++i) {
      if (ed[i] < 0 && eu[i] < 0) continue;
      terms.clear();
      terms.push_back({uv[i], 1.0});
      if (ed[i] >= 0) terms.push_back({ed[i], set.width_dn(i)});
      if (eu[i] >= 0) terms.push_back({eu[i], -set.width_up(i)});
      m.add_row(solver::RowSense::Eq, set.center[i], terms);
    }
    terms.clear();
    for (int i = 0; i < p.nu; ++i) {
      if (ed[i] >= 0) terms.push_back({ed[i], 1.0});
      if (eu[i] >= 0) terms.push_back({eu[i], 1.0});
    }
    if (!terms.empty())
      m.add_row(solver::RowSense::Le, set.budget, terms, "budget");

    // Primal feasibility at the chosen u (original senses, x folded into
    // the right-hand side): B2 y + E u {>=,=} d - B1 x.
    for (const SecondStageRow& row : p.second) {
      terms.clear();
      double b = row.d;
      for (const Entry& e : row.x) b -= e.coef * x[e.idx];
      for (const Entry& e : row.y) terms.push_back({yv[e.idx], e.coef});
      for (const Entry& e : row.u) terms.push_back({uv[e.idx], e.coef});
      m.add_row(row.sense == compact::RowSense::Eq ? solver::RowSense::Eq
                                                   : solver::RowSense::Ge,
                b, terms, row.name);
    }

    // Dual feasibility: (B2^T pi)_j <= c2_j on view rows.
    std::vector<std::vector<solver::Term>> dual_terms(p.ny);
    for (int k = 0; k < R; ++k) {
      if (piv[k] < 0) continue;
      const auto& vr = view[k];
      for (const Entry& e : p.second[vr.row].y)
        dual_terms[e.idx].push_back({piv[k], vr.sign * e.coef});
    }
    for (int j = 0; j < p.ny; ++j)
      m.add_row(solver::RowSense::Le, p.c2[j], dual_terms[j]);

    // Complementarity: binding indicator w per genuine inequality.
    for (int k = 0; k < R; ++k) {
      if (mode[k] != RowMode::Binary) continue;
      const auto& vr = view[k];
      m.add_row(solver::RowSense::Le, 0.0,
                std::vector<solver::Term>{{piv[k], 1.0}, {wv[k], -m_pi[k]}});
      terms.clear();
      for (const Entry& e : p.second[vr.row].y)
        terms.push_back({yv[e.idx], e.coef});
      for (const Entry& e : p.second[vr.row].u)
        terms.push_back({uv[e.idx], e.coef});
      terms.push_back({wv[k], m_slack[k]});
      m.add_row(solver::RowSense::Le, m_slack[k] + rhs[k], terms);
    }
    // Complementarity: support indicator v per unpaired variable. Paired
    // variables have identically zero reduced costs (their dual rows are
    // exact negatives), so activity never needs a switch there.
    for (int j = 0; j < p.ny; ++j) {
      if (vv[j] < 0) continue;
      m.add_row(solver::RowSense::Le, 0.0,
                std::vector<solver::Term>{{yv[j], 1.0}, {vv[j], -m_y[j]}});
      // c2_j - (B2^T pi)_j <= Mrc (1 - v_j)
      terms = dual_terms[j];
      for (auto& t : terms) t.coef = -t.coef;
      terms.push_back({vv[j], m_rc[j]});
      m.add_row(solver::RowSense::Le, m_rc[j] - p.c2[j], terms);
    }

    solver::SolveOptions so;
    so.mip_gap = opts.mip_gap;
    so.time_limit_s = opts.time_limit_s;
    if (!opts.lp_dump_dir.empty())
      so.lp_dump_path = opts.lp_dump_dir + "/subproblem.lp";
    solver::SolveOutcome res = m.solve(so);
    if (res.status == solver::Status::Infeasible) {
      // Undersized ceilings only ever shrink the switched system (the
      // implication constraints are exact on the forced side), so outright
      // infeasibility is clipping in its extreme form: widen every
      // fallback-based constant and retry.
      for (double& v : m_pi) v *= 10;
      for (double& v : m_rc) v *= 10;
      for (int k = 0; k < R; ++k)
        if (slack_fb[k]) m_slack[k] *= 10;
      for (int j = 0; j < p.ny; ++j)
        if (y_fb[j]) m_y[j] *= 10;
      prev_obj = std::nan("");
    } else if (res.status != solver::Status::Optimal) {
      throw LimitError("worst-case subproblem: " +
                       std::string(solver::to_string(res.status)));
    } else {
      out.u.resize(p.nu);
      for (int i = 0; i < p.nu; ++i) out.u[i] = res.primal[uv[i]];

      // Saturation audit: a multiplier or switched quantity pressing against
      // its ceiling suggests the linearization clipped the true optimum.
      bool saturated = false;
      for (int k = 0; k < R; ++k) {
        if (piv[k] >= 0 &&
            std::abs(res.primal[piv[k]]) > m_pi[k] * (1 - 1e-4)) {
          m_pi[k] *= 10;
          saturated = true;
        }
        if (mode[k] == RowMode::Binary && res.primal[wv[k]] < 0.5) {
          const auto& vr = view[k];
          double slack = -rhs[k];
          for (const Entry& e : p.second[vr.row].y)
            slack += e.coef * res.primal[yv[e.idx]];
          for (const Entry& e : p.second[vr.row].u)
            slack += e.coef * res.primal[uv[e.idx]];
          if (slack > m_slack[k] * (1 - 1e-4)) {
            m_slack[k] *= 10;
            saturated = true;
          }
        }
      }
      for (int j = 0; j < p.ny; ++j) {
        if (vv[j] < 0) continue;
        if (res.primal[yv[j]] > m_y[j] * (1 - 1e-4)) {
          m_y[j] *= 10;
          saturated = true;
        }
        if (res.primal[vv[j]] < 0.5) {
          double rc = p.c2[j];
          for (const solver::Term& t : dual_terms[j])
            rc -= t.coef * res.primal[t.var];
          if (rc > m_rc[j] * (1 - 1e-4)) {
            m_rc[j] *= 10;
            saturated = true;
          }
        }
      }
      if (saturated && !std::isnan(prev_obj) &&
          std::abs(res.objective - prev_obj) <=
              1e-6 * std::max(1.0, std::abs(res.objective))) {
        // The flagged ceilings already grew tenfold and the optimum did not
        // move: those quantities are parked on a degenerate optimal face,
        // not clipped by their bounds.
        saturated = false;
      }
      prev_obj = res.objective;
      if (!saturated) {
        // The switched system locates the worst scenario; the plain recourse
        // LP at that point supplies the exact value and a clean dual ray,
        // immune to big-M and integrality slack.
        compact::RecourseSolution check =
            compact::recourse_value(p, x, out.u, /*want_duals=*/true);
        if (check.status != solver::Status::Optimal)
          throw ModelError(
              "recourse infeasible at generated scenario: " +
              compact::diagnose_recourse_infeasibility(p, x, out.u));
        if (opts.verify_subproblem &&
            std::abs(check.value - res.objective) >
                1e-4 * std::max(1.0, std::abs(check.value))) {
          // The stationarity system certified a value the plain LP refutes;
          // widen every ceiling and retry.
          for (double& v : m_pi) v *= 10;
          for (double& v : m_rc) v *= 10;
        } else {
          out.value = check.value;
          out.dual.pi = check.view_duals;
          return out;
        }
      }
    }
    ++out.escalations;
    if (out.escalations > opts.big_m_max_escalations)
      throw ModelError(
          "subproblem linearization constants kept saturating after " +
          std::to_string(opts.big_m_max_escalations) + " escalations");
  }
}

std::vector<double> refresh_scenario(const CompactTwoStageProblem& p,
                                     const InequalityView& view,
                                     const DualPoint& dual,
                                     const GeneralizedSet& set) {
  return set.support_point(view.neg_e_transpose(p, dual.pi));
}

CcgEngine::CcgEngine(const CompactTwoStageProblem& p, CcgOptions opts)
    : p_(p), view_(InequalityView::build(p)), opts_(std::move(opts)) {}

CcgResult CcgEngine::solve(const GeneralizedSet& set, double alpha) {
  if (pool_.empty()) {
    // Nominal-scenario seed: valid for every set since the center always
    // belongs to the family.
    pool_.push_back({std::nullopt, set.center, alpha});
  }
  for (OptimalityCut& cut : pool_) {
    if (!opts_.recycle_cuts && cut.dual.has_value()) continue;
    cut.u = cut.dual.has_value()
                ? refresh_scenario(p_, view_, *cut.dual, set)
                : set.center;
    cut.set_alpha = alpha;
  }

  Master master(p_, opts_);
  std::vector<std::vector<double>> master_scenarios;
  auto add_to_master = [&](const OptimalityCut& cut) {
    master.add_cut(cut);
    master_scenarios.push_back(cut.u);
  };
  if (opts_.recycle_cuts) {
    for (const OptimalityCut& cut : pool_) add_to_master(cut);
  } else {
    add_to_master(pool_.front());  // nominal seed only
  }

  CcgResult out;
  double ub = kInf;
  int stalls = 0;
  double master_gap = -1.0;
  auto in_master = [&](const std::vector<double>& u) {
    for (const auto& s : master_scenarios) {
      double d = 0.0;
      for (int i = 0; i < p_.nu; ++i) d = std::max(d, std::abs(s[i] - u[i]));
      if (d <= 1e-9) return true;
    }
    return false;
  };

  for (int round = 1; round <= opts_.max_rounds; ++round) {
    RoundLog log;
    log.round = round;
    auto t0 = std::chrono::steady_clock::now();
    Master::Solution msol = master.solve(master_gap);
    log.master_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (msol.status != solver::Status::Optimal) {
      out.status = msol.status;
      return out;
    }
    const double lb = msol.objective;

    t0 = std::chrono::steady_clock::now();
    SubproblemResult sp = solve_subproblem(p_, view_, msol.x, set, opts_);
    log.sub_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const double cand = compact::first_stage_cost(p_, msol.x) + sp.value;
    if (cand < ub) {
      ub = cand;
      out.x = msol.x;
      out.worst_u = sp.u;
    }
    const double gap = (ub - lb) / std::max(1.0, std::abs(lb));
    log.lb = lb;
    log.ub = ub;
    log.gap = gap;
    log.cuts = master.cuts();
    out.log.push_back(log);
    out.rounds = round;

    if (gap <= opts_.epsilon) {
      out.status = solver::Status::Optimal;
      out.value = lb;
      out.upper = ub;
      if (opts_.recycle_cuts) {
        // Keep the final certificate for future re-targeting.
        bool known = false;
        for (const auto& c : pool_)
          if (c.dual.has_value()) {
            double d = 0.0;
            for (std::size_t k = 0; k < c.dual->pi.size(); ++k)
              d = std::max(d, std::abs(c.dual->pi[k] - sp.dual.pi[k]));
            if (d <= 1e-6) known = true;
          }
        if (!known) pool_.push_back({DualPoint{sp.dual.pi}, sp.u, alpha});
      }
      return out;
    }

    if (in_master(sp.u)) {
      // No new scenario although the gap is open: push the master to full
      // accuracy once, then give up loudly rather than loop.
      if (++stalls > 2)
        throw LimitError("cut generation stalled with open gap " +
                         std::to_string(gap));
      master_gap = opts_.mip_gap / 100;
      continue;
    }
    OptimalityCut cut{DualPoint{sp.dual.pi}, sp.u, alpha};
    if (opts_.recycle_cuts) pool_.push_back(cut);
    add_to_master(cut);
  }
  throw LimitError("no convergence within round limit");
}

std::string round_log_csv_header() {
  return "round,lb,ub,gap,master_seconds,sub_seconds,cuts";
}

std::string round_log_csv_line(const RoundLog& r) {
  std::ostringstream os;
  os << r.round << ',' << r.lb << ',' << r.ub << ',' << r.gap << ','
     << r.master_seconds << ',' << r.sub_seconds << ',' << r.cuts;
  return os.str();
}

}  // namespace robdn::ccg
