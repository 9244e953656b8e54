#include "robdn/search.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "robdn/common.hpp"

namespace robdn::search {

FibonacciPlan plan(int n) {
  if (n < 3 || n > 60) {
    throw InputError("subdivision count must be between 3 and 60");
  }
  std::vector<double> fib(static_cast<size_t>(n), 1.0);
  for (int i = 2; i < n; ++i) fib[i] = fib[i - 1] + fib[i - 2];
  FibonacciPlan p;
  p.n = n;
  p.lengths.assign(static_cast<size_t>(n) + 1, 0.0);
  p.lengths[1] = 1.0;
  for (int k = 2; k <= n; ++k) p.lengths[k] = fib[n - k] / fib[n - 1];
  return p;
}

double BudgetSpec::resolve(double reference_cost) const {
  if (std::isfinite(lambda)) return lambda;
  if (std::isfinite(multiplier)) return multiplier * reference_cost;
  throw InputError("budget needs an absolute value or a cost multiplier");
}

namespace {

struct ProbeCache {
  const ValueFn& fn;
  double h;
  double epsilon;
  bool* prune_active;
  std::vector<std::string>* warnings;

  std::map<int, ProbeOutcome> hits;
  int evaluations = 0;
  int total_inner = 0;

  int snap(double alpha) const {
    int k = static_cast<int>(std::floor(alpha / h + 1e-9));
    return std::max(0, k);
  }
  double grid_alpha(int idx) const { return idx * h; }
  bool known(double alpha) const { return hits.count(snap(alpha)) > 0; }

  const ProbeOutcome& get(double alpha, bool* fresh) {
    int idx = snap(alpha);
    auto it = hits.find(idx);
    if (it != hits.end()) {
      if (fresh) *fresh = false;
      return it->second;
    }
    ProbeOutcome out = fn(grid_alpha(idx));
    ++evaluations;
    total_inner += out.inner_rounds;
    if (fresh) *fresh = true;
    it = hits.emplace(idx, std::move(out)).first;
    check_monotone(it);
    return it->second;
  }

  // The worst-case optimum must not decrease as the set grows. A violation
  // beyond the engine convergence noise means cached comparisons cannot be
  // trusted, so pruning is switched off for the rest of the search.
  void check_monotone(std::map<int, ProbeOutcome>::iterator it) {
    double v = it->second.value;
    auto flag = [&](double other_alpha, double other_v) {
      double tol =
          2.0 * epsilon * std::max({1.0, std::fabs(v), std::fabs(other_v)});
      std::ostringstream os;
      os << "monotonicity violation: value " << v << " at alpha "
         << grid_alpha(it->first) << " vs " << other_v << " at alpha "
         << other_alpha << " (tolerance " << tol << ")";
      if (*prune_active) {
        os << "; pruning disabled";
        *prune_active = false;
      }
      warnings->push_back(os.str());
    };
    if (it != hits.begin()) {
      auto prev = std::prev(it);
      double tol = 2.0 * epsilon *
                   std::max({1.0, std::fabs(v), std::fabs(prev->second.value)});
      if (prev->second.value > v + tol) {
        flag(grid_alpha(prev->first), prev->second.value);
        return;
      }
    }
    auto next = std::next(it);
    if (next != hits.end()) {
      double tol = 2.0 * epsilon *
                   std::max({1.0, std::fabs(v), std::fabs(next->second.value)});
      if (v > next->second.value + tol) {
        flag(grid_alpha(next->first), next->second.value);
      }
    }
  }
};

}  // namespace

SearchResult solve_cl_igdt(const ValueFn& fn, double lambda,
                           const SearchOptions& opts) {
  if (!std::isfinite(lambda)) throw InputError("budget must be finite");
  if (opts.h_alpha <= 0 || opts.h_alpha > 0.5) {
    throw InputError("alpha grid step must lie in (0, 0.5]");
  }
  FibonacciPlan pl = plan(opts.subdivisions);

  SearchResult res;
  bool prune_active = opts.prune;
  ProbeCache cache{fn, opts.h_alpha, opts.epsilon, &prune_active,
                   &res.warnings};

  double feas_cut = lambda + opts.feas_slack * std::max(1.0, std::fabs(lambda));
  auto feasible = [&](double v) { return v <= feas_cut; };

  // Largest probe certified within budget so far; the true threshold lies in
  // [best_alpha, hi] throughout.
  double best_alpha = -1.0;
  int best_idx = -1;
  auto note = [&](double alpha, const ProbeOutcome& o) {
    double snapped = cache.grid_alpha(cache.snap(alpha));
    if (feasible(o.value) && snapped > best_alpha) {
      best_alpha = snapped;
      best_idx = cache.snap(alpha);
    }
  };
  auto probe = [&](double alpha, bool* fresh) -> const ProbeOutcome& {
    const ProbeOutcome& o = cache.get(alpha, fresh);
    note(alpha, o);
    return o;
  };

  double lo = 0.0, hi = 1.0;
  double a_left = hi - pl.lengths[2];
  double a_right = lo + pl.lengths[2];

  for (int k = 1; k <= pl.n - 2; ++k) {
    SearchTraceRow row;
    row.round = k;
    row.alpha_left = a_left;
    row.alpha_right = a_right;
    int inner0 = cache.total_inner;

    bool keep_right = false;
    bool know_left = cache.known(a_left);
    bool know_right = cache.known(a_right);

    if (k == 1 || !prune_active) {
      bool fr = false, fl = false;
      const ProbeOutcome& r = probe(a_right, &fr);
      keep_right = feasible(r.value);
      probe(a_left, &fl);
      row.evaluated_right = fr;
      row.evaluated_left = fl;
    } else if (know_right) {
      // Carried value decides the round; the other probe is pruned.
      keep_right = feasible(probe(a_right, nullptr).value);
    } else if (know_left &&
               !feasible(cache.hits.at(cache.snap(a_left)).value)) {
      keep_right = false;  // right probe can only be worse
    } else {
      bool fr = false;
      const ProbeOutcome& r = probe(a_right, &fr);
      keep_right = feasible(r.value);
      row.evaluated_right = fr;
    }

    if (cache.known(a_left)) {
      row.value_left = cache.hits.at(cache.snap(a_left)).value;
    }
    if (cache.known(a_right)) {
      row.value_right = cache.hits.at(cache.snap(a_right)).value;
    }
    row.kept_right = keep_right;
    row.inner_rounds = cache.total_inner - inner0;

    if (keep_right) {
      lo = a_left;
      a_left = a_right;
      a_right = lo + pl.lengths[k + 2];
    } else {
      hi = a_right;
      a_right = a_left;
      a_left = hi - pl.lengths[k + 2];
    }
    a_left = std::clamp(a_left, lo, hi);
    a_right = std::clamp(a_right, lo, hi);

    row.bracket_lo = lo;
    row.bracket_hi = hi;
    res.trace.push_back(row);
  }

  if (best_idx < 0) {
    // No probe stayed within budget; fall back to the smallest set.
    const ProbeOutcome& at_zero = probe(0.0, nullptr);
    if (!feasible(at_zero.value)) {
      res.budget_infeasible = true;
      res.warnings.push_back(
          "budget below the worst-case optimum of the nominal-point set");
    }
    best_idx = cache.snap(0.0);
    best_alpha = 0.0;
  }

  const ProbeOutcome& star = cache.hits.at(best_idx);
  res.alpha_star = best_alpha;
  res.value = star.value;
  res.x = star.x;
  res.worst_u = star.worst_u;
  res.evaluations = cache.evaluations;
  res.total_inner = cache.total_inner;
  res.final_bracket = hi - lo;
  for (const auto& [idx, out] : cache.hits) res.probe_values[idx] = out.value;
  return res;
}

std::string trace_csv_header() {
  return "round,alpha_left,alpha_right,value_left,value_right,"
         "evaluated_left,evaluated_right,kept,inner_rounds,bracket_lo,"
         "bracket_hi";
}

std::string trace_csv_line(const SearchTraceRow& r) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << r.round << ',' << r.alpha_left << ',' << r.alpha_right << ',';
  if (std::isfinite(r.value_left)) os << r.value_left;
  os << ',';
  if (std::isfinite(r.value_right)) os << r.value_right;
  os << ',' << (r.evaluated_left ? 1 : 0) << ',' << (r.evaluated_right ? 1 : 0)
     << ',' << (r.kept_right ? "right" : "left") << ',' << r.inner_rounds
     << ',' << r.bracket_lo << ',' << r.bracket_hi;
  return os.str();
}

}  // namespace robdn::search
