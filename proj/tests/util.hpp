#pragma once

// Shared glue for the test suites: turning a synthetic case's history into
// bound curves, compiling with wide envelopes, and wiring a probe function
// to a cut-recycling engine.

#include <string>
#include <vector>

#include "robdn/decomposition.hpp"
#include "robdn/dn_model.hpp"
#include "robdn/search.hpp"
#include "robdn/uncertainty.hpp"

namespace testutil {

using namespace robdn;

inline uncertainty::BoundCurves curves_from_history(
    const dn::SyntheticCase& c, const std::vector<std::string>& u_names,
    double h_alpha = 1e-3, double band_width = -1.0) {
  std::vector<std::vector<double>> cols;
  for (size_t comp = 0; comp < c.history.samples.size(); ++comp)
    for (int t = 0; t < c.fc.periods; ++t) {
      std::vector<double> s;
      s.reserve(c.history.samples[comp].size());
      for (const auto& row : c.history.samples[comp]) s.push_back(row[t]);
      cols.push_back(std::move(s));
    }
  return uncertainty::build_bound_curves(cols, dn::nominal_u(c.fc, c.comps),
                                         u_names, h_alpha, band_width);
}

struct CompiledCase {
  dn::SyntheticCase data;
  compact::CompactTwoStageProblem problem;
  std::vector<double> nominal;
  uncertainty::BoundCurves curves;
};

// Compiles twice: once to learn the uncertainty layout, then again with the
// full-confidence curve envelope so derived variable bounds cover every set
// the tests instantiate.
inline CompiledCase make_case(const dn::SyntheticSpec& spec, unsigned seed,
                              double h_alpha = 1e-3) {
  CompiledCase cc;
  cc.data = dn::make_synthetic_case(spec, seed);
  auto p0 = dn::compile(cc.data.net, cc.data.fc, cc.data.comps);
  cc.nominal = dn::nominal_u(cc.data.fc, cc.data.comps);
  cc.curves = curves_from_history(cc.data, p0.u_names, h_alpha);
  int g = cc.curves.grid_size() - 1;
  std::vector<double> lo(p0.nu), hi(p0.nu);
  for (int i = 0; i < p0.nu; ++i) {
    lo[i] = cc.curves.lo[i][g];
    hi[i] = cc.curves.hi[i][g];
  }
  cc.problem = dn::compile(cc.data.net, cc.data.fc, cc.data.comps, lo, hi);
  return cc;
}

inline CompiledCase make_reference6(int periods, int history_rows,
                                    unsigned seed, double h_alpha = 1e-3) {
  CompiledCase cc;
  cc.data = dn::reference_case6(periods, history_rows, seed);
  auto p0 = dn::compile(cc.data.net, cc.data.fc, cc.data.comps);
  cc.nominal = dn::nominal_u(cc.data.fc, cc.data.comps);
  cc.curves = curves_from_history(cc.data, p0.u_names, h_alpha);
  int g = cc.curves.grid_size() - 1;
  std::vector<double> lo(p0.nu), hi(p0.nu);
  for (int i = 0; i < p0.nu; ++i) {
    lo[i] = cc.curves.lo[i][g];
    hi[i] = cc.curves.hi[i][g];
  }
  cc.problem = dn::compile(cc.data.net, cc.data.fc, cc.data.comps, lo, hi);
  return cc;
}

inline search::ValueFn probe_fn(ccg::CcgEngine& eng,
                                const uncertainty::BoundCurves& curves,
                                double gamma, int periods) {
  return [&eng, &curves, gamma, periods](double alpha) {
    auto set = uncertainty::instantiate(curves, alpha, gamma, periods);
    auto r = eng.solve(set, alpha);
    search::ProbeOutcome o;
    o.value = r.upper;
    o.inner_rounds = r.rounds;
    o.x = r.x;
    o.worst_u = r.worst_u;
    return o;
  };
}

}  // namespace testutil
