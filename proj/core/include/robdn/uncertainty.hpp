#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace robdn::uncertainty {

// Empirical CDF with a confidence band of half-width band_width, clipped to
// [0, 1]. support holds the sorted distinct sample values.
struct CdfBand {
  std::vector<double> support;
  std::vector<double> le_frac;   // fraction of samples <= support[k]
  std::vector<double> lt_frac;   // fraction of samples <  support[k]
  double band_width = 0.0;
  int sample_count = 0;

  double lower_at(int k) const;      // max(0, le_frac - bw)
  double upper_before(int k) const;  // min(1, lt_frac + bw)
};

// band_width < 0 selects the default 1/sqrt(sample_count). Fewer than 30
// samples are rejected.
CdfBand build_cdf_band(std::vector<double> samples, double band_width = -1.0);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool attainable = true;  // false when the band cannot certify the target
                           // coverage and the full range was returned
};

// Shortest interval [lo, hi] over support points whose certified coverage
// (lower band at hi minus upper band just below lo) reaches alpha. Ties in
// width resolve to the smallest lower index. alpha <= 0 returns the modal
// support cell.
Interval shortest_interval(const CdfBand& band, double alpha);

// Per-component interval endpoints tabulated over a uniform alpha grid and
// forced nested (lo nonincreasing, hi nondecreasing in alpha).
struct BoundCurves {
  double h_alpha = 1e-3;
  double band_width_param = -1.0;  // as requested; -1 means per-component auto
  std::vector<std::string> names;
  std::vector<double> center;               // nominal point per component
  std::vector<std::vector<double>> lo;      // [component][grid index]
  std::vector<std::vector<double>> hi;
  std::vector<double> max_coverage;         // per component, for warnings
  std::vector<int> sample_count;
  std::uint64_t data_hash = 0;              // stamps derived artifacts

  int grid_size() const { return lo.empty() ? 0 : static_cast<int>(lo[0].size()); }
  // Grid index for alpha, snapped downward (never inflates the set).
  int snap_index(double alpha) const;
  double grid_alpha(int k) const { return k * h_alpha; }
};

BoundCurves build_bound_curves(
    const std::vector<std::vector<double>>& samples_per_component,
    const std::vector<double>& center, const std::vector<std::string>& names,
    double h_alpha = 1e-3, double band_width = -1.0);

std::string curves_to_json(const BoundCurves& c);
BoundCurves curves_from_json(const std::string& text);

// Box [lo, hi] around center with a deviation budget: feasible points are
//   u = center - eps_dn .* (center - lo) + eps_up .* (hi - center),
//   eps in [0,1]^n, sum(eps_dn + eps_up) <= budget.
// lo <= center <= hi is enforced at construction by widening to center
// (effective envelope), which keeps the family nested in alpha and always
// containing the center.
struct GeneralizedSet {
  std::vector<double> center;
  std::vector<double> lo;
  std::vector<double> hi;
  double budget = 0.0;

  int dim() const { return static_cast<int>(center.size()); }
  double width_dn(int i) const { return center[i] - lo[i]; }
  double width_up(int i) const { return hi[i] - center[i]; }

  // Minimal total normalized deviation needed to express u; +inf outside the
  // box.
  double budget_usage(const std::vector<double>& u) const;
  bool contains(const std::vector<double>& u, double tol = 1e-9) const;

  // Exact maximizer of c'u over the set (greedy on normalized gains).
  std::vector<double> support_point(const std::vector<double>& c) const;
  double support_value(const std::vector<double>& c) const;

  // Exhaustive vertex list; guarded against combinatorial blowup (throws
  // InputError past max_dim components or ~200k candidates).
  std::vector<std::vector<double>> vertices(int max_dim = 12) const;
};

GeneralizedSet make_generalized_set(std::vector<double> center,
                                    std::vector<double> lo,
                                    std::vector<double> hi, double budget);

// Set at confidence alpha with deviation budget gamma * periods.
GeneralizedSet instantiate(const BoundCurves& curves, double alpha,
                           double gamma, int periods);

}  // namespace robdn::uncertainty
