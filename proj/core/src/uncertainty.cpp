#include "robdn/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "robdn/common.hpp"

namespace robdn::uncertainty {

using nlohmann::json;

double CdfBand::lower_at(int k) const {
  return std::max(0.0, le_frac[k] - band_width);
}

double CdfBand::upper_before(int k) const {
  return std::min(1.0, lt_frac[k] + band_width);
}

CdfBand build_cdf_band(std::vector<double> samples, double band_width) {
  if (samples.size() < 30)
    throw InputError("cdf band needs at least 30 samples, got " +
                     std::to_string(samples.size()));
  for (double s : samples)
    if (!std::isfinite(s)) throw InputError("cdf band: non-finite sample");
  std::sort(samples.begin(), samples.end());
  CdfBand band;
  band.sample_count = static_cast<int>(samples.size());
  band.band_width =
      band_width < 0 ? 1.0 / std::sqrt(double(samples.size())) : band_width;
  const double m = static_cast<double>(samples.size());
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    band.support.push_back(samples[i]);
    band.lt_frac.push_back(static_cast<double>(i) / m);
    band.le_frac.push_back(static_cast<double>(j) / m);
    i = j;
  }
  return band;
}

Interval shortest_interval(const CdfBand& band, double alpha) {
  const int K = static_cast<int>(band.support.size());
  Interval out;
  if (alpha <= 0.0) {
    // Degenerate request: return the cell with the highest empirical mass.
    int best = 0;
    double best_mass = -1.0;
    for (int k = 0; k < K; ++k) {
      const double mass = band.le_frac[k] - band.lt_frac[k];
      if (mass > best_mass + 1e-15) {
        best_mass = mass;
        best = k;
      }
    }
    out.lo = out.hi = band.support[best];
    return out;
  }
  // Certified coverage of [support[i], support[j]] is
  // lower_at(j) - upper_before(i); both pointers move monotonically.
  int best_i = -1, best_j = -1;
  double best_width = kInf;
  int j = 0;
  for (int i = 0; i < K; ++i) {
    if (j < i) j = i;
    while (j < K && band.lower_at(j) - band.upper_before(i) < alpha) ++j;
    if (j == K) break;
    const double width = band.support[j] - band.support[i];
    if (width < best_width - 1e-15) {
      best_width = width;
      best_i = i;
      best_j = j;
    }
  }
  if (best_i < 0) {
    out.lo = band.support.front();
    out.hi = band.support.back();
    out.attainable = false;
    return out;
  }
  out.lo = band.support[best_i];
  out.hi = band.support[best_j];
  return out;
}

int BoundCurves::snap_index(double alpha) const {
  const int K = grid_size();
  int k = static_cast<int>(std::floor(alpha / h_alpha + 1e-9));
  return std::clamp(k, 0, K - 1);
}

BoundCurves build_bound_curves(
    const std::vector<std::vector<double>>& samples_per_component,
    const std::vector<double>& center, const std::vector<std::string>& names,
    double h_alpha, double band_width) {
  const int n = static_cast<int>(samples_per_component.size());
  if (static_cast<int>(center.size()) != n ||
      static_cast<int>(names.size()) != n)
    throw InputError("bound curves: component count mismatch");
  if (h_alpha <= 0 || h_alpha > 0.5)
    throw InputError("bound curves: grid step out of range");
  BoundCurves c;
  c.h_alpha = h_alpha;
  c.band_width_param = band_width;
  c.names = names;
  c.center = center;
  const int K = static_cast<int>(std::floor(1.0 / h_alpha + 1e-9)) + 1;
  std::uint64_t h = fnv1a(&h_alpha, sizeof h_alpha);
  h = fnv1a(&band_width, sizeof band_width, h);
  for (int i = 0; i < n; ++i) {
    CdfBand band = build_cdf_band(samples_per_component[i], band_width);
    h = fnv1a(samples_per_component[i].data(),
              samples_per_component[i].size() * sizeof(double), h);
    std::vector<double> lo(K), hi(K);
    for (int k = 0; k < K; ++k) {
      const Interval iv = shortest_interval(band, k * h_alpha);
      lo[k] = iv.lo;
      hi[k] = iv.hi;
    }
    // Nested envelope: never let a larger alpha produce a smaller set.
    for (int k = 1; k < K; ++k) {
      lo[k] = std::min(lo[k], lo[k - 1]);
      hi[k] = std::max(hi[k], hi[k - 1]);
    }
    c.lo.push_back(std::move(lo));
    c.hi.push_back(std::move(hi));
    c.max_coverage.push_back(
        std::max(0.0, band.lower_at(static_cast<int>(band.support.size()) - 1) -
                          band.upper_before(0)));
    c.sample_count.push_back(band.sample_count);
  }
  c.data_hash = h;
  return c;
}

std::string curves_to_json(const BoundCurves& c) {
  json j;
  j["kind"] = "bound_curves";
  j["h_alpha"] = c.h_alpha;
  j["band_width_param"] = c.band_width_param;
  j["data_hash"] = hex64(c.data_hash);
  j["names"] = c.names;
  j["center"] = c.center;
  j["lo"] = c.lo;
  j["hi"] = c.hi;
  j["max_coverage"] = c.max_coverage;
  j["sample_count"] = c.sample_count;
  return j.dump();
}

BoundCurves curves_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("bad curves JSON: ") + e.what());
  }
  if (j.value("kind", "") != "bound_curves")
    throw InputError("curves JSON: unexpected kind");
  BoundCurves c;
  c.h_alpha = j.at("h_alpha").get<double>();
  c.band_width_param = j.at("band_width_param").get<double>();
  c.data_hash = std::stoull(j.at("data_hash").get<std::string>(), nullptr, 16);
  c.names = j.at("names").get<std::vector<std::string>>();
  c.center = j.at("center").get<std::vector<double>>();
  c.lo = j.at("lo").get<std::vector<std::vector<double>>>();
  c.hi = j.at("hi").get<std::vector<std::vector<double>>>();
  c.max_coverage = j.at("max_coverage").get<std::vector<double>>();
  c.sample_count = j.at("sample_count").get<std::vector<int>>();
  return c;
}

double GeneralizedSet::budget_usage(const std::vector<double>& u) const {
  double total = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double d = u[i] - center[i];
    if (d > 0) {
      const double w = width_up(i);
      if (d > w * (1 + 1e-12) + 1e-12) return kInf;
      total += w > 0 ? d / w : 0.0;
    } else if (d < 0) {
      const double w = width_dn(i);
      if (-d > w * (1 + 1e-12) + 1e-12) return kInf;
      total += w > 0 ? -d / w : 0.0;
    }
  }
  return total;
}

bool GeneralizedSet::contains(const std::vector<double>& u, double tol) const {
  if (static_cast<int>(u.size()) != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (u[i] < lo[i] - tol || u[i] > hi[i] + tol) return false;
  double total = 0.0;
  for (int i = 0; i < dim(); ++i) {
    const double d = u[i] - center[i];
    if (d > tol) {
      const double w = width_up(i);
      total += w > 0 ? std::min(d, w) / w : 0.0;
    } else if (d < -tol) {
      const double w = width_dn(i);
      total += w > 0 ? std::min(-d, w) / w : 0.0;
    }
  }
  return total <= budget + tol * std::max(1.0, double(dim()));
}

std::vector<double> GeneralizedSet::support_point(
    const std::vector<double>& c) const {
  if (static_cast<int>(c.size()) != dim())
    throw ModelError("support: direction size mismatch");
  // Each component can profitably move in at most one direction; a full move
  // costs one unit of budget and yields |c_i| * width. Greedy on gains is
  // exact for this fractional-knapsack structure.
  std::vector<double> u = center;
  std::vector<std::pair<double, int>> gains;  // (-gain, index) for stable sort
  std::vector<double> step(dim(), 0.0);
  for (int i = 0; i < dim(); ++i) {
    if (c[i] > 0 && width_up(i) > 0) {
      gains.push_back({-c[i] * width_up(i), i});
      step[i] = width_up(i);
    } else if (c[i] < 0 && width_dn(i) > 0) {
      gains.push_back({c[i] * width_dn(i), i});
      step[i] = -width_dn(i);
    }
  }
  std::stable_sort(gains.begin(), gains.end());
  double left = budget;
  for (const auto& [neg_gain, i] : gains) {
    if (left <= 0) break;
    const double eps = std::min(1.0, left);
    u[i] += eps * step[i];
    left -= eps;
  }
  return u;
}

double GeneralizedSet::support_value(const std::vector<double>& c) const {
  const std::vector<double> u = support_point(c);
  return std::inner_product(c.begin(), c.end(), u.begin(), 0.0);
}

std::vector<std::vector<double>> GeneralizedSet::vertices(int max_dim) const {
  if (dim() > max_dim)
    throw InputError("vertex enumeration limited to " +
                     std::to_string(max_dim) + " components");
  std::vector<int> active;
  for (int i = 0; i < dim(); ++i)
    if (width_dn(i) > 0 || width_up(i) > 0) active.push_back(i);
  const int na = static_cast<int>(active.size());

  std::vector<std::vector<double>> out;
  auto push_unique = [&](const std::vector<double>& u) {
    for (const auto& v : out) {
      double maxdiff = 0.0;
      for (int i = 0; i < dim(); ++i)
        maxdiff = std::max(maxdiff, std::abs(v[i] - u[i]));
      if (maxdiff <= 1e-9) return;
    }
    out.push_back(u);
  };

  if (budget >= na - 1e-12) {
    // Budget never binds: plain box corners over the active components.
    if (na > 18) throw InputError("vertex enumeration would exceed limits");
    for (long mask = 0; mask < (1L << na); ++mask) {
      std::vector<double> u = center;
      for (int k = 0; k < na; ++k)
        u[active[k]] = (mask >> k) & 1 ? hi[active[k]] : lo[active[k]];
      push_unique(u);
    }
    return out;
  }

  // Budget binds. Vertices deviate floor(budget) components fully, plus one
  // component by the fractional remainder when budget is not integral; each
  // deviated component picks an available side. (These are the images of the
  // vertex patterns of the underlying {0<=eps<=1, sum eps <= budget} box.)
  const int full = static_cast<int>(std::floor(budget + 1e-12));
  const double frac = budget - full;
  const bool has_frac = frac > 1e-12;

  std::vector<int> dirs;  // per active comp: bit0 lo available, bit1 hi
  for (int k = 0; k < na; ++k) {
    int d = 0;
    if (width_dn(active[k]) > 0) d |= 1;
    if (width_up(active[k]) > 0) d |= 2;
    dirs.push_back(d);
  }

  // Rough candidate bound before enumerating.
  double estimate = 1.0;
  for (int i = 0; i < full + (has_frac ? 1 : 0); ++i)
    estimate *= 2.0 * (na - i);
  if (estimate > 400000.0)
    throw InputError("vertex enumeration would exceed limits");

  std::vector<int> chosen;  // encoded as comp * 2 + side (0 lo, 1 hi)
  std::vector<char> used(na, 0);
  auto emit = [&](int frac_slot) {
    std::vector<double> u = center;
    for (std::size_t q = 0; q < chosen.size(); ++q) {
      const int k = chosen[q] / 2, side = chosen[q] % 2;
      const int i = active[k];
      const double amount =
          (static_cast<int>(q) == frac_slot ? frac : 1.0);
      u[i] = side ? center[i] + amount * width_up(i)
                  : center[i] - amount * width_dn(i);
    }
    push_unique(u);
  };
  // Depth-first over ordered combinations (ascending component index) for
  // the fully deviated block; the fractional deviation may land on any
  // remaining component.
  auto rec = [&](auto&& self, int start, int remaining, bool frac_pending) -> void {
    if (remaining == 0 && !frac_pending) {
      emit(-1);
      return;
    }
    if (remaining == 0) {
      for (int k = 0; k < na; ++k) {
        if (used[k]) continue;
        for (int side = 0; side <= 1; ++side) {
          if (!(dirs[k] & (1 << side))) continue;
          chosen.push_back(k * 2 + side);
          emit(static_cast<int>(chosen.size()) - 1);
          chosen.pop_back();
        }
      }
      return;
    }
    for (int k = start; k <= na - remaining; ++k) {
      for (int side = 0; side <= 1; ++side) {
        if (!(dirs[k] & (1 << side))) continue;
        chosen.push_back(k * 2 + side);
        used[k] = 1;
        self(self, k + 1, remaining - 1, frac_pending);
        used[k] = 0;
        chosen.pop_back();
      }
    }
  };
  rec(rec, 0, full, has_frac);
  if (out.empty()) out.push_back(center);  // budget < 1 and no width anywhere
  return out;
}

GeneralizedSet make_generalized_set(std::vector<double> center,
                                    std::vector<double> lo,
                                    std::vector<double> hi, double budget) {
  const int n = static_cast<int>(center.size());
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw InputError("generalized set: dimension mismatch");
  if (budget < 0) throw InputError("generalized set: negative budget");
  GeneralizedSet s;
  for (int i = 0; i < n; ++i) {
    if (lo[i] > hi[i]) throw InputError("generalized set: crossed bounds");
    // Effective envelope: the set must always contain its center.
    lo[i] = std::min(lo[i], center[i]);
    hi[i] = std::max(hi[i], center[i]);
  }
  s.center = std::move(center);
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  s.budget = budget;
  return s;
}

GeneralizedSet instantiate(const BoundCurves& curves, double alpha,
                           double gamma, int periods) {
  if (alpha < 0 || alpha > 1) throw InputError("alpha outside [0,1]");
  if (gamma < 0) throw InputError("negative budget fraction");
  if (periods <= 0) throw InputError("periods must be positive");
  const int k = curves.snap_index(alpha);
  const int n = static_cast<int>(curves.center.size());
  std::vector<double> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = curves.lo[i][k];
    hi[i] = curves.hi[i][k];
  }
  return make_generalized_set(curves.center, std::move(lo), std::move(hi),
                              gamma * periods);
}

}  // namespace robdn::uncertainty
