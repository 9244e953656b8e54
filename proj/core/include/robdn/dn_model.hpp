#pragma once

#include <map>
#include <string>
#include <vector>

#include "robdn/compact.hpp"

namespace robdn::dn {

struct Generator {
  int bus = 0;
  double p_min = 0, p_max = 0;
  double ramp_up = 0, ramp_down = 0;
  double q_min = 0, q_max = 0;
  double cost_energy = 0;   // per kWh
  double cost_startup = 0;  // per start
};

struct Storage {
  int bus = 0;
  double charge_max = 0, discharge_max = 0;
  double e_min = 0, e_max = 0;
  double efficiency = 1.0;  // applied on both charge and discharge paths
};

// Oriented away from the root after validation. r and x are voltage-drop
// coefficients: per-unit volts per kW (resp. kvar) of flow, already divided
// by the base voltage squared.
struct Line {
  int from = 0, to = 0;
  double r = 0, x = 0;
  double p_max = 0;  // active-power capacity, kW
};

// Radial network rooted at bus 0 (the substation / upstream interface).
struct NetworkInstance {
  std::string name;
  int buses = 0;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<Storage> storages;
  double v_min = 0.95, v_max = 1.05;
  double loss_factor = 0.02;          // fraction of power lost along a line
  std::vector<double> tan_delta;      // per bus: reactive demand per kW load

  // Reorients lines away from the root, checks radiality and parameter
  // sanity. Throws InputError.
  void validate_and_orient();
  int root_line() const;  // index of the single line incident to bus 0
};

struct ForecastProfile {
  int periods = 0;
  double dt = 1.0;  // hours per period
  std::vector<double> price_import, price_export;        // day-ahead tariffs
  std::vector<double> price_import_rt, price_export_rt;  // adjustment tariffs
  double kappa_import = 0.1, kappa_export = 0.1;  // tradable adjustment range
  double cost_shed = 0, cost_curtail = 0;         // per kWh penalties
  std::map<int, std::vector<double>> load;  // bus -> nominal series (kW)
  std::map<int, std::vector<double>> pv;    // bus -> nominal series (kW)

  void validate(const NetworkInstance& net) const;
};

struct UncertainComponent {
  enum class Kind { Load, Pv };
  Kind kind = Kind::Load;
  int bus = 0;

  std::string label() const {
    return (kind == Kind::Load ? "load@" : "pv@") + std::to_string(bus);
  }
};

// Uncertainty vector layout: component-major, period-minor; u index of
// (component c, period t) is c * periods + t.
int u_index(int component, int period, int periods);

// Nominal u (forecast values at the uncertain components).
std::vector<double> nominal_u(const ForecastProfile& fc,
                              const std::vector<UncertainComponent>& comps);

// Historical samples per uncertain component: samples[c][s][t].
struct History {
  std::vector<UncertainComponent> components;
  std::vector<std::vector<std::vector<double>>> samples;
};

// Compilation to the compact two-stage form. u_env_lo/u_env_hi (optional,
// sized like nominal_u) tighten interval arithmetic on derived variable
// bounds; when empty a +/-50% envelope around the nominal is assumed.
compact::CompactTwoStageProblem compile(
    const NetworkInstance& net, const ForecastProfile& fc,
    const std::vector<UncertainComponent>& comps,
    const std::vector<double>& u_env_lo = {},
    const std::vector<double>& u_env_hi = {});

// Granular entry points (compile == first then second on the same object).
void compile_first_stage(const NetworkInstance& net, const ForecastProfile& fc,
                         compact::CompactTwoStageProblem& out);
void compile_second_stage(const NetworkInstance& net,
                          const ForecastProfile& fc,
                          const std::vector<UncertainComponent>& comps,
                          const std::vector<double>& u_env_lo,
                          const std::vector<double>& u_env_hi,
                          compact::CompactTwoStageProblem& out);

// One-shot deterministic schedule at the nominal point; the usual budget
// anchor for the robustness target.
struct DeterministicBaseline {
  double objective = 0.0;
  double first_stage_cost = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};
DeterministicBaseline deterministic_baseline(
    const NetworkInstance& net, const ForecastProfile& fc,
    const std::vector<UncertainComponent>& comps, double mip_gap = 1e-6,
    double time_limit_s = 0.0);

// JSON IO (schemas in docs/formats.md).
std::string network_to_json(const NetworkInstance& net);
NetworkInstance network_from_json(const std::string& text);
std::string forecast_to_json(const ForecastProfile& fc);
ForecastProfile forecast_from_json(const std::string& text);
std::string history_to_json(const History& h, int periods);
History history_from_json(const std::string& text, int* periods = nullptr);

// Seeded synthetic fixtures: a random radial network with DGs/ESS, matching
// forecast, and a history whose rows scatter around the forecast.
struct SyntheticSpec {
  int buses = 4;
  int periods = 3;
  int generators = 2;
  int storages = 1;
  int uncertain = 2;    // number of uncertain (bus, type) components
  int history_rows = 60;
  double spread = 0.25;  // relative dispersion of history around nominal
};
struct SyntheticCase {
  NetworkInstance net;
  ForecastProfile fc;
  std::vector<UncertainComponent> comps;
  History history;
};
SyntheticCase make_synthetic_case(const SyntheticSpec& spec, unsigned seed);

// Fixed study feeders with the standard four-DG / four-ESS fleet. The 33-bus
// feeder uses the canonical radial branch and load data; the 6-bus feeder is
// a short chain with two DGs, one storage and one PV plant. Daily profiles
// are deterministic; only the history scatter depends on the seed.
SyntheticCase reference_case33(int periods, int history_rows, unsigned seed);
SyntheticCase reference_case6(int periods, int history_rows, unsigned seed);

}  // namespace robdn::dn
