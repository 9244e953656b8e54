#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "robdn/common.hpp"
#include "robdn/compact.hpp"
#include "robdn/dn_model.hpp"
#include "util.hpp"

using namespace robdn;
using namespace robdn::dn;

namespace {

int index_of(const std::vector<compact::VarMeta>& meta,
             const std::string& name) {
  for (size_t i = 0; i < meta.size(); ++i)
    if (meta[i].name == name) return int(i);
  return -1;
}

std::string tag2(const char* base, int a, int t) {
  return std::string(base) + "[" + std::to_string(a) + "][" +
         std::to_string(t) + "]";
}
std::string tag1(const char* base, int t) {
  return std::string(base) + "[" + std::to_string(t) + "]";
}

// Two buses, one line, a single load at bus 1, one-sided real-time trading
// bands. Small enough that every recourse value has a closed form.
NetworkInstance two_bus_net() {
  NetworkInstance net;
  net.name = "twobus";
  net.buses = 2;
  Line l;
  l.from = 0;
  l.to = 1;
  l.r = 1e-7;
  l.x = 1e-7;
  l.p_max = 1000;
  net.lines.push_back(l);
  net.v_min = 0.95;
  net.v_max = 1.05;
  net.loss_factor = 0.02;
  net.tan_delta = {0.0, 0.4};
  return net;
}

ForecastProfile two_bus_fc(bool with_pv) {
  ForecastProfile fc;
  fc.periods = 1;
  fc.dt = 1.0;
  fc.price_import = {50};
  fc.price_export = {30};
  fc.price_import_rt = {62.5};
  fc.price_export_rt = {15};
  fc.kappa_import = 0.1;
  fc.kappa_export = 0.1;
  fc.cost_shed = 500;
  fc.cost_curtail = 100;
  fc.load[1] = {100};
  if (with_pv) fc.pv[1] = {30};
  return fc;
}

}  // namespace

TEST_CASE("two-bus import arithmetic matches the closed form") {
  auto net = two_bus_net();
  auto fc = two_bus_fc(false);
  std::vector<UncertainComponent> comps{{UncertainComponent::Kind::Load, 1}};

  auto base = deterministic_baseline(net, fc, comps);
  CHECK(base.objective == doctest::Approx(5000.0));
  CHECK(base.first_stage_cost == doctest::Approx(5000.0));

  auto p = compile(net, fc, comps, {100.0}, {200.0});
  int pi = index_of(p.x_meta, "pi[0]");
  REQUIRE(pi >= 0);
  CHECK(base.x[pi] == doctest::Approx(100.0));

  // day-ahead import of 100 can stretch to 110 in real time; anything above
  // that is shed: cost(u) = 62.5 * min(u - 100, 10) + 500 * max(u - 110, 0)
  struct Point {
    double u, cost;
  };
  for (auto pt : {Point{100, 0.0}, Point{105, 312.5}, Point{120, 5625.0},
                  Point{150, 20625.0}}) {
    auto r = compact::recourse_value(p, base.x, {pt.u});
    REQUIRE(r.status == solver::Status::Optimal);
    CHECK(r.value == doctest::Approx(pt.cost).epsilon(1e-7));
  }

  // load dropping below the committed import leaves no absorber on a feeder
  // without pv or generators: the recourse must report infeasibility
  auto drop = compact::recourse_value(p, base.x, {80.0});
  CHECK(drop.status == solver::Status::Infeasible);
}

TEST_CASE("curtailment absorbs surplus beyond the realized pv output") {
  auto net = two_bus_net();
  auto fc = two_bus_fc(true);
  std::vector<UncertainComponent> comps{{UncertainComponent::Kind::Load, 1}};

  auto base = deterministic_baseline(net, fc, comps);
  CHECK(base.objective == doctest::Approx(3500.0));  // imports net load 70

  auto p = compile(net, fc, comps, {50.0}, {200.0});
  int pi = index_of(p.x_meta, "pi[0]");
  CHECK(base.x[pi] == doctest::Approx(70.0));

  // load drops to 50: the committed 70 must flow, so 50 units are dumped
  // through curtailment even though only 30 units of pv exist
  auto r = compact::recourse_value(p, base.x, {50.0});
  REQUIRE(r.status == solver::Status::Optimal);
  CHECK(r.value == doctest::Approx(5000.0).epsilon(1e-7));
  int cur = index_of(p.y_meta, "cur[1][0]");
  REQUIRE(cur >= 0);
  CHECK(r.y[cur] == doctest::Approx(50.0).epsilon(1e-6));

  // complete recourse across the whole envelope on this feeder
  auto rep = compact::check_relatively_complete_recourse(p, {50.0}, {200.0},
                                                         20, 7);
  CHECK(rep.ok);
  CHECK(rep.infeasible == 0);
}

TEST_CASE("generator ramps, startup accounting and dispatch merit order") {
  NetworkInstance net = two_bus_net();
  Generator g;
  g.bus = 1;
  g.p_max = 100;
  g.p_min = 0;
  g.ramp_up = 30;
  g.ramp_down = 30;
  g.q_min = -50;
  g.q_max = 50;
  g.cost_energy = 10;
  g.cost_startup = 7;
  net.generators.push_back(g);

  ForecastProfile fc;
  fc.periods = 3;
  fc.dt = 1.0;
  fc.price_import = {100, 100, 100};
  fc.price_export = {5, 5, 5};
  fc.price_import_rt = {125, 125, 125};
  fc.price_export_rt = {2.5, 2.5, 2.5};
  fc.kappa_import = 0.1;
  fc.kappa_export = 0.1;
  fc.cost_shed = 500;
  fc.cost_curtail = 100;
  fc.load[1] = {20, 90, 20};

  std::vector<UncertainComponent> comps{{UncertainComponent::Kind::Load, 1}};
  auto base = deterministic_baseline(net, fc, comps);

  // the unit pre-positions at 30 (cold-start ramp cap), exporting the excess
  // 10 in periods 0 and 2, to reach 60 at the price spike:
  //   dg 10*120 + import 100*30 - export 5*20 + startup 7 = 4107
  CHECK(base.objective == doctest::Approx(4107.0));

  auto p = compile(net, fc, comps);
  int pg0 = index_of(p.x_meta, "pg[0][0]");
  int pg1 = index_of(p.x_meta, "pg[0][1]");
  int pg2 = index_of(p.x_meta, "pg[0][2]");
  int imp1 = index_of(p.x_meta, "pi[1]");
  int exp0 = index_of(p.x_meta, "pe[0]");
  REQUIRE(pg1 >= 0);
  REQUIRE(imp1 >= 0);
  CHECK(base.x[pg0] == doctest::Approx(30.0));
  CHECK(base.x[pg1] == doctest::Approx(60.0));
  CHECK(base.x[pg2] == doctest::Approx(30.0));
  CHECK(base.x[imp1] == doctest::Approx(30.0));
  CHECK(base.x[exp0] == doctest::Approx(10.0));

  // ramp feasibility of the committed schedule
  CHECK(std::fabs(base.x[pg1] - base.x[pg0]) <= 30 + 1e-7);
  CHECK(std::fabs(base.x[pg2] - base.x[pg1]) <= 30 + 1e-7);
}

TEST_CASE("storage shifts energy toward the price spike") {
  NetworkInstance net = two_bus_net();
  Storage st;
  st.bus = 1;
  st.charge_max = 50;
  st.discharge_max = 50;
  st.e_min = 10;
  st.e_max = 100;
  st.efficiency = 0.9;
  net.storages.push_back(st);

  ForecastProfile fc;
  fc.periods = 2;
  fc.dt = 1.0;
  fc.price_import = {10, 100};
  fc.price_export = {1, 1};
  fc.price_import_rt = {12.5, 125};
  fc.price_export_rt = {0.5, 0.5};
  fc.kappa_import = 0.1;
  fc.kappa_export = 0.1;
  fc.cost_shed = 500;
  fc.cost_curtail = 100;
  fc.load[1] = {50, 50};

  std::vector<UncertainComponent> comps{{UncertainComponent::Kind::Load, 1}};
  auto base = deterministic_baseline(net, fc, comps);
  auto p = compile(net, fc, comps);

  int pch0 = index_of(p.x_meta, "pch[0][0]");
  int pdis1 = index_of(p.x_meta, "pdis[0][1]");
  int e0 = index_of(p.x_meta, "e[0][0]");
  int e1 = index_of(p.x_meta, "e[0][1]");
  REQUIRE(pch0 >= 0);

  // charging 50 at unit price 10 and discharging 0.81 * 50 at 100 pays off
  CHECK(base.x[pch0] == doctest::Approx(50.0).epsilon(1e-6));
  CHECK(base.x[pdis1] == doctest::Approx(0.81 * 50).epsilon(1e-6));

  // stored-energy bookkeeping: e starts at the floor, charge adds eta * p,
  // discharge removes p / eta
  CHECK(base.x[e0] ==
        doctest::Approx(st.e_min + 0.9 * base.x[pch0]).epsilon(1e-7));
  CHECK(base.x[e1] ==
        doctest::Approx(base.x[e0] - base.x[pdis1] / 0.9).epsilon(1e-7));
  CHECK(base.x[e1] >= st.e_min - 1e-7);

  // charging and discharging never overlap within a period
  int pdis0 = index_of(p.x_meta, "pdis[0][0]");
  int pch1 = index_of(p.x_meta, "pch[0][1]");
  CHECK(base.x[pch0] * base.x[pdis0] == doctest::Approx(0.0));
  CHECK(base.x[pch1] * base.x[pdis1] == doctest::Approx(0.0));
}

TEST_CASE("energy audit balances every period of a synthetic case") {
  auto cc = testutil::make_case({.buses = 5, .periods = 3, .uncertain = 2},
                                21);
  const auto& p = cc.problem;
  const auto& fc = cc.data.fc;
  const auto& net = cc.data.net;
  auto det = compact::deterministic_solve(p, cc.nominal);
  REQUIRE(det.status == solver::Status::Optimal);
  auto rec = compact::recourse_value(p, det.x, cc.nominal);
  REQUIRE(rec.status == solver::Status::Optimal);

  // realized series at the nominal point
  std::map<int, std::vector<double>> load = fc.load, pv = fc.pv;
  for (size_t c = 0; c < cc.data.comps.size(); ++c) {
    const auto& comp = cc.data.comps[c];
    auto& table = comp.kind == UncertainComponent::Kind::Load ? load : pv;
    for (int t = 0; t < fc.periods; ++t)
      table[comp.bus][t] = cc.nominal[u_index(int(c), t, fc.periods)];
  }

  for (int t = 0; t < fc.periods; ++t) {
    double supply = 0.0, demand = 0.0;
    supply += rec.y[index_of(p.y_meta, tag1("phi", t))];
    supply -= rec.y[index_of(p.y_meta, tag1("phe", t))];
    for (size_t g = 0; g < net.generators.size(); ++g)
      supply += rec.y[index_of(p.y_meta, tag2("phg", int(g), t))];
    for (size_t b = 0; b < net.storages.size(); ++b) {
      supply += det.x[index_of(p.x_meta, tag2("pdis", int(b), t))];
      supply -= det.x[index_of(p.x_meta, tag2("pch", int(b), t))];
    }
    for (const auto& [bus, series] : pv) {
      supply += series[t];
      supply -= rec.y[index_of(p.y_meta, tag2("cur", bus, t))];
    }
    for (const auto& [bus, series] : load) {
      demand += series[t];
      demand -= rec.y[index_of(p.y_meta, tag2("ls", bus, t))];
    }
    CHECK(supply == doctest::Approx(demand).epsilon(1e-6));
  }

  // the committed plan and recourse point satisfy every stored constraint
  CHECK(compact::max_residual(p, det.x, rec.y, cc.nominal) < 1e-6);
}

TEST_CASE("network and forecast json io round trip") {
  auto cc = testutil::make_case({.buses = 4, .periods = 2, .uncertain = 2}, 3);
  auto ntext = network_to_json(cc.data.net);
  auto net2 = network_from_json(ntext);
  CHECK(net2.buses == cc.data.net.buses);
  CHECK(net2.lines.size() == cc.data.net.lines.size());
  CHECK(net2.generators.size() == cc.data.net.generators.size());
  CHECK(net2.storages.size() == cc.data.net.storages.size());
  CHECK(network_to_json(net2) == ntext);

  auto ftext = forecast_to_json(cc.data.fc);
  auto fc2 = forecast_from_json(ftext);
  CHECK(fc2.periods == cc.data.fc.periods);
  CHECK(fc2.load.size() == cc.data.fc.load.size());
  CHECK(forecast_to_json(fc2) == ftext);

  auto htext = history_to_json(cc.data.history, cc.data.fc.periods);
  int periods = 0;
  auto h2 = history_from_json(htext, &periods);
  CHECK(periods == cc.data.fc.periods);
  REQUIRE(h2.components.size() == cc.data.history.components.size());
  CHECK(h2.samples == cc.data.history.samples);
  CHECK(history_to_json(h2, periods) == htext);
}

TEST_CASE("33-bus reference feeder") {
  auto cc = dn::reference_case33(4, 50, 17);
  CHECK(cc.net.buses == 33);
  CHECK(cc.net.lines.size() == 32);
  CHECK(cc.net.generators.size() == 4);
  CHECK(cc.net.storages.size() == 4);
  CHECK(cc.fc.pv.size() == 4);
  CHECK(cc.comps.size() == 8);
  CHECK(cc.fc.dt == doctest::Approx(6.0));

  // total base demand matches the canonical feeder (3715 kW), scaled by the
  // daily shape at the first period midpoint (hour 3)
  double shape0 = 0.75 + 0.25 * std::sin(M_PI * (3.0 - 5.0) / 12.0);
  double total0 = 0.0;
  for (const auto& [bus, series] : cc.fc.load) total0 += series[0];
  CHECK(total0 == doctest::Approx(3715.0 * shape0).epsilon(1e-9));

  // reactive-to-active ratios come straight from the demand table
  CHECK(cc.net.tan_delta[29] == doctest::Approx(600.0 / 200.0));
  CHECK(cc.net.tan_delta[23] == doctest::Approx(200.0 / 420.0));

  // pv peaks at the plant capacities times the solar shape at hour 9
  double pv_shape1 = std::sin(M_PI * (9.0 - 6.0) / 12.0);
  CHECK(cc.fc.pv.at(11)[1] == doctest::Approx(400.0 * pv_shape1));
  CHECK(cc.fc.pv.at(30)[1] == doctest::Approx(450.0 * pv_shape1));
  // night periods carry no pv
  CHECK(cc.fc.pv.at(11)[0] == doctest::Approx(0.0));
  CHECK(cc.fc.pv.at(11)[3] == doctest::Approx(0.0));

  // history: 8 components, 50 rows each, horizon-sized rows
  REQUIRE(cc.history.samples.size() == 8);
  for (const auto& comp : cc.history.samples) {
    CHECK(comp.size() == 50);
    for (const auto& row : comp) CHECK(row.size() == 4);
  }

  // compiles and clears a deterministic solve
  auto p = compile(cc.net, cc.fc, cc.comps);
  CHECK(p.nu == 32);
  auto base = deterministic_baseline(cc.net, cc.fc, cc.comps);
  CHECK(base.objective > 0.0);
  CHECK(base.first_stage_cost > 0.0);
}

TEST_CASE("6-bus reference feeder") {
  auto cc = dn::reference_case6(6, 40, 5);
  CHECK(cc.net.buses == 6);
  CHECK(cc.net.lines.size() == 5);
  CHECK(cc.net.generators.size() == 2);
  CHECK(cc.net.generators[0].bus == 2);
  CHECK(cc.net.generators[1].bus == 4);
  CHECK(cc.net.storages.size() == 1);
  CHECK(cc.net.storages[0].bus == 3);
  REQUIRE(cc.comps.size() == 2);
  CHECK(cc.comps[0].label() == "load@2");
  CHECK(cc.comps[1].label() == "pv@4");

  auto p = compile(cc.net, cc.fc, cc.comps);
  CHECK(p.nu == 12);

  // uncertainty layout: component-major, period-minor
  auto nom = nominal_u(cc.fc, cc.comps);
  REQUIRE(int(nom.size()) == p.nu);
  for (int t = 0; t < 6; ++t) {
    CHECK(nom[u_index(0, t, 6)] == doctest::Approx(cc.fc.load.at(2)[t]));
    CHECK(nom[u_index(1, t, 6)] == doctest::Approx(cc.fc.pv.at(4)[t]));
    CHECK(p.u_names[u_index(0, t, 6)] ==
          "load@2[" + std::to_string(t) + "]");
  }

  auto base = deterministic_baseline(cc.net, cc.fc, cc.comps);
  CHECK(base.objective > 0.0);
}

TEST_CASE("synthetic cases are reproducible and seed sensitive") {
  dn::SyntheticSpec spec{.buses = 4, .periods = 3, .uncertain = 2};
  auto a = make_synthetic_case(spec, 42);
  auto b = make_synthetic_case(spec, 42);
  auto c = make_synthetic_case(spec, 43);
  CHECK(network_to_json(a.net) == network_to_json(b.net));
  CHECK(forecast_to_json(a.fc) == forecast_to_json(b.fc));
  CHECK(a.history.samples == b.history.samples);
  CHECK(a.history.samples != c.history.samples);
}
