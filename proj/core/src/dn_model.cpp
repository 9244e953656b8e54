#include "robdn/dn_model.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <sstream>

#include "json.hpp"
#include "robdn/common.hpp"

namespace robdn::dn {

using compact::CompactTwoStageProblem;
using compact::Entry;
using compact::FirstStageRow;
using compact::RowSense;
using compact::SecondStageRow;
using compact::SplitPair;
using compact::VarMeta;
using nlohmann::json;

void NetworkInstance::validate_and_orient() {
  if (buses < 2) throw InputError("network needs at least 2 buses");
  if (static_cast<int>(lines.size()) != buses - 1)
    throw InputError("network must be radial: lines != buses - 1");
  if (v_min <= 0 || v_max <= v_min)
    throw InputError("voltage band is empty or inverted");
  if (loss_factor < 0 || loss_factor >= 0.5)
    throw InputError("loss factor out of range");
  if (tan_delta.empty()) tan_delta.assign(buses, 0.0);
  if (static_cast<int>(tan_delta.size()) == 1)
    tan_delta.assign(buses, tan_delta[0]);
  if (static_cast<int>(tan_delta.size()) != buses)
    throw InputError("tan_delta must be scalar or per-bus");
  for (double td : tan_delta)
    if (td < 0) throw InputError("negative tan_delta");

  std::vector<std::vector<std::pair<int, int>>> adj(buses);  // (other, line)
  for (int l = 0; l < static_cast<int>(lines.size()); ++l) {
    const Line& e = lines[l];
    if (e.from < 0 || e.from >= buses || e.to < 0 || e.to >= buses ||
        e.from == e.to)
      throw InputError("line endpoints out of range");
    if (e.r < 0 || e.x < 0 || e.p_max <= 0)
      throw InputError("line parameters out of range");
    adj[e.from].push_back({e.to, l});
    adj[e.to].push_back({e.from, l});
  }
  // BFS from the root, orienting every line parent -> child.
  std::vector<int> seen(buses, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int visited = 1;
  while (!q.empty()) {
    int i = q.front();
    q.pop();
    for (auto [j, l] : adj[i]) {
      if (seen[j]) continue;
      seen[j] = 1;
      ++visited;
      if (lines[l].from != i) std::swap(lines[l].from, lines[l].to);
      q.push(j);
    }
  }
  if (visited != buses) throw InputError("network is not connected");
  int root_lines = 0;
  for (const Line& e : lines)
    if (e.from == 0) ++root_lines;
  if (root_lines != 1)
    throw InputError("exactly one line must leave the root bus");

  for (const Generator& g : generators) {
    if (g.bus <= 0 || g.bus >= buses)
      throw InputError("generator bus out of range (root excluded)");
    if (g.p_min < 0 || g.p_max < g.p_min || g.ramp_up < 0 || g.ramp_down < 0 ||
        g.q_min > g.q_max || g.cost_energy < 0 || g.cost_startup < 0)
      throw InputError("generator parameters out of range");
  }
  for (const Storage& s : storages) {
    if (s.bus <= 0 || s.bus >= buses)
      throw InputError("storage bus out of range (root excluded)");
    if (s.charge_max < 0 || s.discharge_max < 0 || s.e_min < 0 ||
        s.e_max < s.e_min || s.efficiency <= 0 || s.efficiency > 1)
      throw InputError("storage parameters out of range");
  }
}

int NetworkInstance::root_line() const {
  for (int l = 0; l < static_cast<int>(lines.size()); ++l)
    if (lines[l].from == 0) return l;
  throw ModelError("network not oriented");
}

void ForecastProfile::validate(const NetworkInstance& net) const {
  if (periods <= 0) throw InputError("forecast needs at least one period");
  if (dt <= 0) throw InputError("dt must be positive");
  auto need = [&](const std::vector<double>& v, const char* what) {
    if (static_cast<int>(v.size()) != periods)
      throw InputError(std::string(what) + " must have one entry per period");
    for (double x : v)
      if (!std::isfinite(x) || x < 0)
        throw InputError(std::string(what) + " has a bad entry");
  };
  need(price_import, "price_import");
  need(price_export, "price_export");
  need(price_import_rt, "price_import_rt");
  need(price_export_rt, "price_export_rt");
  if (kappa_import < 0 || kappa_export < 0)
    throw InputError("kappa must be nonnegative");
  if (cost_shed < 0 || cost_curtail < 0)
    throw InputError("penalty costs must be nonnegative");
  for (const auto& [bus, series] : load) {
    if (bus <= 0 || bus >= net.buses) throw InputError("load bus out of range");
    need(series, "load series");
  }
  for (const auto& [bus, series] : pv) {
    if (bus <= 0 || bus >= net.buses) throw InputError("pv bus out of range");
    need(series, "pv series");
  }
}

int u_index(int component, int period, int periods) {
  return component * periods + period;
}

std::vector<double> nominal_u(const ForecastProfile& fc,
                              const std::vector<UncertainComponent>& comps) {
  std::vector<double> u;
  u.reserve(comps.size() * fc.periods);
  for (const auto& c : comps) {
    const auto& table =
        c.kind == UncertainComponent::Kind::Load ? fc.load : fc.pv;
    auto it = table.find(c.bus);
    if (it == table.end())
      throw InputError("uncertain component without forecast series: " +
                       c.label());
    u.insert(u.end(), it->second.begin(), it->second.end());
  }
  return u;
}

namespace {

// First-stage variable layout. Binaries lead (commitment, charge mode,
// import mode), continuous block follows.
struct XLayout {
  int G, B, T, L;
  int zg0, zb0, zi0;
  int pg0, sg0, pi0, pe0, pch0, pdis0, e0, fp0, fm0;
  int nx1, nx2;

  XLayout(const NetworkInstance& net, const ForecastProfile& fc) {
    G = static_cast<int>(net.generators.size());
    B = static_cast<int>(net.storages.size());
    L = static_cast<int>(net.lines.size());
    T = fc.periods;
    zg0 = 0;
    zb0 = zg0 + G * T;
    zi0 = zb0 + B * T;
    nx1 = zi0 + T;
    pg0 = nx1;
    sg0 = pg0 + G * T;
    pi0 = sg0 + G * T;
    pe0 = pi0 + T;
    pch0 = pe0 + T;
    pdis0 = pch0 + B * T;
    e0 = pdis0 + B * T;
    fp0 = e0 + B * T;
    fm0 = fp0 + L * T;
    nx2 = fm0 + L * T - nx1;
  }
  int zg(int g, int t) const { return zg0 + g * T + t; }
  int zb(int b, int t) const { return zb0 + b * T + t; }
  int zi(int t) const { return zi0 + t; }
  int pg(int g, int t) const { return pg0 + g * T + t; }
  int sg(int g, int t) const { return sg0 + g * T + t; }
  int pi(int t) const { return pi0 + t; }
  int pe(int t) const { return pe0 + t; }
  int pch(int b, int t) const { return pch0 + b * T + t; }
  int pdis(int b, int t) const { return pdis0 + b * T + t; }
  int e(int b, int t) const { return e0 + b * T + t; }
  int fp(int l, int t) const { return fp0 + l * T + t; }
  int fm(int l, int t) const { return fm0 + l * T + t; }
};

std::string tag(const char* base, int a, int t) {
  return std::string(base) + "[" + std::to_string(a) + "][" +
         std::to_string(t) + "]";
}
std::string tag(const char* base, int t) {
  return std::string(base) + "[" + std::to_string(t) + "]";
}

}  // namespace

void compile_first_stage(const NetworkInstance& net, const ForecastProfile& fc,
                         CompactTwoStageProblem& out) {
  const XLayout X(net, fc);
  const int T = X.T;
  out.nx1 = X.nx1;
  out.nx2 = X.nx2;
  out.c1.assign(out.nx(), 0.0);
  out.x_meta.assign(out.nx(), VarMeta{.name = "", .implied_ub = kInf});

  auto name_x = [&](int idx, std::string n) { out.x_meta[idx].name = std::move(n); };
  for (int g = 0; g < X.G; ++g)
    for (int t = 0; t < T; ++t) {
      name_x(X.zg(g, t), tag("zg", g, t));
      name_x(X.pg(g, t), tag("pg", g, t));
      name_x(X.sg(g, t), tag("sg", g, t));
      out.c1[X.pg(g, t)] = net.generators[g].cost_energy * fc.dt;
      out.c1[X.sg(g, t)] = net.generators[g].cost_startup;
    }
  for (int b = 0; b < X.B; ++b)
    for (int t = 0; t < T; ++t) {
      name_x(X.zb(b, t), tag("zb", b, t));
      name_x(X.pch(b, t), tag("pch", b, t));
      name_x(X.pdis(b, t), tag("pdis", b, t));
      name_x(X.e(b, t), tag("e", b, t));
    }
  for (int t = 0; t < T; ++t) {
    name_x(X.zi(t), tag("zi", t));
    name_x(X.pi(t), tag("pi", t));
    name_x(X.pe(t), tag("pe", t));
    out.c1[X.pi(t)] = fc.price_import[t] * fc.dt;
    out.c1[X.pe(t)] = -fc.price_export[t] * fc.dt;
  }
  for (int l = 0; l < X.L; ++l)
    for (int t = 0; t < T; ++t) {
      name_x(X.fp(l, t), tag("fp", l, t));
      name_x(X.fm(l, t), tag("fm", l, t));
    }

  auto le = [&](std::vector<Entry> terms, double b, std::string name) {
    out.first.push_back({std::move(terms), b, std::move(name)});
  };
  auto eq = [&](const std::vector<Entry>& terms, double b, const std::string& name) {
    le(terms, b, name + "+");
    std::vector<Entry> neg;
    neg.reserve(terms.size());
    for (const Entry& e : terms) neg.push_back({e.idx, -e.coef});
    le(std::move(neg), -b, name + "-");
  };

  const double root_cap = net.lines[net.root_line()].p_max;

  for (int g = 0; g < X.G; ++g) {
    const Generator& gen = net.generators[g];
    for (int t = 0; t < T; ++t) {
      le({{X.pg(g, t), 1.0}, {X.zg(g, t), -gen.p_max}}, 0.0, tag("x_g_ub", g, t));
      le({{X.zg(g, t), gen.p_min}, {X.pg(g, t), -1.0}}, 0.0, tag("x_g_lb", g, t));
      if (t == 0) {
        // Initial condition: offline at zero output before the horizon.
        le({{X.pg(g, t), 1.0}}, gen.ramp_up, tag("x_g_ru", g, t));
        le({{X.pg(g, t), -1.0}}, gen.ramp_down, tag("x_g_rd", g, t));
        le({{X.zg(g, t), 1.0}, {X.sg(g, t), -1.0}}, 0.0, tag("x_g_su", g, t));
      } else {
        le({{X.pg(g, t), 1.0}, {X.pg(g, t - 1), -1.0}}, gen.ramp_up,
           tag("x_g_ru", g, t));
        le({{X.pg(g, t - 1), 1.0}, {X.pg(g, t), -1.0}}, gen.ramp_down,
           tag("x_g_rd", g, t));
        le({{X.zg(g, t), 1.0}, {X.zg(g, t - 1), -1.0}, {X.sg(g, t), -1.0}}, 0.0,
           tag("x_g_su", g, t));
      }
    }
  }
  for (int b = 0; b < X.B; ++b) {
    const Storage& st = net.storages[b];
    for (int t = 0; t < T; ++t) {
      std::vector<Entry> bal = {{X.e(b, t), 1.0},
                                {X.pch(b, t), -st.efficiency * fc.dt},
                                {X.pdis(b, t), fc.dt / st.efficiency}};
      double rhs = 0.0;
      if (t == 0)
        rhs = st.e_min;  // initial stored energy sits at the floor
      else
        bal.push_back({X.e(b, t - 1), -1.0});
      eq(bal, rhs, tag("x_e_bal", b, t));
      le({{X.e(b, t), 1.0}}, st.e_max, tag("x_e_ub", b, t));
      le({{X.e(b, t), -1.0}}, -st.e_min, tag("x_e_lb", b, t));
      le({{X.pch(b, t), 1.0}, {X.zb(b, t), -st.charge_max}}, 0.0,
         tag("x_ch_ub", b, t));
      le({{X.pdis(b, t), 1.0}, {X.zb(b, t), st.discharge_max}}, st.discharge_max,
         tag("x_dis_ub", b, t));
    }
  }
  for (int t = 0; t < T; ++t) {
    le({{X.pi(t), 1.0}, {X.zi(t), -root_cap}}, 0.0, tag("x_imp_ub", t));
    le({{X.pe(t), 1.0}, {X.zi(t), root_cap}}, root_cap, tag("x_exp_ub", t));
    const int rl = net.root_line();
    eq({{X.fp(rl, t), 1.0}, {X.fm(rl, t), -1.0}, {X.pi(t), -1.0}, {X.pe(t), 1.0}},
       0.0, tag("x_root_if", t));
  }
  // Nodal balance with the nominal forecast folded in:
  //   sum(out flows) - sum(in flows) - dg - discharge + charge = pv - load
  for (int i = 1; i < net.buses; ++i) {
    for (int t = 0; t < T; ++t) {
      std::vector<Entry> terms;
      for (int l = 0; l < X.L; ++l) {
        if (net.lines[l].from == i) {
          terms.push_back({X.fp(l, t), 1.0});
          terms.push_back({X.fm(l, t), -1.0});
        } else if (net.lines[l].to == i) {
          terms.push_back({X.fp(l, t), -1.0});
          terms.push_back({X.fm(l, t), 1.0});
        }
      }
      for (int g = 0; g < X.G; ++g)
        if (net.generators[g].bus == i) terms.push_back({X.pg(g, t), -1.0});
      for (int b = 0; b < X.B; ++b)
        if (net.storages[b].bus == i) {
          terms.push_back({X.pdis(b, t), -1.0});
          terms.push_back({X.pch(b, t), 1.0});
        }
      double rhs = 0.0;
      if (auto it = fc.pv.find(i); it != fc.pv.end()) rhs += it->second[t];
      if (auto it = fc.load.find(i); it != fc.load.end()) rhs -= it->second[t];
      eq(terms, rhs, tag("x_bal", i, t));
    }
  }
  for (int l = 0; l < X.L; ++l)
    for (int t = 0; t < T; ++t) {
      le({{X.fp(l, t), 1.0}, {X.fm(l, t), -1.0}}, net.lines[l].p_max,
         tag("x_f_ub", l, t));
      le({{X.fm(l, t), 1.0}, {X.fp(l, t), -1.0}}, net.lines[l].p_max,
         tag("x_f_lb", l, t));
    }
}

namespace {

// Second-stage variable layout. Buses without a load series carry no
// shedding or reactive-load variables; buses without pv carry no
// curtailment.
struct YLayout {
  int G, B, T, L, N;
  std::vector<int> load_slot, pv_slot;  // bus -> dense slot or -1
  int n_load, n_pv;
  int dgp0, dgm0, dpi0, dpe0, phg0, qgp0, qgm0, phi0, phe0, ls0, cur0;
  int pfp0, pfm0, qfp0, qfm0, pip0, pim0, qip0, qim0, ql0, vh0;
  int ny;

  YLayout(const NetworkInstance& net, const ForecastProfile& fc) {
    G = static_cast<int>(net.generators.size());
    B = static_cast<int>(net.storages.size());
    L = static_cast<int>(net.lines.size());
    N = net.buses;
    T = fc.periods;
    load_slot.assign(N, -1);
    pv_slot.assign(N, -1);
    n_load = n_pv = 0;
    for (const auto& [bus, _] : fc.load) load_slot[bus] = n_load++;
    for (const auto& [bus, _] : fc.pv) pv_slot[bus] = n_pv++;
    int at = 0;
    auto block = [&](int count) { int b = at; at += count; return b; };
    dgp0 = block(G * T);
    dgm0 = block(G * T);
    dpi0 = block(T);
    dpe0 = block(T);
    phg0 = block(G * T);
    qgp0 = block(G * T);
    qgm0 = block(G * T);
    phi0 = block(T);
    phe0 = block(T);
    ls0 = block(n_load * T);
    cur0 = block(n_pv * T);
    pfp0 = block(L * T);
    pfm0 = block(L * T);
    qfp0 = block(L * T);
    qfm0 = block(L * T);
    pip0 = block((N - 1) * T);
    pim0 = block((N - 1) * T);
    qip0 = block((N - 1) * T);
    qim0 = block((N - 1) * T);
    ql0 = block(n_load * T);
    vh0 = block(N * T);
    ny = at;
  }
  int dgp(int g, int t) const { return dgp0 + g * T + t; }
  int dgm(int g, int t) const { return dgm0 + g * T + t; }
  int dpi(int t) const { return dpi0 + t; }
  int dpe(int t) const { return dpe0 + t; }
  int phg(int g, int t) const { return phg0 + g * T + t; }
  int qgp(int g, int t) const { return qgp0 + g * T + t; }
  int qgm(int g, int t) const { return qgm0 + g * T + t; }
  int phi(int t) const { return phi0 + t; }
  int phe(int t) const { return phe0 + t; }
  int ls(int bus, int t) const { return ls0 + load_slot[bus] * T + t; }
  int cur(int bus, int t) const { return cur0 + pv_slot[bus] * T + t; }
  int pfp(int l, int t) const { return pfp0 + l * T + t; }
  int pfm(int l, int t) const { return pfm0 + l * T + t; }
  int qfp(int l, int t) const { return qfp0 + l * T + t; }
  int qfm(int l, int t) const { return qfm0 + l * T + t; }
  int pip(int i, int t) const { return pip0 + (i - 1) * T + t; }
  int pim(int i, int t) const { return pim0 + (i - 1) * T + t; }
  int qip(int i, int t) const { return qip0 + (i - 1) * T + t; }
  int qim(int i, int t) const { return qim0 + (i - 1) * T + t; }
  int ql(int bus, int t) const { return ql0 + load_slot[bus] * T + t; }
  int vh(int i, int t) const { return vh0 + i * T + t; }
};

}  // namespace

void compile_second_stage(const NetworkInstance& net,
                          const ForecastProfile& fc,
                          const std::vector<UncertainComponent>& comps,
                          const std::vector<double>& u_env_lo,
                          const std::vector<double>& u_env_hi,
                          CompactTwoStageProblem& out) {
  const XLayout X(net, fc);
  const YLayout Y(net, fc);
  const int T = Y.T;
  out.ny = Y.ny;
  out.nu = static_cast<int>(comps.size()) * T;
  out.c2.assign(out.ny, 0.0);
  out.y_meta.assign(out.ny, VarMeta{.name = "", .implied_ub = kInf});

  // Uncertain component lookup: per (kind, bus) the component index, plus
  // the envelope used for interval arithmetic on derived bounds.
  std::map<std::pair<int, int>, int> comp_of;
  for (int c = 0; c < static_cast<int>(comps.size()); ++c) {
    const auto& table =
        comps[c].kind == UncertainComponent::Kind::Load ? fc.load : fc.pv;
    if (!table.count(comps[c].bus))
      throw InputError("uncertain component without forecast series: " +
                       comps[c].label());
    auto key = std::make_pair(static_cast<int>(comps[c].kind), comps[c].bus);
    if (comp_of.count(key))
      throw InputError("duplicate uncertain component: " + comps[c].label());
    comp_of[key] = c;
  }
  std::vector<double> env_lo = u_env_lo, env_hi = u_env_hi;
  if (env_lo.empty() || env_hi.empty()) {
    const std::vector<double> nom = nominal_u(fc, comps);
    env_lo.resize(nom.size());
    env_hi.resize(nom.size());
    for (std::size_t k = 0; k < nom.size(); ++k) {
      env_lo[k] = std::max(0.0, 0.5 * nom[k]);
      env_hi[k] = 1.5 * nom[k];
    }
  }
  if (static_cast<int>(env_lo.size()) != out.nu ||
      static_cast<int>(env_hi.size()) != out.nu)
    throw InputError("uncertainty envelope size mismatch");

  // Load range per bus/period under the envelope (nominal when certain);
  // needed for reactive-load bounds below.
  auto load_range = [&](int bus, int t) -> std::pair<double, double> {
    auto it = fc.load.find(bus);
    if (it == fc.load.end()) return {0.0, 0.0};
    auto cit = comp_of.find({static_cast<int>(UncertainComponent::Kind::Load), bus});
    if (cit == comp_of.end()) return {it->second[t], it->second[t]};
    const int k = u_index(cit->second, t, T);
    return {env_lo[k], env_hi[k]};
  };

  out.u_names.resize(out.nu);
  for (int c = 0; c < static_cast<int>(comps.size()); ++c)
    for (int t = 0; t < T; ++t)
      out.u_names[u_index(c, t, T)] = comps[c].label() + "[" + std::to_string(t) + "]";

  const double root_cap = net.lines[net.root_line()].p_max;

  auto meta = [&](int idx, std::string n, double ub) {
    out.y_meta[idx].name = std::move(n);
    out.y_meta[idx].implied_ub = ub;
  };
  for (int g = 0; g < Y.G; ++g) {
    const Generator& gen = net.generators[g];
    for (int t = 0; t < T; ++t) {
      meta(Y.dgp(g, t), tag("dgp", g, t), kInf);
      meta(Y.dgm(g, t), tag("dgm", g, t), kInf);
      meta(Y.phg(g, t), tag("phg", g, t), gen.p_max);
      meta(Y.qgp(g, t), tag("qgp", g, t), kInf);
      meta(Y.qgm(g, t), tag("qgm", g, t), kInf);
      out.c2[Y.dgp(g, t)] = gen.cost_energy * fc.dt;
      out.c2[Y.dgm(g, t)] = -gen.cost_energy * fc.dt;
      out.y_splits.push_back({Y.dgp(g, t), Y.dgm(g, t), -gen.p_max, gen.p_max,
                              tag("dg", g, t)});
      out.y_splits.push_back({Y.qgp(g, t), Y.qgm(g, t), gen.q_min, gen.q_max,
                              tag("qg", g, t)});
    }
  }
  for (int t = 0; t < T; ++t) {
    meta(Y.dpi(t), tag("dpi", t), fc.kappa_import * root_cap);
    meta(Y.dpe(t), tag("dpe", t), fc.kappa_export * root_cap);
    meta(Y.phi(t), tag("phi", t), (1 + fc.kappa_import) * root_cap);
    meta(Y.phe(t), tag("phe", t), (1 + fc.kappa_export) * root_cap);
    out.c2[Y.dpi(t)] = fc.price_import_rt[t] * fc.dt;
    out.c2[Y.dpe(t)] = -fc.price_export_rt[t] * fc.dt;
  }
  for (const auto& [bus, series] : fc.load) {
    for (int t = 0; t < T; ++t) {
      meta(Y.ls(bus, t), tag("ls", bus, t), kInf);
      out.c2[Y.ls(bus, t)] = fc.cost_shed * fc.dt;
      const auto [llo, lhi] = load_range(bus, t);
      meta(Y.ql(bus, t), tag("ql", bus, t), net.tan_delta[bus] * lhi);
      (void)llo;
    }
  }
  for (const auto& [bus, series] : fc.pv) {
    for (int t = 0; t < T; ++t) {
      meta(Y.cur(bus, t), tag("cur", bus, t), kInf);
      out.c2[Y.cur(bus, t)] = fc.cost_curtail * fc.dt;
    }
  }
  for (int l = 0; l < Y.L; ++l)
    for (int t = 0; t < T; ++t) {
      meta(Y.pfp(l, t), tag("pfp", l, t), kInf);
      meta(Y.pfm(l, t), tag("pfm", l, t), kInf);
      meta(Y.qfp(l, t), tag("qfp", l, t), kInf);
      meta(Y.qfm(l, t), tag("qfm", l, t), kInf);
      out.y_splits.push_back({Y.pfp(l, t), Y.pfm(l, t), -net.lines[l].p_max,
                              net.lines[l].p_max, tag("pf", l, t)});
    }
  for (int i = 1; i < Y.N; ++i) {
    double incident_cap = 0.0;
    for (const Line& e : net.lines)
      if (e.from == i || e.to == i) incident_cap += e.p_max;
    for (int t = 0; t < T; ++t) {
      meta(Y.pip(i, t), tag("pip", i, t), kInf);
      meta(Y.pim(i, t), tag("pim", i, t), kInf);
      meta(Y.qip(i, t), tag("qip", i, t), kInf);
      meta(Y.qim(i, t), tag("qim", i, t), kInf);
      out.y_splits.push_back({Y.pip(i, t), Y.pim(i, t), -incident_cap,
                              incident_cap, tag("pinj", i, t)});
    }
  }
  for (int i = 0; i < Y.N; ++i)
    for (int t = 0; t < T; ++t)
      meta(Y.vh(i, t), tag("vh", i, t), net.v_max - net.v_min);

  // Reactive injection range per bus (generator capability minus the
  // reactive load range), then per-line ranges by downstream aggregation.
  std::vector<std::vector<double>> qinj_lo(Y.N, std::vector<double>(T, 0.0));
  std::vector<std::vector<double>> qinj_hi(Y.N, std::vector<double>(T, 0.0));
  for (int i = 1; i < Y.N; ++i)
    for (int t = 0; t < T; ++t) {
      double lo = 0.0, hi = 0.0;
      for (int g = 0; g < Y.G; ++g)
        if (net.generators[g].bus == i) {
          lo += std::min(0.0, net.generators[g].q_min);
          hi += std::max(0.0, net.generators[g].q_max);
        }
      const auto [llo, lhi] = load_range(i, t);
      lo -= net.tan_delta[i] * lhi;
      hi -= net.tan_delta[i] * std::max(0.0, llo);
      qinj_lo[i][t] = lo;
      qinj_hi[i][t] = hi;
    }
  // Postorder accumulation over the tree: line flow equals the sum of
  // injections in the subtree below it (radial network).
  {
    std::vector<std::vector<int>> children(Y.N);
    for (int l = 0; l < Y.L; ++l) children[net.lines[l].from].push_back(l);
    std::vector<std::vector<double>> sub_lo = qinj_lo, sub_hi = qinj_hi;
    // Process buses in reverse BFS order (children before parents).
    std::vector<int> order;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
      int i = q.front();
      q.pop();
      order.push_back(i);
      for (int l : children[i]) q.push(net.lines[l].to);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int i = *it;
      for (int l : children[i]) {
        const int j = net.lines[l].to;
        for (int t = 0; t < T; ++t) {
          sub_lo[i][t] += sub_lo[j][t];
          sub_hi[i][t] += sub_hi[j][t];
        }
      }
    }
    for (int l = 0; l < Y.L; ++l) {
      const int j = net.lines[l].to;
      for (int t = 0; t < T; ++t)
        // Line flow equals minus the net injection of the subtree it feeds.
        out.y_splits.push_back({Y.qfp(l, t), Y.qfm(l, t), -sub_hi[j][t],
                                -sub_lo[j][t], tag("qf", l, t)});
    }
    for (int i = 1; i < Y.N; ++i)
      for (int t = 0; t < T; ++t)
        out.y_splits.push_back({Y.qip(i, t), Y.qim(i, t), qinj_lo[i][t],
                                qinj_hi[i][t], tag("qinj", i, t)});
  }

  for (const auto& [bus, series] : fc.load)
    for (int t = 0; t < T; ++t)
      out.penalty_vars.push_back(Y.ls(bus, t));
  for (const auto& [bus, series] : fc.pv)
    for (int t = 0; t < T; ++t)
      out.penalty_vars.push_back(Y.cur(bus, t));

  auto row = [&](RowSense sense, double d, std::vector<Entry> x,
                 std::vector<Entry> y, std::vector<Entry> u,
                 std::string name) {
    SecondStageRow r;
    r.sense = sense;
    r.d = d;
    r.x = std::move(x);
    r.y = std::move(y);
    r.u = std::move(u);
    r.name = std::move(name);
    out.second.push_back(std::move(r));
  };

  for (int g = 0; g < Y.G; ++g) {
    const Generator& gen = net.generators[g];
    for (int t = 0; t < T; ++t) {
      row(RowSense::Eq, 0.0, {{X.pg(g, t), 1.0}},
          {{Y.dgp(g, t), 1.0}, {Y.dgm(g, t), -1.0}, {Y.phg(g, t), -1.0}}, {},
          tag("adj_g", g, t));
      row(RowSense::Ge, 0.0, {{X.zg(g, t), gen.p_max}}, {{Y.phg(g, t), -1.0}},
          {}, tag("g_ub", g, t));
      row(RowSense::Ge, 0.0, {{X.zg(g, t), -gen.p_min}}, {{Y.phg(g, t), 1.0}},
          {}, tag("g_lb", g, t));
      if (t == 0) {
        row(RowSense::Ge, -gen.ramp_up, {}, {{Y.phg(g, t), -1.0}}, {},
            tag("g_ru", g, t));
        row(RowSense::Ge, -gen.ramp_down, {}, {{Y.phg(g, t), 1.0}}, {},
            tag("g_rd", g, t));
      } else {
        row(RowSense::Ge, -gen.ramp_up, {},
            {{Y.phg(g, t), -1.0}, {Y.phg(g, t - 1), 1.0}}, {},
            tag("g_ru", g, t));
        row(RowSense::Ge, -gen.ramp_down, {},
            {{Y.phg(g, t), 1.0}, {Y.phg(g, t - 1), -1.0}}, {},
            tag("g_rd", g, t));
      }
      row(RowSense::Ge, 0.0, {{X.zg(g, t), gen.q_max}},
          {{Y.qgp(g, t), -1.0}, {Y.qgm(g, t), 1.0}}, {}, tag("q_ub", g, t));
      row(RowSense::Ge, 0.0, {{X.zg(g, t), -gen.q_min}},
          {{Y.qgp(g, t), 1.0}, {Y.qgm(g, t), -1.0}}, {}, tag("q_lb", g, t));
    }
  }
  for (int t = 0; t < T; ++t) {
    row(RowSense::Eq, 0.0, {{X.pi(t), 1.0}},
        {{Y.dpi(t), 1.0}, {Y.phi(t), -1.0}}, {}, tag("adj_i", t));
    row(RowSense::Eq, 0.0, {{X.pe(t), 1.0}},
        {{Y.dpe(t), 1.0}, {Y.phe(t), -1.0}}, {}, tag("adj_e", t));
    row(RowSense::Ge, 0.0, {{X.pi(t), -1.0}}, {{Y.phi(t), 1.0}}, {},
        tag("imp_lb", t));
    row(RowSense::Ge, 0.0, {{X.pi(t), 1.0 + fc.kappa_import}},
        {{Y.phi(t), -1.0}}, {}, tag("imp_ub", t));
    row(RowSense::Ge, 0.0, {{X.pe(t), -1.0}}, {{Y.phe(t), 1.0}}, {},
        tag("exp_lb", t));
    row(RowSense::Ge, 0.0, {{X.pe(t), 1.0 + fc.kappa_export}},
        {{Y.phe(t), -1.0}}, {}, tag("exp_ub", t));
    const int rl = net.root_line();
    row(RowSense::Eq, 0.0, {},
        {{Y.pfp(rl, t), 1.0}, {Y.pfm(rl, t), -1.0}, {Y.phi(t), -1.0},
         {Y.phe(t), 1.0}},
        {}, tag("root_if", t));
  }
  for (int i = 1; i < Y.N; ++i) {
    const bool has_load = fc.load.count(i) > 0;
    const bool has_pv = fc.pv.count(i) > 0;
    for (int t = 0; t < T; ++t) {
      std::vector<Entry> pbal, qbal;
      for (int l = 0; l < Y.L; ++l) {
        double s = 0.0;
        if (net.lines[l].from == i) s = 1.0;
        else if (net.lines[l].to == i) s = -1.0;
        else continue;
        pbal.push_back({Y.pfp(l, t), s});
        pbal.push_back({Y.pfm(l, t), -s});
        qbal.push_back({Y.qfp(l, t), s});
        qbal.push_back({Y.qfm(l, t), -s});
      }
      pbal.push_back({Y.pip(i, t), -1.0});
      pbal.push_back({Y.pim(i, t), 1.0});
      qbal.push_back({Y.qip(i, t), -1.0});
      qbal.push_back({Y.qim(i, t), 1.0});
      row(RowSense::Eq, 0.0, {}, std::move(pbal), {}, tag("p_bal", i, t));
      row(RowSense::Eq, 0.0, {}, std::move(qbal), {}, tag("q_bal", i, t));

      // Net active injection:
      //   pinj = dg + discharge - charge + pv - load + shed - curtail
      std::vector<Entry> xent, yent, uent;
      double d = 0.0;
      yent.push_back({Y.pip(i, t), 1.0});
      yent.push_back({Y.pim(i, t), -1.0});
      for (int g = 0; g < Y.G; ++g)
        if (net.generators[g].bus == i) yent.push_back({Y.phg(g, t), -1.0});
      for (int b = 0; b < Y.B; ++b)
        if (net.storages[b].bus == i) {
          xent.push_back({X.pdis(b, t), -1.0});
          xent.push_back({X.pch(b, t), 1.0});
        }
      if (has_load) {
        yent.push_back({Y.ls(i, t), -1.0});
        auto cit = comp_of.find(
            {static_cast<int>(UncertainComponent::Kind::Load), i});
        if (cit != comp_of.end())
          uent.push_back({u_index(cit->second, t, T), 1.0});
        else
          d -= fc.load.at(i)[t];
      }
      if (has_pv) {
        yent.push_back({Y.cur(i, t), 1.0});
        auto cit =
            comp_of.find({static_cast<int>(UncertainComponent::Kind::Pv), i});
        if (cit != comp_of.end())
          uent.push_back({u_index(cit->second, t, T), -1.0});
        else
          d += fc.pv.at(i)[t];
      }
      row(RowSense::Eq, d, std::move(xent), std::move(yent), std::move(uent),
          tag("p_net", i, t));

      // Net reactive injection: qinj = qg - qload.
      std::vector<Entry> qy;
      qy.push_back({Y.qip(i, t), 1.0});
      qy.push_back({Y.qim(i, t), -1.0});
      for (int g = 0; g < Y.G; ++g)
        if (net.generators[g].bus == i) {
          qy.push_back({Y.qgp(g, t), -1.0});
          qy.push_back({Y.qgm(g, t), 1.0});
        }
      if (has_load) qy.push_back({Y.ql(i, t), 1.0});
      row(RowSense::Eq, 0.0, {}, std::move(qy), {}, tag("q_net", i, t));

      if (has_load) {
        auto cit = comp_of.find(
            {static_cast<int>(UncertainComponent::Kind::Load), i});
        if (cit != comp_of.end()) {
          row(RowSense::Eq, 0.0, {}, {{Y.ql(i, t), 1.0}},
              {{u_index(cit->second, t, T), -net.tan_delta[i]}},
              tag("q_load", i, t));
        } else {
          row(RowSense::Eq, net.tan_delta[i] * fc.load.at(i)[t], {},
              {{Y.ql(i, t), 1.0}}, {}, tag("q_load", i, t));
        }
      }
    }
  }
  const double denom = 1.0 - net.loss_factor;
  for (int l = 0; l < Y.L; ++l) {
    const Line& e = net.lines[l];
    for (int t = 0; t < T; ++t) {
      row(RowSense::Eq, 0.0, {},
          {{Y.vh(e.from, t), 1.0},
           {Y.vh(e.to, t), -1.0},
           {Y.pfp(l, t), -e.r / denom},
           {Y.pfm(l, t), e.r / denom},
           {Y.qfp(l, t), -e.x / denom},
           {Y.qfm(l, t), e.x / denom}},
          {}, tag("v_drop", l, t));
      row(RowSense::Ge, -e.p_max, {},
          {{Y.pfp(l, t), -1.0}, {Y.pfm(l, t), 1.0}}, {}, tag("pf_ub", l, t));
      row(RowSense::Ge, -e.p_max, {},
          {{Y.pfp(l, t), 1.0}, {Y.pfm(l, t), -1.0}}, {}, tag("pf_lb", l, t));
    }
  }
  for (int t = 0; t < T; ++t)
    row(RowSense::Eq, 1.0 - net.v_min, {}, {{Y.vh(0, t), 1.0}}, {},
        tag("v_root", t));
  for (int i = 1; i < Y.N; ++i)
    for (int t = 0; t < T; ++t)
      row(RowSense::Ge, -(net.v_max - net.v_min), {}, {{Y.vh(i, t), -1.0}}, {},
          tag("v_ub", i, t));

  // Valid lower bound on the recourse objective. Negative contributions come
  // only from the generator-adjustment pairs (difference >= -p_max) and from
  // extra export (at most kappa * interface capacity per period).
  double lb = 0.0;
  for (int g = 0; g < Y.G; ++g)
    lb -= T * net.generators[g].cost_energy * fc.dt * net.generators[g].p_max;
  for (int t = 0; t < T; ++t)
    lb -= fc.price_export_rt[t] * fc.dt * fc.kappa_export * root_cap;
  out.recourse_lb = lb;
}

compact::CompactTwoStageProblem compile(
    const NetworkInstance& net, const ForecastProfile& fc,
    const std::vector<UncertainComponent>& comps,
    const std::vector<double>& u_env_lo, const std::vector<double>& u_env_hi) {
  NetworkInstance oriented = net;
  oriented.validate_and_orient();
  fc.validate(oriented);
  CompactTwoStageProblem out;
  compile_first_stage(oriented, fc, out);
  compile_second_stage(oriented, fc, comps, u_env_lo, u_env_hi, out);
  out.validate();
  return out;
}

DeterministicBaseline deterministic_baseline(
    const NetworkInstance& net, const ForecastProfile& fc,
    const std::vector<UncertainComponent>& comps, double mip_gap,
    double time_limit_s) {
  CompactTwoStageProblem p = compile(net, fc, comps);
  const std::vector<double> u = nominal_u(fc, comps);
  compact::DeterministicSolution sol =
      compact::deterministic_solve(p, u, mip_gap, time_limit_s);
  if (sol.status != solver::Status::Optimal)
    throw ModelError("deterministic baseline did not solve to optimality: " +
                     std::string(solver::to_string(sol.status)));
  DeterministicBaseline out;
  out.objective = sol.objective;
  out.first_stage_cost = compact::first_stage_cost(p, sol.x);
  out.x = std::move(sol.x);
  out.y = std::move(sol.y);
  return out;
}

// ---------------------------------------------------------------------------
// JSON IO
// ---------------------------------------------------------------------------

std::string network_to_json(const NetworkInstance& net) {
  json j;
  j["kind"] = "network";
  j["name"] = net.name;
  j["buses"] = net.buses;
  j["v_min"] = net.v_min;
  j["v_max"] = net.v_max;
  j["loss_factor"] = net.loss_factor;
  j["tan_delta"] = net.tan_delta;
  json lines = json::array();
  for (const Line& e : net.lines)
    lines.push_back({{"from", e.from},
                     {"to", e.to},
                     {"r", e.r},
                     {"x", e.x},
                     {"p_max", e.p_max}});
  j["lines"] = lines;
  json gens = json::array();
  for (const Generator& g : net.generators)
    gens.push_back({{"bus", g.bus},
                    {"p_min", g.p_min},
                    {"p_max", g.p_max},
                    {"ramp_up", g.ramp_up},
                    {"ramp_down", g.ramp_down},
                    {"q_min", g.q_min},
                    {"q_max", g.q_max},
                    {"cost_energy", g.cost_energy},
                    {"cost_startup", g.cost_startup}});
  j["generators"] = gens;
  json sts = json::array();
  for (const Storage& s : net.storages)
    sts.push_back({{"bus", s.bus},
                   {"charge_max", s.charge_max},
                   {"discharge_max", s.discharge_max},
                   {"e_min", s.e_min},
                   {"e_max", s.e_max},
                   {"efficiency", s.efficiency}});
  j["storages"] = sts;
  return j.dump(2);
}

NetworkInstance network_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("bad network JSON: ") + e.what());
  }
  if (j.value("kind", "") != "network")
    throw InputError("network JSON: unexpected kind");
  NetworkInstance net;
  net.name = j.value("name", "");
  net.buses = j.at("buses").get<int>();
  net.v_min = j.value("v_min", 0.95);
  net.v_max = j.value("v_max", 1.05);
  net.loss_factor = j.value("loss_factor", 0.02);
  if (j.contains("tan_delta")) {
    if (j["tan_delta"].is_number())
      net.tan_delta = {j["tan_delta"].get<double>()};
    else
      net.tan_delta = j["tan_delta"].get<std::vector<double>>();
  }
  for (const auto& e : j.value("lines", json::array())) {
    Line l;
    l.from = e.at("from").get<int>();
    l.to = e.at("to").get<int>();
    l.r = e.at("r").get<double>();
    l.x = e.at("x").get<double>();
    l.p_max = e.at("p_max").get<double>();
    net.lines.push_back(l);
  }
  for (const auto& e : j.value("generators", json::array())) {
    Generator g;
    g.bus = e.at("bus").get<int>();
    g.p_min = e.at("p_min").get<double>();
    g.p_max = e.at("p_max").get<double>();
    g.ramp_up = e.at("ramp_up").get<double>();
    g.ramp_down = e.at("ramp_down").get<double>();
    g.q_min = e.at("q_min").get<double>();
    g.q_max = e.at("q_max").get<double>();
    g.cost_energy = e.at("cost_energy").get<double>();
    g.cost_startup = e.at("cost_startup").get<double>();
    net.generators.push_back(g);
  }
  for (const auto& e : j.value("storages", json::array())) {
    Storage s;
    s.bus = e.at("bus").get<int>();
    s.charge_max = e.at("charge_max").get<double>();
    s.discharge_max = e.at("discharge_max").get<double>();
    s.e_min = e.at("e_min").get<double>();
    s.e_max = e.at("e_max").get<double>();
    s.efficiency = e.at("efficiency").get<double>();
    net.storages.push_back(s);
  }
  net.validate_and_orient();
  return net;
}

std::string forecast_to_json(const ForecastProfile& fc) {
  json j;
  j["kind"] = "forecast";
  j["periods"] = fc.periods;
  j["dt"] = fc.dt;
  j["price_import"] = fc.price_import;
  j["price_export"] = fc.price_export;
  j["price_import_rt"] = fc.price_import_rt;
  j["price_export_rt"] = fc.price_export_rt;
  j["kappa_import"] = fc.kappa_import;
  j["kappa_export"] = fc.kappa_export;
  j["cost_shed"] = fc.cost_shed;
  j["cost_curtail"] = fc.cost_curtail;
  json load = json::object(), pv = json::object();
  for (const auto& [bus, series] : fc.load) load[std::to_string(bus)] = series;
  for (const auto& [bus, series] : fc.pv) pv[std::to_string(bus)] = series;
  j["load"] = load;
  j["pv"] = pv;
  return j.dump(2);
}

ForecastProfile forecast_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("bad forecast JSON: ") + e.what());
  }
  if (j.value("kind", "") != "forecast")
    throw InputError("forecast JSON: unexpected kind");
  ForecastProfile fc;
  fc.periods = j.at("periods").get<int>();
  fc.dt = j.value("dt", 1.0);
  fc.price_import = j.at("price_import").get<std::vector<double>>();
  fc.price_export = j.at("price_export").get<std::vector<double>>();
  fc.price_import_rt = j.at("price_import_rt").get<std::vector<double>>();
  fc.price_export_rt = j.at("price_export_rt").get<std::vector<double>>();
  fc.kappa_import = j.value("kappa_import", 0.1);
  fc.kappa_export = j.value("kappa_export", 0.1);
  fc.cost_shed = j.at("cost_shed").get<double>();
  fc.cost_curtail = j.at("cost_curtail").get<double>();
  // items() must run on a named object: chaining it onto the value()
  // temporary leaves the proxy dangling once the full expression ends
  const json load_obj = j.value("load", json::object());
  for (const auto& [k, v] : load_obj.items())
    fc.load[std::stoi(k)] = v.get<std::vector<double>>();
  const json pv_obj = j.value("pv", json::object());
  for (const auto& [k, v] : pv_obj.items())
    fc.pv[std::stoi(k)] = v.get<std::vector<double>>();
  return fc;
}

std::string history_to_json(const History& h, int periods) {
  json j;
  j["kind"] = "history";
  j["periods"] = periods;
  json comps = json::array();
  for (std::size_t c = 0; c < h.components.size(); ++c) {
    json e;
    e["type"] =
        h.components[c].kind == UncertainComponent::Kind::Load ? "load" : "pv";
    e["bus"] = h.components[c].bus;
    e["samples"] = h.samples[c];
    comps.push_back(e);
  }
  j["components"] = comps;
  return j.dump();
}

History history_from_json(const std::string& text, int* periods) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(std::string("bad history JSON: ") + e.what());
  }
  if (j.value("kind", "") != "history")
    throw InputError("history JSON: unexpected kind");
  const int T = j.at("periods").get<int>();
  if (periods) *periods = T;
  History h;
  for (const auto& e : j.at("components")) {
    UncertainComponent c;
    const std::string type = e.at("type").get<std::string>();
    if (type == "load")
      c.kind = UncertainComponent::Kind::Load;
    else if (type == "pv")
      c.kind = UncertainComponent::Kind::Pv;
    else
      throw InputError("history component type must be load or pv");
    c.bus = e.at("bus").get<int>();
    h.components.push_back(c);
    auto rows = e.at("samples").get<std::vector<std::vector<double>>>();
    for (const auto& r : rows)
      if (static_cast<int>(r.size()) != T)
        throw InputError("history row length != periods");
    h.samples.push_back(std::move(rows));
  }
  return h;
}

// ---------------------------------------------------------------------------
// Synthetic fixtures
// ---------------------------------------------------------------------------

SyntheticCase make_synthetic_case(const SyntheticSpec& spec, unsigned seed) {
  if (spec.buses < 2 || spec.periods < 1)
    throw InputError("synthetic case too small");
  std::mt19937_64 rng(seed);
  auto uni = [&](double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
  };
  SyntheticCase out;
  NetworkInstance& net = out.net;
  net.name = "synthetic-" + std::to_string(seed);
  net.buses = spec.buses;
  net.tan_delta.assign(net.buses, 0.33);
  for (int i = 1; i < net.buses; ++i) {
    Line l;
    l.from = i == 1 ? 0 : static_cast<int>(uni(1.0, i - 1e-9));
    l.to = i;
    l.r = uni(1e-6, 4e-6);
    l.x = 2.0 * l.r;
    l.p_max = 0.0;  // set after loads are known
    net.lines.push_back(l);
  }

  ForecastProfile& fc = out.fc;
  fc.periods = spec.periods;
  fc.dt = 1.0;
  double total_load = 0.0;
  std::vector<int> cands;
  for (int i = 1; i < net.buses; ++i) cands.push_back(i);
  std::shuffle(cands.begin(), cands.end(), rng);
  const int n_load = std::max(1, static_cast<int>(cands.size() + 1) / 2);
  for (int k = 0; k < n_load; ++k) {
    std::vector<double> series(fc.periods);
    const double base = uni(80, 250);
    for (int t = 0; t < fc.periods; ++t)
      series[t] = base * (0.8 + 0.4 * std::sin(3.14159 * (t + 1) /
                                               (fc.periods + 1)));
    for (double v : series) total_load += v;
    fc.load[cands[k]] = series;
  }
  const int n_pv = std::min<int>(2, static_cast<int>(cands.size()) - n_load);
  for (int k = 0; k < n_pv; ++k) {
    std::vector<double> series(fc.periods);
    const double base = uni(40, 120);
    for (int t = 0; t < fc.periods; ++t)
      series[t] = base * (0.5 + 0.5 * std::sin(3.14159 * (t + 0.5) /
                                               fc.periods));
    fc.pv[cands[n_load + k]] = series;
  }
  for (Line& l : net.lines) l.p_max = std::max(500.0, 1.2 * total_load);

  std::shuffle(cands.begin(), cands.end(), rng);
  for (int g = 0; g < spec.generators && g < static_cast<int>(cands.size());
       ++g) {
    Generator gen;
    gen.bus = cands[g];
    gen.p_max = uni(100, 400);
    gen.p_min = 0.1 * gen.p_max;
    gen.ramp_up = gen.ramp_down = 0.6 * gen.p_max;
    gen.q_max = 0.8 * gen.p_max;
    gen.q_min = -0.6 * gen.p_max;
    gen.cost_energy = uni(2.0, 5.0);
    gen.cost_startup = uni(100, 500);
    net.generators.push_back(gen);
  }
  for (int b = 0; b < spec.storages && b < static_cast<int>(cands.size());
       ++b) {
    Storage st;
    st.bus = cands[cands.size() - 1 - b];
    st.charge_max = uni(50, 150);
    st.discharge_max = st.charge_max;
    st.e_min = uni(20, 60);
    st.e_max = st.e_min + uni(100, 300);
    st.efficiency = 0.9;
    net.storages.push_back(st);
  }

  for (int t = 0; t < fc.periods; ++t) {
    const double p = uni(4.0, 8.0);
    fc.price_import.push_back(p);
    fc.price_export.push_back(0.6 * p);
    fc.price_import_rt.push_back(1.25 * p);
    fc.price_export_rt.push_back(0.5 * p);
  }
  fc.kappa_import = 0.2;
  fc.kappa_export = 0.2;
  fc.cost_shed = 60.0;
  fc.cost_curtail = 20.0;

  net.validate_and_orient();
  fc.validate(net);

  // Uncertain components: loads first, then pv.
  std::vector<UncertainComponent> pool;
  for (const auto& [bus, _] : fc.load)
    pool.push_back({UncertainComponent::Kind::Load, bus});
  for (const auto& [bus, _] : fc.pv)
    pool.push_back({UncertainComponent::Kind::Pv, bus});
  const int n_unc = std::min<int>(spec.uncertain, pool.size());
  out.comps.assign(pool.begin(), pool.begin() + n_unc);

  out.history.components = out.comps;
  for (const auto& c : out.comps) {
    const auto& series = (c.kind == UncertainComponent::Kind::Load ? fc.load
                                                                   : fc.pv)
                             .at(c.bus);
    std::vector<std::vector<double>> rows;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int s = 0; s < spec.history_rows; ++s) {
      const double day_factor = 1.0 + spec.spread * noise(rng);
      std::vector<double> r(fc.periods);
      for (int t = 0; t < fc.periods; ++t) {
        const double jitter = 1.0 + 0.3 * spec.spread * noise(rng);
        r[t] = std::max(0.0, series[t] * day_factor * jitter);
      }
      rows.push_back(std::move(r));
    }
    out.history.samples.push_back(std::move(rows));
  }
  return out;
}

namespace {

// Hour-of-day shapes sampled at period midpoints of a day-long horizon.
double load_shape(double hour) {
  return 0.75 + 0.25 * std::sin(3.14159265 * (hour - 5.0) / 12.0);
}
double pv_shape(double hour) {
  double s = std::sin(3.14159265 * (hour - 6.0) / 12.0);
  return s > 0 ? s : 0.0;
}

void attach_history(SyntheticCase& out, int history_rows, double spread,
                    unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  out.history.components = out.comps;
  out.history.samples.clear();
  for (const auto& c : out.comps) {
    const auto& series =
        (c.kind == UncertainComponent::Kind::Load ? out.fc.load : out.fc.pv)
            .at(c.bus);
    std::vector<std::vector<double>> rows;
    for (int s = 0; s < history_rows; ++s) {
      const double day_factor = 1.0 + spread * noise(rng);
      std::vector<double> r(out.fc.periods);
      for (int t = 0; t < out.fc.periods; ++t) {
        const double jitter = 1.0 + 0.3 * spread * noise(rng);
        r[t] = std::max(0.0, series[t] * day_factor * jitter);
      }
      rows.push_back(std::move(r));
    }
    out.history.samples.push_back(std::move(rows));
  }
}

void attach_prices(ForecastProfile& fc) {
  for (int t = 0; t < fc.periods; ++t) {
    const double hour = (t + 0.5) * 24.0 / fc.periods;
    const double p = 5.0 + 2.0 * std::sin(3.14159265 * (hour - 8.0) / 12.0);
    fc.price_import.push_back(p);
    fc.price_export.push_back(0.6 * p);
    fc.price_import_rt.push_back(1.25 * p);
    fc.price_export_rt.push_back(0.5 * p);
  }
  fc.kappa_import = 0.2;
  fc.kappa_export = 0.2;
  fc.cost_shed = 500.0;
  fc.cost_curtail = 100.0;
}

// The standard four-unit fleets used by both reference feeders.
Generator fleet_dg(int unit, int bus) {
  static const double pmax[] = {400, 500, 800, 1200};
  static const double pmin[] = {50, 80, 100, 120};
  static const double ramp[] = {100, 150, 200, 250};
  static const double qmax[] = {320, 400, 700, 1100};
  static const double qmin[] = {-200, -350, -500, -800};
  static const double ce[] = {2.0, 2.5, 3.5, 4.0};
  static const double cu[] = {200, 400, 700, 1000};
  Generator g;
  g.bus = bus;
  g.p_max = pmax[unit];
  g.p_min = pmin[unit];
  g.ramp_up = g.ramp_down = ramp[unit];
  g.q_max = qmax[unit];
  g.q_min = qmin[unit];
  g.cost_energy = ce[unit];
  g.cost_startup = cu[unit];
  return g;
}

Storage fleet_ess(int unit, int bus) {
  static const double pb[] = {120, 200, 250, 280};
  static const double emax[] = {700, 800, 900, 1000};
  static const double emin[] = {140, 160, 180, 200};
  Storage st;
  st.bus = bus;
  st.charge_max = st.discharge_max = pb[unit];
  st.e_max = emax[unit];
  st.e_min = emin[unit];
  st.efficiency = 0.9;
  return st;
}

}  // namespace

SyntheticCase reference_case33(int periods, int history_rows, unsigned seed) {
  if (periods < 1) throw InputError("periods must be positive");
  SyntheticCase out;
  NetworkInstance& net = out.net;
  net.name = "feeder33";
  net.buses = 33;

  // Canonical branch list (1-based endpoints, ohms); converted below to
  // per-kW squared-voltage drop at the 12.66 kV base.
  static const double branches[][4] = {
      {1, 2, 0.0922, 0.0470},   {2, 3, 0.4930, 0.2511},
      {3, 4, 0.3660, 0.1864},   {4, 5, 0.3811, 0.1941},
      {5, 6, 0.8190, 0.7070},   {6, 7, 0.1872, 0.6188},
      {7, 8, 0.7114, 0.2351},   {8, 9, 1.0300, 0.7400},
      {9, 10, 1.0440, 0.7400},  {10, 11, 0.1966, 0.0650},
      {11, 12, 0.3744, 0.1238}, {12, 13, 1.4680, 1.1550},
      {13, 14, 0.5416, 0.7129}, {14, 15, 0.5910, 0.5260},
      {15, 16, 0.7463, 0.5450}, {16, 17, 1.2890, 1.7210},
      {17, 18, 0.7320, 0.5740}, {2, 19, 0.1640, 0.1565},
      {19, 20, 1.5042, 1.3554}, {20, 21, 0.4095, 0.4784},
      {21, 22, 0.7089, 0.9373}, {3, 23, 0.4512, 0.3083},
      {23, 24, 0.8980, 0.7091}, {24, 25, 0.8960, 0.7011},
      {6, 26, 0.2030, 0.1034},  {26, 27, 0.2842, 0.1447},
      {27, 28, 1.0590, 0.9337}, {28, 29, 0.8042, 0.7006},
      {29, 30, 0.5075, 0.2585}, {30, 31, 0.9744, 0.9630},
      {31, 32, 0.3105, 0.3619}, {32, 33, 0.3410, 0.5302}};
  // kW / kvar demand per 1-based bus (bus 1 is the substation).
  static const double demand[][3] = {
      {2, 100, 60},  {3, 90, 40},   {4, 120, 80},  {5, 60, 30},
      {6, 60, 20},   {7, 200, 100}, {8, 200, 100}, {9, 60, 20},
      {10, 60, 20},  {11, 45, 30},  {12, 60, 35},  {13, 60, 35},
      {14, 120, 80}, {15, 60, 10},  {16, 60, 20},  {17, 60, 20},
      {18, 90, 40},  {19, 90, 40},  {20, 90, 40},  {21, 90, 40},
      {22, 90, 40},  {23, 90, 50},  {24, 420, 200}, {25, 420, 200},
      {26, 60, 25},  {27, 60, 25},  {28, 60, 20},  {29, 120, 70},
      {30, 200, 600}, {31, 150, 70}, {32, 210, 100}, {33, 60, 40}};

  const double base_kv = 12.66;
  const double ohm_to_drop = 2.0 / (base_kv * base_kv * 1000.0);
  for (const auto& b : branches) {
    Line l;
    l.from = static_cast<int>(b[0]) - 1;
    l.to = static_cast<int>(b[1]) - 1;
    l.r = b[2] * ohm_to_drop;
    l.x = b[3] * ohm_to_drop;
    l.p_max = 3500.0;
    net.lines.push_back(l);
  }
  net.v_min = 0.95 * 0.95;
  net.v_max = 1.05 * 1.05;
  net.loss_factor = 0.02;
  net.tan_delta.assign(net.buses, 0.0);

  ForecastProfile& fc = out.fc;
  fc.periods = periods;
  fc.dt = 24.0 / periods;
  for (const auto& d : demand) {
    const int bus = static_cast<int>(d[0]) - 1;
    net.tan_delta[bus] = d[2] / d[1];
    std::vector<double> series(periods);
    for (int t = 0; t < periods; ++t) {
      series[t] = d[1] * load_shape((t + 0.5) * 24.0 / periods);
    }
    fc.load[bus] = std::move(series);
  }
  // PV plants (0-based buses) and their peak capacity.
  static const int pv_bus[] = {11, 21, 26, 30};
  static const double pv_cap[] = {400, 300, 350, 450};
  for (int k = 0; k < 4; ++k) {
    std::vector<double> series(periods);
    for (int t = 0; t < periods; ++t) {
      series[t] = pv_cap[k] * pv_shape((t + 0.5) * 24.0 / periods);
    }
    fc.pv[pv_bus[k]] = std::move(series);
  }
  attach_prices(fc);

  static const int dg_bus[] = {7, 12, 24, 29};
  static const int ess_bus[] = {4, 9, 15, 27};
  for (int k = 0; k < 4; ++k) {
    net.generators.push_back(fleet_dg(k, dg_bus[k]));
    net.storages.push_back(fleet_ess(k, ess_bus[k]));
  }

  net.validate_and_orient();
  fc.validate(net);

  // Uncertain demand at the four heaviest feeders plus all PV plants.
  for (int bus : {6, 13, 23, 29}) {
    out.comps.push_back({UncertainComponent::Kind::Load, bus});
  }
  for (int bus : pv_bus) {
    out.comps.push_back({UncertainComponent::Kind::Pv, bus});
  }
  attach_history(out, history_rows, 0.2, seed);
  return out;
}

SyntheticCase reference_case6(int periods, int history_rows, unsigned seed) {
  if (periods < 1) throw InputError("periods must be positive");
  SyntheticCase out;
  NetworkInstance& net = out.net;
  net.name = "feeder6";
  net.buses = 6;
  const double base_kv = 12.66;
  const double ohm_to_drop = 2.0 / (base_kv * base_kv * 1000.0);
  static const double rr[] = {0.09, 0.49, 0.37, 0.38, 0.82};
  static const double xx[] = {0.05, 0.25, 0.19, 0.19, 0.71};
  for (int i = 0; i < 5; ++i) {
    Line l;
    l.from = i;
    l.to = i + 1;
    l.r = rr[i] * ohm_to_drop;
    l.x = xx[i] * ohm_to_drop;
    l.p_max = 3500.0;
    net.lines.push_back(l);
  }
  net.v_min = 0.95 * 0.95;
  net.v_max = 1.05 * 1.05;
  net.loss_factor = 0.02;
  net.tan_delta.assign(net.buses, 0.4);

  ForecastProfile& fc = out.fc;
  fc.periods = periods;
  fc.dt = 24.0 / periods;
  static const int load_bus[] = {1, 2, 3, 5};
  static const double load_base[] = {220, 180, 260, 160};
  for (int k = 0; k < 4; ++k) {
    std::vector<double> series(periods);
    for (int t = 0; t < periods; ++t) {
      series[t] = load_base[k] * load_shape((t + 0.5) * 24.0 / periods);
    }
    fc.load[load_bus[k]] = std::move(series);
  }
  {
    std::vector<double> series(periods);
    for (int t = 0; t < periods; ++t) {
      series[t] = 250.0 * pv_shape((t + 0.5) * 24.0 / periods);
    }
    fc.pv[4] = std::move(series);
  }
  attach_prices(fc);

  net.generators.push_back(fleet_dg(0, 2));
  net.generators.push_back(fleet_dg(1, 4));
  net.storages.push_back(fleet_ess(0, 3));

  net.validate_and_orient();
  fc.validate(net);

  out.comps.push_back({UncertainComponent::Kind::Load, 2});
  out.comps.push_back({UncertainComponent::Kind::Pv, 4});
  attach_history(out, history_rows, 0.25, seed);
  return out;
}

}  // namespace robdn::dn
