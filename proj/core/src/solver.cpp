#include "robdn/solver.hpp"

#include <dlfcn.h>

#include <chrono>
#include <climits>
#include <cmath>
#include <filesystem>
#include <mutex>

#include "robdn/common.hpp"

namespace robdn::solver {
namespace {

// ---------------------------------------------------------------------------
// GLPK C ABI, declared by hand because the engine is loaded with dlopen at
// runtime rather than linked. The control structs are prefix-compatible
// across GLPK 4.65 and 5.x; the reserved tails keep us within the library's
// own (larger, zero-initialized) layout.
// ---------------------------------------------------------------------------

using glp_prob = void;

// Field defaults come from glp_init_smcp / glp_init_iocp at runtime; only
// the named prefix is accessed here, the reserved tail absorbs whatever the
// loaded build appends.
struct glp_smcp {
  int msg_lev;
  int meth;
  int pricing;
  int r_test;
  double tol_bnd;
  double tol_dj;
  double tol_piv;
  double obj_ll;
  double obj_ul;
  int it_lim;
  int tm_lim;
  int out_frq;
  int out_dly;
  int presolve;
  double reserved_[48];
};

struct glp_iocp {
  int msg_lev;
  int br_tech;
  int bt_tech;
  double tol_int;
  double tol_obj;
  int tm_lim;
  int out_frq;
  int out_dly;
  void* cb_func;
  void* cb_info;
  int cb_size;
  int pp_tech;
  double mip_gap;
  int mir_cuts;
  int gmi_cuts;
  int cov_cuts;
  int clq_cuts;
  int presolve;
  int binarize;
  int fp_heur;
  int ps_heur;
  int ps_tm_lim;
  int sr_heur;
  int use_sol;
  const char* save_sol;
  int alien;
  double reserved_[48];
};

constexpr int GLP_MIN = 1, GLP_MAX = 2;
constexpr int GLP_CV = 1, GLP_IV = 2, GLP_BV = 3;
constexpr int GLP_FR = 1, GLP_LO = 2, GLP_UP = 3, GLP_DB = 4, GLP_FX = 5;
constexpr int GLP_MSG_OFF = 0;
constexpr int GLP_OFF = 0;
constexpr int GLP_UNDEF = 1, GLP_FEAS = 2, GLP_NOFEAS = 4, GLP_OPT = 5,
              GLP_UNBND = 6;
constexpr int GLP_EFAIL = 0x05, GLP_EITLIM = 0x08, GLP_ETMLIM = 0x09,
              GLP_ENOPFS = 0x0A, GLP_ENODFS = 0x0B, GLP_EMIPGAP = 0x0E;

struct GlpkApi {
  glp_prob* (*create_prob)();
  void (*delete_prob)(glp_prob*);
  void (*set_prob_name)(glp_prob*, const char*);
  void (*set_obj_dir)(glp_prob*, int);
  int (*add_rows)(glp_prob*, int);
  int (*add_cols)(glp_prob*, int);
  void (*set_row_name)(glp_prob*, int, const char*);
  void (*set_col_name)(glp_prob*, int, const char*);
  void (*set_row_bnds)(glp_prob*, int, int, double, double);
  void (*set_col_bnds)(glp_prob*, int, int, double, double);
  void (*set_obj_coef)(glp_prob*, int, double);
  void (*set_mat_row)(glp_prob*, int, int, const int*, const double*);
  void (*set_col_kind)(glp_prob*, int, int);
  void (*init_smcp)(glp_smcp*);
  void (*init_iocp)(glp_iocp*);
  int (*simplex)(glp_prob*, const glp_smcp*);
  int (*intopt)(glp_prob*, const glp_iocp*);
  int (*get_status)(glp_prob*);
  int (*mip_status)(glp_prob*);
  double (*get_obj_val)(glp_prob*);
  double (*mip_obj_val)(glp_prob*);
  double (*get_col_prim)(glp_prob*, int);
  double (*mip_col_val)(glp_prob*, int);
  double (*get_row_dual)(glp_prob*, int);
  int (*write_lp)(glp_prob*, const void*, const char*);
  int (*term_out)(int);
  const char* (*version)();

  bool ok = false;
  std::string version_str;
  std::string error;
};

// All engine entry points are funneled through one mutex: the GLPK
// environment is process-global and not thread-safe.
std::mutex& engine_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::string> candidate_lib_dirs() {
  std::vector<std::string> dirs;
  for (const char* d : {
           "/usr/local/lib/python3.10/dist-packages/cvxopt.libs",
           "/usr/lib/x86_64-linux-gnu",
           "/usr/local/lib",
           "/usr/lib",
       }) {
    dirs.emplace_back(d);
  }
  return dirs;
}

bool looks_like_engine(const std::string& filename) {
  return filename.find("libglpk") != std::string::npos &&
         filename.find(".so") != std::string::npos;
}

// Libraries shipped next to the engine (amd, colamd, gmp, suitesparseconfig
// in manylinux wheels) carry no usable RUNPATH of their own, so dlopen them
// first. Dependency order is unknown; iterate until a pass makes no progress.
void preload_siblings(const std::filesystem::path& dir) {
  std::vector<std::string> pending;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("lib", 0) == 0 && name.find(".so") != std::string::npos &&
        !looks_like_engine(name)) {
      pending.push_back(e.path().string());
    }
  }
  bool progress = true;
  while (progress && !pending.empty()) {
    progress = false;
    std::vector<std::string> next;
    for (const auto& p : pending) {
      if (dlopen(p.c_str(), RTLD_NOW | RTLD_GLOBAL)) {
        progress = true;
      } else {
        next.push_back(p);
      }
    }
    pending.swap(next);
  }
}

void* open_engine(std::string* where) {
  if (const char* env = std::getenv(kEngineEnvVar); env && *env) {
    std::filesystem::path p(env);
    preload_siblings(p.parent_path());
    if (void* h = dlopen(env, RTLD_NOW | RTLD_GLOBAL)) {
      *where = env;
      return h;
    }
    return nullptr;  // explicit request that failed: do not fall back
  }
  for (const char* bare : {"libglpk.so.40", "libglpk.so"}) {
    if (void* h = dlopen(bare, RTLD_NOW | RTLD_GLOBAL)) {
      *where = bare;
      return h;
    }
  }
  for (const auto& dir : candidate_lib_dirs()) {
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
      const std::string name = e.path().filename().string();
      if (!looks_like_engine(name)) continue;
      preload_siblings(dir);
      if (void* h = dlopen(e.path().c_str(), RTLD_NOW | RTLD_GLOBAL)) {
        *where = e.path().string();
        return h;
      }
    }
  }
  return nullptr;
}

GlpkApi load_api() {
  GlpkApi api{};
  std::string where;
  void* h = open_engine(&where);
  if (!h) {
    const char* err = dlerror();
    api.error = "LP engine library not found";
    if (err) api.error += std::string(": ") + err;
    api.error += " (set " + std::string(kEngineEnvVar) + " to the library path)";
    return api;
  }
  auto sym = [&](const char* n) -> void* {
    void* s = dlsym(h, n);
    if (!s && api.error.empty())
      api.error = std::string("missing symbol ") + n + " in " + where;
    return s;
  };
  api.create_prob = reinterpret_cast<glp_prob* (*)()>(sym("glp_create_prob"));
  api.delete_prob = reinterpret_cast<void (*)(glp_prob*)>(sym("glp_delete_prob"));
  api.set_prob_name = reinterpret_cast<void (*)(glp_prob*, const char*)>(sym("glp_set_prob_name"));
  api.set_obj_dir = reinterpret_cast<void (*)(glp_prob*, int)>(sym("glp_set_obj_dir"));
  api.add_rows = reinterpret_cast<int (*)(glp_prob*, int)>(sym("glp_add_rows"));
  api.add_cols = reinterpret_cast<int (*)(glp_prob*, int)>(sym("glp_add_cols"));
  api.set_row_name = reinterpret_cast<void (*)(glp_prob*, int, const char*)>(sym("glp_set_row_name"));
  api.set_col_name = reinterpret_cast<void (*)(glp_prob*, int, const char*)>(sym("glp_set_col_name"));
  api.set_row_bnds = reinterpret_cast<void (*)(glp_prob*, int, int, double, double)>(sym("glp_set_row_bnds"));
  api.set_col_bnds = reinterpret_cast<void (*)(glp_prob*, int, int, double, double)>(sym("glp_set_col_bnds"));
  api.set_obj_coef = reinterpret_cast<void (*)(glp_prob*, int, double)>(sym("glp_set_obj_coef"));
  api.set_mat_row = reinterpret_cast<void (*)(glp_prob*, int, int, const int*, const double*)>(sym("glp_set_mat_row"));
  api.set_col_kind = reinterpret_cast<void (*)(glp_prob*, int, int)>(sym("glp_set_col_kind"));
  api.init_smcp = reinterpret_cast<void (*)(glp_smcp*)>(sym("glp_init_smcp"));
  api.init_iocp = reinterpret_cast<void (*)(glp_iocp*)>(sym("glp_init_iocp"));
  api.simplex = reinterpret_cast<int (*)(glp_prob*, const glp_smcp*)>(sym("glp_simplex"));
  api.intopt = reinterpret_cast<int (*)(glp_prob*, const glp_iocp*)>(sym("glp_intopt"));
  api.get_status = reinterpret_cast<int (*)(glp_prob*)>(sym("glp_get_status"));
  api.mip_status = reinterpret_cast<int (*)(glp_prob*)>(sym("glp_mip_status"));
  api.get_obj_val = reinterpret_cast<double (*)(glp_prob*)>(sym("glp_get_obj_val"));
  api.mip_obj_val = reinterpret_cast<double (*)(glp_prob*)>(sym("glp_mip_obj_val"));
  api.get_col_prim = reinterpret_cast<double (*)(glp_prob*, int)>(sym("glp_get_col_prim"));
  api.mip_col_val = reinterpret_cast<double (*)(glp_prob*, int)>(sym("glp_mip_col_val"));
  api.get_row_dual = reinterpret_cast<double (*)(glp_prob*, int)>(sym("glp_get_row_dual"));
  api.write_lp = reinterpret_cast<int (*)(glp_prob*, const void*, const char*)>(sym("glp_write_lp"));
  api.term_out = reinterpret_cast<int (*)(int)>(sym("glp_term_out"));
  api.version = reinterpret_cast<const char* (*)()>(sym("glp_version"));
  if (!api.error.empty()) return api;
  api.version_str = api.version();
  api.term_out(GLP_OFF);
  api.ok = true;
  return api;
}

const GlpkApi& api() {
  static GlpkApi a = [] {
    std::lock_guard<std::mutex> lock(engine_mutex());
    return load_api();
  }();
  return a;
}

const GlpkApi& checked_api() {
  const GlpkApi& a = api();
  if (!a.ok) throw SolverError(a.error);
  return a;
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::Limit: return "limit";
  }
  return "?";
}

bool engine_available() { return api().ok; }

std::string engine_version() { return api().ok ? api().version_str : ""; }

struct Model::Impl {
  glp_prob* prob = nullptr;
  std::vector<VarKind> kinds;
  std::vector<RowSense> row_senses;
  int rows = 0;
  ObjSense sense = ObjSense::Min;

  ~Impl() {
    if (prob) {
      std::lock_guard<std::mutex> lock(engine_mutex());
      api().delete_prob(prob);
    }
  }
};

Model::Model(const std::string& name) : impl_(std::make_unique<Impl>()) {
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  impl_->prob = a.create_prob();
  a.set_prob_name(impl_->prob, name.c_str());
  a.set_obj_dir(impl_->prob, GLP_MIN);
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

namespace {
void apply_bounds(const GlpkApi& a, glp_prob* p, int col1, double lb, double ub) {
  const bool lo = std::isfinite(lb), up = std::isfinite(ub);
  if (lo && up) {
    if (lb == ub)
      a.set_col_bnds(p, col1, GLP_FX, lb, ub);
    else
      a.set_col_bnds(p, col1, GLP_DB, lb, ub);
  } else if (lo) {
    a.set_col_bnds(p, col1, GLP_LO, lb, 0.0);
  } else if (up) {
    a.set_col_bnds(p, col1, GLP_UP, 0.0, ub);
  } else {
    a.set_col_bnds(p, col1, GLP_FR, 0.0, 0.0);
  }
}
}  // namespace

int Model::add_var(double lb, double ub, VarKind kind, double obj_coef,
                   const std::string& name) {
  if (lb > ub) throw ModelError("variable bounds crossed: " + name);
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  const int col = a.add_cols(impl_->prob, 1);
  apply_bounds(a, impl_->prob, col, lb, ub);
  if (kind == VarKind::Binary) {
    a.set_col_kind(impl_->prob, col, GLP_BV);
  } else if (kind == VarKind::Integer) {
    a.set_col_kind(impl_->prob, col, GLP_IV);
  }
  if (obj_coef != 0.0) a.set_obj_coef(impl_->prob, col, obj_coef);
  if (!name.empty()) a.set_col_name(impl_->prob, col, name.c_str());
  impl_->kinds.push_back(kind);
  return col - 1;
}

int Model::add_row(RowSense sense, double rhs, std::span<const Term> terms,
                   const std::string& name) {
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  const int row = a.add_rows(impl_->prob, 1);
  switch (sense) {
    case RowSense::Le: a.set_row_bnds(impl_->prob, row, GLP_UP, 0.0, rhs); break;
    case RowSense::Ge: a.set_row_bnds(impl_->prob, row, GLP_LO, rhs, 0.0); break;
    case RowSense::Eq: a.set_row_bnds(impl_->prob, row, GLP_FX, rhs, rhs); break;
  }
  // GLPK uses 1-based arrays whose 0th slot is ignored.
  std::vector<int> ind(terms.size() + 1, 0);
  std::vector<double> val(terms.size() + 1, 0.0);
  int n = 0;
  for (const Term& t : terms) {
    if (t.var < 0 || t.var >= static_cast<int>(impl_->kinds.size()))
      throw ModelError("row term references unknown variable");
    if (t.coef == 0.0) continue;
    ++n;
    ind[n] = t.var + 1;
    val[n] = t.coef;
  }
  a.set_mat_row(impl_->prob, row, n, ind.data(), val.data());
  if (!name.empty()) a.set_row_name(impl_->prob, row, name.c_str());
  impl_->rows = row;
  impl_->row_senses.push_back(sense);
  return row - 1;
}

void Model::set_obj_sense(ObjSense s) {
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  a.set_obj_dir(impl_->prob, s == ObjSense::Min ? GLP_MIN : GLP_MAX);
  impl_->sense = s;
}

void Model::set_obj_coef(int var, double c) {
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  a.set_obj_coef(impl_->prob, var + 1, c);
}

void Model::set_var_bounds(int var, double lb, double ub) {
  if (lb > ub) throw ModelError("variable bounds crossed");
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  apply_bounds(a, impl_->prob, var + 1, lb, ub);
}

void Model::set_row_rhs(int row, double rhs) {
  if (row < 0 || row >= static_cast<int>(impl_->row_senses.size()))
    throw ModelError("set_row_rhs: unknown row");
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  switch (impl_->row_senses[row]) {
    case RowSense::Le: a.set_row_bnds(impl_->prob, row + 1, GLP_UP, 0.0, rhs); break;
    case RowSense::Ge: a.set_row_bnds(impl_->prob, row + 1, GLP_LO, rhs, 0.0); break;
    case RowSense::Eq: a.set_row_bnds(impl_->prob, row + 1, GLP_FX, rhs, rhs); break;
  }
}

int Model::num_vars() const { return static_cast<int>(impl_->kinds.size()); }
int Model::num_rows() const { return impl_->rows; }

SolveOutcome Model::solve(const SolveOptions& opts) {
  const GlpkApi& a = checked_api();
  std::lock_guard<std::mutex> lock(engine_mutex());
  const auto t0 = std::chrono::steady_clock::now();

  bool is_mip = false;
  for (VarKind k : impl_->kinds)
    if (k != VarKind::Continuous) is_mip = true;

  if (!opts.lp_dump_path.empty())
    a.write_lp(impl_->prob, nullptr, opts.lp_dump_path.c_str());

  const int nv = static_cast<int>(impl_->kinds.size());
  const int nr = impl_->rows;
  SolveOutcome out;

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  auto tm_lim_ms = [&]() -> int {
    if (opts.time_limit_s <= 0.0) return INT_MAX;
    double ms = opts.time_limit_s * 1000.0;
    return ms >= static_cast<double>(INT_MAX) ? INT_MAX
                                              : static_cast<int>(ms) + 1;
  };

  if (!is_mip) {
    glp_smcp sm;
    a.init_smcp(&sm);
    sm.msg_lev = GLP_MSG_OFF;
    sm.presolve = 0;  // keep off so status and duals are always well defined
    sm.tm_lim = tm_lim_ms();
    const int rc = a.simplex(impl_->prob, &sm);
    if (rc == GLP_EITLIM || rc == GLP_ETMLIM) {
      out.status = Status::Limit;
      out.wall_seconds = elapsed();
      return out;
    }
    if (rc != 0) throw SolverError("simplex failed, rc=" + std::to_string(rc));
    const int st = a.get_status(impl_->prob);
    if (st == GLP_OPT) {
      out.status = Status::Optimal;
      out.objective = a.get_obj_val(impl_->prob);
      out.primal.resize(nv);
      for (int j = 0; j < nv; ++j)
        out.primal[j] = a.get_col_prim(impl_->prob, j + 1);
      out.duals.resize(nr);
      for (int i = 0; i < nr; ++i)
        out.duals[i] = a.get_row_dual(impl_->prob, i + 1);
    } else if (st == GLP_NOFEAS) {
      out.status = Status::Infeasible;
    } else if (st == GLP_UNBND) {
      out.status = Status::Unbounded;
    } else {
      throw SolverError("simplex ended with status " + std::to_string(st));
    }
    out.wall_seconds = elapsed();
    return out;
  }

  glp_iocp io;
  a.init_iocp(&io);
  io.msg_lev = GLP_MSG_OFF;
  io.presolve = 1;  // intopt needs it to accept a raw (unsolved) LP
  io.tol_int = 1e-8;  // keep big-M leakage through integrality slack small
  io.mip_gap = opts.mip_gap > 0 ? opts.mip_gap : 0.0;
  io.tm_lim = tm_lim_ms();
  int rc = a.intopt(impl_->prob, &io);
  if (rc == GLP_EFAIL) {
    // The integrated presolve occasionally gives up on numerically awkward
    // big-M models. Branching from an explicitly solved relaxation basis is
    // slower but far more robust.
    glp_smcp sm;
    a.init_smcp(&sm);
    sm.msg_lev = GLP_MSG_OFF;
    sm.presolve = 0;
    sm.tm_lim = tm_lim_ms();
    const int src = a.simplex(impl_->prob, &sm);
    const int sst = a.get_status(impl_->prob);
    if (src == 0 && sst == GLP_NOFEAS) {
      out.status = Status::Infeasible;
      out.wall_seconds = elapsed();
      return out;
    }
    if (src != 0 || sst != GLP_OPT)
      throw SolverError("intopt failed, rc=" + std::to_string(rc));
    io.presolve = 0;
    rc = a.intopt(impl_->prob, &io);
  }
  const int st = a.mip_status(impl_->prob);
  auto fill_mip = [&] {
    out.objective = a.mip_obj_val(impl_->prob);
    out.primal.resize(nv);
    for (int j = 0; j < nv; ++j) {
      double v = a.mip_col_val(impl_->prob, j + 1);
      if (impl_->kinds[j] != VarKind::Continuous) v = std::round(v);
      out.primal[j] = v;
    }
  };
  if (rc == 0 || rc == GLP_EMIPGAP) {
    if (st == GLP_OPT || st == GLP_FEAS) {
      out.status = Status::Optimal;  // proven optimal or within requested gap
      fill_mip();
    } else if (st == GLP_NOFEAS) {
      out.status = Status::Infeasible;
    } else {
      throw SolverError("intopt ended with status " + std::to_string(st));
    }
  } else if (rc == GLP_ETMLIM || rc == GLP_EITLIM) {
    out.status = Status::Limit;
    if (st == GLP_FEAS || st == GLP_OPT) {
      out.has_incumbent = true;
      fill_mip();
    }
  } else if (rc == GLP_ENOPFS) {
    out.status = Status::Infeasible;
  } else if (rc == GLP_ENODFS) {
    out.status = Status::Unbounded;
  } else {
    throw SolverError("intopt failed, rc=" + std::to_string(rc));
  }
  out.wall_seconds = elapsed();
  return out;
}

}  // namespace robdn::solver
