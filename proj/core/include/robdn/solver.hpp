#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace robdn::solver {

enum class VarKind { Continuous, Binary, Integer };
enum class RowSense { Le, Ge, Eq };
enum class ObjSense { Min, Max };

enum class Status { Optimal, Infeasible, Unbounded, Limit };

const char* to_string(Status s);

struct Term {
  int var;
  double coef;
};

struct SolveOptions {
  double mip_gap = 1e-6;       // relative gap at which a MIP solve may stop
  double time_limit_s = 0.0;   // wall-clock budget in seconds, 0 = unlimited
  std::string lp_dump_path;    // when non-empty, dump the model (LP format)
};

struct SolveOutcome {
  Status status = Status::Limit;
  double objective = 0.0;
  std::vector<double> primal;  // indexed by variable id; empty if infeasible
  // Row duals, pure-LP solves only. Convention for a minimization problem:
  // binding >= rows carry nonnegative duals, binding <= rows nonpositive,
  // equalities are free. Signs flip for maximization.
  std::vector<double> duals;
  bool has_incumbent = false;  // meaningful when status == Limit
  double wall_seconds = 0.0;
};

// Incremental LP/MIP model on top of the runtime-loaded engine. Rows and
// variables can be appended after a solve and the model re-solved; this is
// what the cutting-plane loops rely on. A Model instance is not thread-safe;
// distinct instances may be used from different threads (engine calls are
// serialized internally).
class Model {
 public:
  explicit Model(const std::string& name = "model");
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  int add_var(double lb, double ub, VarKind kind, double obj_coef = 0.0,
              const std::string& name = "");
  int add_row(RowSense sense, double rhs, std::span<const Term> terms,
              const std::string& name = "");
  void set_obj_sense(ObjSense s);
  void set_obj_coef(int var, double c);
  void set_var_bounds(int var, double lb, double ub);
  void set_row_rhs(int row, double rhs);

  int num_vars() const;
  int num_rows() const;

  // Solves as a MIP when any variable is integral, as an LP (with duals)
  // otherwise. Throws SolverError on engine failure.
  SolveOutcome solve(const SolveOptions& opts = {});

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// True when the LP engine shared library could be located and loaded.
bool engine_available();
std::string engine_version();

// Environment variable consulted for an explicit engine library path before
// falling back to the built-in search locations.
inline constexpr const char* kEngineEnvVar = "ROBDN_LP_LIB";

}  // namespace robdn::solver
