#pragma once

#include <optional>
#include <string>
#include <vector>

#include "robdn/solver.hpp"

namespace robdn::compact {

struct Entry {
  int idx;
  double coef;
};

// One structural second-stage constraint, stored in the canonical orientation
//   sum_x B1*x + sum_y B2*y + sum_u E*u  (>= | =)  d
enum class RowSense { Ge, Eq };

struct SecondStageRow {
  std::vector<Entry> x;  // B1 entries
  std::vector<Entry> y;  // B2 entries
  std::vector<Entry> u;  // E entries
  RowSense sense = RowSense::Ge;
  double d = 0.0;
  std::string name;
};

// First-stage constraints are kept strictly as  a'x <= b.
struct FirstStageRow {
  std::vector<Entry> x;
  double b = 0.0;
  std::string name;
};

struct VarMeta {
  std::string name;
  // Finite upper bound implied by the constraint system (+inf when none is
  // known). Used for interval arithmetic when linearizing optimality systems.
  double implied_ub = 0.0;
  // When >= 0, this variable's ceiling scales with an uncertain component:
  // value <= u_scale * u[u_index] over the relevant uncertainty box.
  int u_index = -1;
  double u_scale = 0.0;
};

// A pair of nonnegative variables (plus, minus) whose matrix columns are
// exactly opposite and whose objective costs are (c, -c); their difference
// reconstructs an eliminated free variable. diff_lo/diff_hi bound that
// difference when the constraint system implies finite limits.
struct SplitPair {
  int plus = -1;
  int minus = -1;
  double diff_lo = 0.0;
  double diff_hi = 0.0;
  std::string name;
};

// min  c1'x + max_{u in U} min_{y in Y(x,u)} c2'y
// s.t. A x <= b,  x = [binaries | continuous >= 0]
//      Y(x,u) = { y >= 0 : B1 x + B2 y + E u (>=|=) d }
struct CompactTwoStageProblem {
  int nx1 = 0;  // leading binary block of x
  int nx2 = 0;  // trailing continuous block of x
  int ny = 0;
  int nu = 0;

  std::vector<double> c1;  // size nx1 + nx2
  std::vector<double> c2;  // size ny

  std::vector<FirstStageRow> first;
  std::vector<SecondStageRow> second;

  std::vector<VarMeta> x_meta;  // size nx(), names may be empty
  std::vector<VarMeta> y_meta;  // size ny
  std::vector<std::string> u_names;
  std::vector<SplitPair> y_splits;
  std::vector<int> penalty_vars;  // y indices whose activation marks lost
                                  // load / curtailed generation

  // Finite lower bound on min c2'y over any feasible recourse set; exact
  // formula depends on the model, 0 when c2 >= 0.
  double recourse_lb = 0.0;

  int nx() const { return nx1 + nx2; }

  // Throws ModelError on dimension or index inconsistencies.
  void validate() const;
};

// The >=-only image of the second stage: every Ge row maps to itself, every
// Eq row maps to a (+row, -row) pair. Dual vectors for the recourse LP live
// on view rows and are nonnegative there.
class InequalityView {
 public:
  struct ViewRow {
    int row;   // index into problem.second
    int sign;  // +1 or -1 (negated copy of an equality)
  };

  static InequalityView build(const CompactTwoStageProblem& p);

  int size() const { return static_cast<int>(rows_.size()); }
  const ViewRow& operator[](int i) const { return rows_[i]; }
  const std::vector<ViewRow>& rows() const { return rows_; }

  // B2^T pi for a view-row dual vector.
  std::vector<double> apply_b2_transpose(const CompactTwoStageProblem& p,
                                         const std::vector<double>& pi) const;
  // -E^T pi (the direction the worst case pushes u along).
  std::vector<double> neg_e_transpose(const CompactTwoStageProblem& p,
                                      const std::vector<double>& pi) const;
  // d - B1 x reduced onto view rows (E term excluded).
  std::vector<double> rhs_minus_b1x(const CompactTwoStageProblem& p,
                                    const std::vector<double>& x) const;
  std::vector<double> e_row(const CompactTwoStageProblem& p, int view_row,
                            std::vector<double>* scratch = nullptr) const;

 private:
  std::vector<ViewRow> rows_;
};

struct RecourseSolution {
  solver::Status status = solver::Status::Limit;
  double value = 0.0;
  std::vector<double> y;
  std::vector<double> view_duals;  // on InequalityView rows, >= 0; only when
                                   // requested and status == Optimal
};

// Solves min c2'y s.t. y in Y(x,u). Throws nothing on infeasibility; the
// caller inspects status.
RecourseSolution recourse_value(const CompactTwoStageProblem& p,
                                const std::vector<double>& x,
                                const std::vector<double>& u,
                                bool want_duals = false,
                                const std::string& lp_dump_path = "");

// Elastic diagnosis of an infeasible recourse: minimizes total constraint
// violation and reports the worst offenders by row name.
std::string diagnose_recourse_infeasibility(const CompactTwoStageProblem& p,
                                            const std::vector<double>& x,
                                            const std::vector<double>& u,
                                            int max_rows = 5);

// Largest constraint violation of (x, y, u) over first-stage rows, second-
// stage rows and sign restrictions. Used to certify stored solutions.
double max_residual(const CompactTwoStageProblem& p,
                    const std::vector<double>& x,
                    const std::vector<double>& y,
                    const std::vector<double>& u);

double first_stage_cost(const CompactTwoStageProblem& p,
                        const std::vector<double>& x);

// Samples first-stage points (vertices of the feasible region under random
// objectives) and uncertainty points in [u_lo, u_hi]; verifies every pair
// admits feasible recourse. Reports worst penalty activation seen.
struct RecourseCheckReport {
  bool ok = true;
  int samples = 0;
  int infeasible = 0;
  double max_penalty = 0.0;
  std::string detail;
};
RecourseCheckReport check_relatively_complete_recourse(
    const CompactTwoStageProblem& p, const std::vector<double>& u_lo,
    const std::vector<double>& u_hi, int samples, unsigned seed);

// Sparse round-trip serialization (COO triplets, schema documented in
// docs/formats.md).
std::string to_json(const CompactTwoStageProblem& p);
CompactTwoStageProblem problem_from_json(const std::string& text);

// Solves the one-shot deterministic equivalent at a fixed uncertainty point:
// min c1'x + c2'y over coupled (x, y). Returns (objective, x, y).
struct DeterministicSolution {
  solver::Status status = solver::Status::Limit;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> y;
};
DeterministicSolution deterministic_solve(const CompactTwoStageProblem& p,
                                          const std::vector<double>& u,
                                          double mip_gap = 1e-6,
                                          double time_limit_s = 0.0);

}  // namespace robdn::compact
