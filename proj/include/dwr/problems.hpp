#pragma once

#include "dwr/adapt.hpp"
#include "dwr/eigenproblem.hpp"
#include "dwr/optctrl.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dwr {

enum class ProblemKind { stationary, eigen, control };
enum class Geometry { unit_square, lshape };

/// How a reference value is obtained.
enum class ReferenceKind { series, closed_form, numerical };

struct ReferenceValue {
  double value = 0.0;
  ReferenceKind kind = ReferenceKind::closed_form;
  /// Bound on the series truncation error (series references only).
  double truncation_bound = 0.0;
};

/// One benchmark. Only the members matching `kind` are meaningful.
struct ProblemDefinition {
  std::string name;
  std::string summary;
  ProblemKind kind = ProblemKind::stationary;
  Geometry geometry = Geometry::unit_square;

  VariationalProblem problem;
  /// Goal on a given mesh (stationary problems; regularized goals depend
  /// on the mesh).
  std::function<GoalFunctional(const Mesh&)> goal;
  /// Reference J(u) for a goal instance, e.g. the regularized point value
  /// for the radius the goal was built with.
  std::function<std::optional<double>(const GoalFunctional&)> goal_reference;

  EigenProblem eigen;
  ControlProblem control;

  std::function<Mesh()> initial_mesh;
};

/// The seven registered problems, in the order P1, P1L, P2, P3, P4, P4n, P5.
const std::vector<ProblemDefinition>& registry();

/// Lookup by name; UsageError listing the registry otherwise.
const ProblemDefinition& find_problem(const std::string& name);

/// Newline separated "name  summary" listing.
std::string registry_listing();

/// Mesh-independent reference value of the problem's target quantity
/// (point value, flux, mean, eigenvalue or optimal cost). Numerical
/// references are computed once and cached.
ReferenceValue reference_value(const ProblemDefinition& p);

/// u(x0) for -Lap u = 1 on the unit square with u = 0 on the boundary, from
/// the double sine series over odd m, n <= max_index.
double poisson_square_series(Point x0, int max_index = 399);

/// Truncation bound of poisson_square_series at the center, using the
/// alternating signs of sin(m pi / 2).
double poisson_square_center_tail(int max_index = 399);

/// Mean of the same solution over the disc of radius r around x0 (disc
/// inside the square): each mode is damped by 2 J_1(k r) / (k r).
double poisson_square_disc_mean(Point x0, double r, int max_index = 399);

/// Outflow flux int u(1, y) dy of the P2 solution u = X(x) sin(pi y).
double advection_outflow_flux(double nu);

AdaptiveProblem adaptive_problem(const ProblemDefinition& p);

/// Fields of one level handed to run observers (for file output).
struct LevelOutput {
  std::size_t level = 0;
  std::shared_ptr<const Mesh> mesh;
  std::vector<std::pair<std::string, const FeFunction*>> fields;
  const ErrorEstimate* estimate = nullptr;
};

struct RunOptions {
  std::size_t max_levels = 40;
  std::function<void(const LevelOutput&)> observer;
};

/// Runs the adaptive pipeline matching the problem kind: adapt_loop for
/// stationary problems, eigenpair solve + estimate for eigenproblems and
/// the optimality system + estimate for control problems.
ConvergenceTable run_problem(const ProblemDefinition& p, double tol, const MarkingStrategy& strategy,
                             std::size_t max_dofs, const RunOptions& options = {});

} // namespace dwr
