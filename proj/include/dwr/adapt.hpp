#pragma once

#include "dwr/discrete.hpp"
#include "dwr/estimator.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace dwr {

/// A variational problem together with the rule producing its goal
/// functional on a given mesh and an optional reference for that goal.
struct AdaptiveProblem {
  VariationalProblem problem;
  Mesh initial_mesh;
  std::function<GoalFunctional(const Mesh&)> goal;
  /// Reference value J(u) of a goal, if known.
  std::function<std::optional<double>(const GoalFunctional&)> reference;
};

struct ConvergenceRow {
  std::size_t level = 0;
  std::size_t n_dofs = 0;
  std::size_t n_cells = 0;
  double j_h = 0.0;
  double eta = 0.0;
  double signed_estimate = 0.0;
  std::optional<double> j_ref;
  std::optional<double> i_eff;
  double wall_time_s = 0.0;
};

enum class AdaptStatus { tolerance_reached, max_dofs_reached, max_levels_reached, solver_failure };

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  AdaptStatus status = AdaptStatus::max_levels_reached;
  std::string message;
};

/// Everything computed on one level, handed to the observer.
struct LevelData {
  std::size_t level = 0;
  std::shared_ptr<const Mesh> mesh;
  const FeFunction* u_h = nullptr;
  const FeFunction* z_h = nullptr;
  const ErrorEstimate* estimate = nullptr;
};

struct AdaptOptions {
  std::size_t max_levels = 40;
  /// Add the dual-residual half of the estimate (weights from the
  /// recovered primal solution).
  bool use_dual_part = false;
  SolveOptions solve;
  std::function<void(const LevelData&)> observer;
};

/// Solve, estimate, mark and refine until eta <= tol, the dof count
/// exceeds max_dofs, or max_levels levels were computed. Solver failures
/// end the loop with a partial table and status solver_failure.
ConvergenceTable adapt_loop(const AdaptiveProblem& problem, double tol,
                            const MarkingStrategy& strategy, std::size_t max_dofs,
                            const AdaptOptions& options = {});

/// Effectivity from a reference, or nothing when no reference exists or
/// the estimate vanishes.
std::optional<double> maybe_effectivity(std::optional<double> j_ref, double j_h, double eta);

} // namespace dwr
