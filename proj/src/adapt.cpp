#include "dwr/adapt.hpp"

#include "dwr/errors.hpp"
#include "dwr/recovery.hpp"

#include <chrono>

namespace dwr {

std::optional<double> maybe_effectivity(std::optional<double> j_ref, double j_h, double eta) {
  if (!j_ref || !(eta > 0.0))
    return std::nullopt;
  return effectivity_index(*j_ref, j_h, eta);
}

ConvergenceTable adapt_loop(const AdaptiveProblem& ap, double tol, const MarkingStrategy& strategy,
                            std::size_t max_dofs, const AdaptOptions& options) {
  if (!(tol > 0.0))
    throw DomainError("adapt_loop: tolerance must be positive");
  ConvergenceTable table;
  auto mesh = std::make_shared<const Mesh>(ap.initial_mesh);
  for (std::size_t level = 0;; ++level) {
    const auto start = std::chrono::steady_clock::now();
    auto space = std::make_shared<const FeSpace>(mesh, 1);
    const GoalFunctional goal = ap.goal(*mesh);
    ConvergenceRow row;
    row.level = level;
    row.n_dofs = space->n_dofs();
    row.n_cells = mesh->n_active_cells();
    ErrorEstimate est;
    FeFunction u, z;
    try {
      u = solve_primal(space, ap.problem, options.solve).first;
      z = solve_dual(space, ap.problem, goal, u, options.solve).first;
    } catch (const SolverError& e) {
      table.status = AdaptStatus::solver_failure;
      table.message = e.what();
      return table;
    }
    const FeFunction rz = patch_recover(z);
    if (options.use_dual_part) {
      const FeFunction ru = patch_recover(u);
      est = localize_indicators(ap.problem, goal, u, z, &rz, &ru);
    } else {
      est = localize_indicators(ap.problem, goal, u, z, &rz);
    }
    row.j_h = goal.apply(u);
    row.eta = est.eta_global;
    row.signed_estimate = est.signed_estimate;
    if (ap.reference)
      row.j_ref = ap.reference(goal);
    row.i_eff = maybe_effectivity(row.j_ref, row.j_h, row.eta);
    est.effectivity = row.i_eff;
    row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    table.rows.push_back(row);
    if (options.observer)
      options.observer({level, mesh, &u, &z, &est});

    if (row.eta <= tol) {
      table.status = AdaptStatus::tolerance_reached;
      return table;
    }
    if (row.n_dofs > max_dofs) {
      table.status = AdaptStatus::max_dofs_reached;
      return table;
    }
    if (level + 1 >= options.max_levels) {
      table.status = AdaptStatus::max_levels_reached;
      return table;
    }
    mesh = std::make_shared<const Mesh>(refine_with_closure(*mesh, mark_cells(est, strategy, &u)));
  }
}

} // namespace dwr
