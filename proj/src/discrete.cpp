#include "dwr/discrete.hpp"

#include "dwr/errors.hpp"
#include "dwr/recovery.hpp"

namespace dwr {

std::pair<Vector, SolverReport> solve_linear(const SparseMatrix& A, const Vector& b, bool symmetric,
                                             double tol, std::size_t max_iter) {
  if (symmetric)
    return solve_cg(A, b, tol, max_iter);
  return solve_gmres(A, b, tol, 100, max_iter);
}

std::pair<FeFunction, SolverReport> solve_primal(std::shared_ptr<const FeSpace> space,
                                                 const VariationalProblem& problem,
                                                 const SolveOptions& options) {
  const auto bc = dirichlet_values(*space, problem.dirichlet_tags, problem.dirichlet_values);

  if (!problem.form.nonlinear()) {
    SparseMatrix A = assemble_operator(*space, problem.form);
    Vector b = assemble_rhs(*space, problem);
    apply_dirichlet(A, b, bc);
    auto [x, rep] = solve_linear(A, b, problem.form.symmetric(), options.linear_tol, options.max_iter);
    if (!rep.converged)
      throw SolverError("primal linear solve did not converge");
    FeFunction u(space, std::move(x));
    u.distribute_constraints();
    return {std::move(u), rep};
  }

  Vector x0(space->n_dofs(), 0.0);
  for (const auto& [d, g] : bc)
    x0[d] = g;
  auto as_function = [&](std::span<const double> x) {
    FeFunction u(space, Vector(x.begin(), x.end()));
    u.distribute_constraints();
    return u;
  };
  auto residual = [&](std::span<const double> x) {
    Vector r = assemble_residual(*space, problem, as_function(x));
    for (const auto& [d, g] : bc)
      r[d] = x[d] - g;
    return r;
  };
  auto jac = [&](std::span<const double> x) {
    const FeFunction u = as_function(x);
    SparseMatrix J = assemble_operator(*space, problem.form, &u);
    Vector dummy(space->n_dofs(), 0.0);
    std::map<Index, double> zero;
    for (const auto& [d, g] : bc)
      zero[d] = 0.0;
    apply_dirichlet(J, dummy, zero);
    return J;
  };
  NewtonOptions no;
  no.symmetric_jacobian = problem.form.symmetric();
  no.linear_tol = options.linear_tol;
  auto [x, rep] = newton_solve(residual, jac, x0, options.newton_tol, no);
  if (!rep.converged)
    throw SolverError("Newton iteration did not converge");
  return {as_function(x), rep};
}

std::pair<FeFunction, SolverReport> solve_dual(std::shared_ptr<const FeSpace> space,
                                               const VariationalProblem& problem,
                                               const GoalFunctional& goal, const FeFunction& u_h,
                                               const SolveOptions& options) {
  const FeFunction* lin = nullptr;
  FeFunction moved;
  if (problem.form.nonlinear()) {
    if (u_h.space_ptr() == space) {
      lin = &u_h;
    } else {
      moved = interpolate(space, u_h);
      lin = &moved;
    }
  }
  SparseMatrix A = assemble_operator(*space, problem.form, lin, true);
  Vector j = assemble_functional(*space, goal, lin);
  apply_dirichlet(A, j, dirichlet_values(*space, problem.dirichlet_tags, [](Point) { return 0.0; }));
  auto [x, rep] = solve_linear(A, j, problem.form.symmetric(), options.linear_tol, options.max_iter);
  if (!rep.converged)
    throw SolverError("dual linear solve did not converge");
  FeFunction z(space, std::move(x));
  z.distribute_constraints();
  return {std::move(z), rep};
}

} // namespace dwr
