#pragma once

#include "dwr/assembly.hpp"
#include "dwr/solvers.hpp"

#include <memory>

namespace dwr {

struct SolveOptions {
  double linear_tol = 1e-11;
  double newton_tol = 1e-11;
  std::size_t max_iter = 20000;
};

/// Solves the discrete primal problem a(u_h)(phi) = F(phi) on `space`
/// (Newton for nonlinear forms, CG for symmetric and GMRES for
/// nonsymmetric linear ones). Throws SolverError when the solver fails.
std::pair<FeFunction, SolverReport> solve_primal(std::shared_ptr<const FeSpace> space,
                                                 const VariationalProblem& problem,
                                                 const SolveOptions& options = {});

/// Solves a'(u_h)(phi, z_h) = J'(u_h)(phi) with homogeneous Dirichlet data
/// on the primal Dirichlet tags. `u_h` may live on another space over the
/// same domain; it is interpolated when needed.
std::pair<FeFunction, SolverReport> solve_dual(std::shared_ptr<const FeSpace> space,
                                               const VariationalProblem& problem,
                                               const GoalFunctional& goal, const FeFunction& u_h,
                                               const SolveOptions& options = {});

/// Solves the linear system A x = b, choosing CG when `symmetric`.
std::pair<Vector, SolverReport> solve_linear(const SparseMatrix& A, const Vector& b, bool symmetric,
                                             double tol, std::size_t max_iter);

} // namespace dwr
