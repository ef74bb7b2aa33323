#pragma once

#include "dwr/sparse.hpp"

#include <cstdint>
#include <functional>
#include <utility>

namespace dwr {

struct SolverReport {
  std::size_t iterations = 0;
  double final_residual_norm = 0.0;
  bool converged = false;
  /// Residual norm after each iteration (entry 0 is the initial residual).
  std::vector<double> residual_history;
};

/// Number of linear solves (CG/GMRES calls) performed by this process.
/// Used to assert that estimators do not solve anything.
std::uint64_t linear_solve_count();

/// Preconditioner application y = P^{-1} x.
using Preconditioner = std::function<void(std::span<const double>, std::span<double>)>;

/// Jacobi-preconditioned conjugate gradients with minimal residual
/// smoothing, so the recorded residual norms never increase. Converged
/// when ||b - A x|| <= tol ||b||.
std::pair<Vector, SolverReport> solve_cg(const SparseMatrix& A, std::span<const double> b,
                                         double tol, std::size_t max_iter);

struct GmresOptions {
  std::size_t restart = 50;
  /// Right preconditioner; Jacobi on the diagonal when empty and
  /// `jacobi` is set.
  Preconditioner preconditioner;
  bool jacobi = true;
};

/// Restarted GMRES with right preconditioning (Jacobi by default).
std::pair<Vector, SolverReport> solve_gmres(const SparseMatrix& A, std::span<const double> b,
                                            double tol, std::size_t restart,
                                            std::size_t max_iter);
std::pair<Vector, SolverReport> solve_gmres(const SparseMatrix& A, std::span<const double> b,
                                            double tol, std::size_t max_iter,
                                            const GmresOptions& options);

using ResidualFunction = std::function<Vector(std::span<const double>)>;
using JacobianFunction = std::function<SparseMatrix(std::span<const double>)>;

struct NewtonOptions {
  std::size_t max_iter = 30;
  std::size_t max_halvings = 10;
  bool symmetric_jacobian = false;  // use CG instead of GMRES
  double linear_tol = 1e-13;
};

/// Damped Newton iteration. The step is halved while the residual norm does
/// not decrease; a non-converged report is returned once damping is
/// exhausted or max_iter is reached.
std::pair<Vector, SolverReport> newton_solve(const ResidualFunction& residual,
                                             const JacobianFunction& jacobian,
                                             std::span<const double> x0, double tol,
                                             const NewtonOptions& options = {});

struct EigenPairResult {
  double lambda = 0.0;
  Vector vector;
  SolverReport report;
};

/// Shift-invert inverse iteration for A v = lambda M v (or the transposed
/// problem when `adjoint` is set). Starts from the normalized ramp
/// v_i = 1 + (i + 1) / (n + 1); symmetric shifted systems are solved by
/// CG with GMRES as fallback, others by GMRES. The returned vector has unit Euclidean norm and its
/// largest-magnitude entry is positive.
EigenPairResult eigen_pair(const SparseMatrix& A, const SparseMatrix& M, double shift,
                           bool adjoint, double tol, std::size_t max_iter = 500);

} // namespace dwr
