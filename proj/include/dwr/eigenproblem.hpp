#pragma once

#include "dwr/estimator.hpp"
#include "dwr/solvers.hpp"

#include <memory>
#include <set>

namespace dwr {

/// Generalized eigenproblem a(u, phi) = lambda m(u, phi) with homogeneous
/// Dirichlet conditions on the given tags.
struct EigenProblem {
  FormDescriptor a;
  FormDescriptor m;
  std::set<int> dirichlet_tags{1, 2, 3, 4};
  double shift = 0.0;
};

/// Discrete primal and adjoint eigenpairs with m(u_h, u_h) = 1 and
/// m(u_h, z_h) = 1.
struct EigenSolution {
  double lambda_h = 0.0;
  FeFunction u_h;
  double pi_h = 0.0;
  FeFunction z_h;
  SolverReport primal_report;
  SolverReport adjoint_report;
};

/// Stiffness and mass matrices of the pencil on a Q1 space: Dirichlet and
/// constrained rows are identity rows of A and zero rows of M.
std::pair<SparseMatrix, SparseMatrix> eigen_matrices(const FeSpace& space, const EigenProblem& problem);

/// m(f, g) by cell quadrature (both on the same mesh).
double m_product(const FormDescriptor& m, const FeFunction& f, const FeFunction& g);

/// Primal and adjoint eigenpairs closest to the shift. Throws
/// NormalizationError when m(u_h, z_h) nearly vanishes.
EigenSolution solve_eigen_pair(const EigenProblem& problem, std::shared_ptr<const Mesh> mesh,
                               double tol = 1e-11);

/// Eigenvalue estimate 1/2 rho(u_h, lambda_h)(w_z) + 1/2 rho*(z_h, pi_h)(w_u)
/// of lambda - lambda_h, with w = R - I_h R for the recovered
/// eigenfunctions. UsageError when a recovery is missing.
ErrorEstimate eigen_error_estimate(const EigenProblem& problem, const EigenSolution& sol,
                                   const FeFunction* recovered_u, const FeFunction* recovered_z);

/// Remainder 1/2 (lambda - lambda_h) m(u - u_h, z - z_h) for a reference
/// solution on a finer mesh of the same domain. The reference
/// eigenfunctions are rescaled to the discrete normalization first.
double eigen_remainder(const EigenProblem& problem, const EigenSolution& sol,
                       const EigenSolution& reference, double lambda);

} // namespace dwr
