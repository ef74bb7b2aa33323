#pragma once

#include "dwr/estimator.hpp"
#include "dwr/solvers.hpp"

#include <memory>

namespace dwr {

/// min 1/2 ||u - u_target||^2 over the observation box + alpha/2 ||q||^2 on
/// the control boundary, subject to a(u)(psi) = (f, psi) + (q, psi)_{Gamma_c}
/// + (g_N, psi) on the remaining boundary. The state form must be
/// symmetric and coercive; all boundaries are natural.
struct ControlProblem {
  FormDescriptor state_form = FormDescriptor::stiffness(1.0) + FormDescriptor::mass(1.0);
  ScalarField rhs = [](Point) { return 0.0; };
  BoundaryField neumann = [](int, Point) { return 0.0; };
  int control_tag = 4;
  Point observation_lo{0.5, 0.0};
  Point observation_hi{1.0, 1.0};
  ScalarField target = [](Point) { return 1.0; };
  double alpha = 0.01;

  bool observed(Point x) const;
};

/// Matrices of the discrete optimality system on a space.
struct ControlSystem {
  std::shared_ptr<const FeSpace> space;
  SparseMatrix A;          // state operator, constrained rows are identity rows
  SparseMatrix M_obs;      // mass on the observation box
  SparseMatrix M_control;  // boundary mass on Gamma_c (all dofs)
  Vector F;                // state data
  Vector g_obs;            // (u_target, phi)_obs
  std::vector<Index> control_dofs;
};

ControlSystem assemble_control_system(const ControlProblem& cp, std::shared_ptr<const FeSpace> space);

struct KktSolution {
  FeFunction u_h;
  FeFunction q_h;  // lives on the state space; only its trace on Gamma_c matters
  FeFunction z_h;
  SolverReport report;
};

/// Solves the coupled optimality system [u, q, z] monolithically by GMRES
/// with a block-triangular preconditioner. SolverError unless every block
/// residual is at most 1e-10.
KktSolution solve_kkt(const ControlProblem& cp, std::shared_ptr<const Mesh> mesh, unsigned degree = 1,
                      double tol = 1e-12);

/// Cost J(u, q) by quadrature.
double control_cost(const ControlProblem& cp, const FeFunction& u, const FeFunction& q);

/// State for a given control (solves one linear system).
FeFunction solve_state(const ControlProblem& cp, const ControlSystem& sys, const FeFunction& q);

/// Adjoint for a given state: a(phi, z) = (u - u_target, phi)_obs.
FeFunction solve_adjoint(const ControlProblem& cp, const ControlSystem& sys, const FeFunction& u);

/// Discrete reduced gradient alpha (q, chi)_Gamma + (chi, z)_Gamma for the
/// control basis functions chi (ordered as sys.control_dofs).
Vector reduced_gradient(const ControlProblem& cp, const ControlSystem& sys, const FeFunction& q,
                        const FeFunction& z);

/// Patch-quadratic recovery of the control along Gamma_c. The trace of the
/// biquadratic patch recovery on a boundary side is the 1D quadratic through
/// the three nodal values of the parent side, so the 2D recovery is reused.
FeFunction recover_control(const FeFunction& q_h);

/// Estimate of J(u, q) - J(u_h, q_h) by
/// 1/2 [rho*(z_h)(w_u) + rho^q(q_h)(w_q) + rho(u_h)(w_z)], where w = R - I_h R
/// for the recovered functions. Control-side terms are folded into the
/// cells adjacent to Gamma_c. Performs no linear solves; UsageError when a
/// recovery is missing.
ErrorEstimate control_error_estimate(const ControlProblem& cp, const KktSolution& sol,
                                       const FeFunction* recovered_u, const FeFunction* recovered_q,
                                       const FeFunction* recovered_z);

/// Re-solves the state with the computed control on a uniformly refined
/// mesh and returns the resulting cost (optional admissibility check).
double admissible_cost(const ControlProblem& cp, const KktSolution& sol);

} // namespace dwr
