#include "dwr/eigenproblem.hpp"

#include "dwr/assembly.hpp"
#include "dwr/errors.hpp"
#include "dwr/quadrature.hpp"
#include "dwr/recovery.hpp"

#include <cmath>

namespace dwr {

std::pair<SparseMatrix, SparseMatrix> eigen_matrices(const FeSpace& space, const EigenProblem& problem) {
  SparseMatrix A = assemble_operator(space, problem.a);
  SparseMatrix M = assemble_operator(space, problem.m);
  std::map<Index, double> zero;
  for (Index d : space.boundary_dofs(problem.dirichlet_tags.empty() ? std::set<int>{-1}
                                                                    : problem.dirichlet_tags))
    zero[d] = 0.0;
  Vector dummy(space.n_dofs(), 0.0);
  apply_dirichlet(A, dummy, zero);
  apply_dirichlet(M, dummy, zero);
  for (Index i = 0; i < space.n_dofs(); ++i)
    if (zero.count(i) || space.is_constrained(i))
      M.set(i, i, 0.0);
  return {std::move(A), std::move(M)};
}

double m_product(const FormDescriptor& m, const FeFunction& f, const FeFunction& g) {
  if (&f.space().mesh() != &g.space().mesh())
    throw UsageError("m_product: functions on different meshes");
  const Mesh& mesh = f.space().mesh();
  double s = 0.0;
  for (Index c : mesh.active_cells())
    for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3))
      s += q.weight * m.operator_integrand(q.point, f.value(c, q.point), f.gradient(c, q.point),
                                           g.value(c, q.point), g.gradient(c, q.point));
  return s;
}

EigenSolution solve_eigen_pair(const EigenProblem& problem, std::shared_ptr<const Mesh> mesh,
                               double tol) {
  auto space = std::make_shared<const FeSpace>(mesh, 1);
  auto [A, M] = eigen_matrices(*space, problem);
  EigenPairResult primal = eigen_pair(A, M, problem.shift, false, tol);
  EigenPairResult adjoint = eigen_pair(A, M, problem.shift, true, tol);

  Vector& u = primal.vector;
  Vector& z = adjoint.vector;
  const Vector Mu = M * u;
  const double muu = dot(u, Mu);
  if (!(muu > 0.0))
    throw NormalizationError("solve_eigen_pair: eigenvector has zero m-norm");
  const double su = 1.0 / std::sqrt(muu);
  for (double& v : u)
    v *= su;
  const Vector Mz = M * z;
  const double muz = dot(Mu, z) * su;
  const double mzz = dot(z, Mz);
  if (!(std::abs(muz) > 1e-8 * std::sqrt(mzz)))
    throw NormalizationError("solve_eigen_pair: m(u_h, z_h) vanishes");
  for (double& v : z)
    v /= muz;

  EigenSolution sol;
  sol.lambda_h = primal.lambda;
  sol.pi_h = adjoint.lambda;
  sol.u_h = FeFunction(space, std::move(u));
  sol.u_h.distribute_constraints();
  sol.z_h = FeFunction(space, std::move(z));
  sol.z_h.distribute_constraints();
  sol.primal_report = primal.report;
  sol.adjoint_report = adjoint.report;
  return sol;
}

namespace {

// Variational problem whose residual F - a'(u) is -(a - lambda m).
VariationalProblem shifted(const EigenProblem& p, double lambda) {
  VariationalProblem v;
  v.form = p.a + p.m.scaled(-lambda);
  v.rhs = [](Point) { return 0.0; };
  v.neumann = [](int, Point) { return 0.0; };
  v.dirichlet_tags = p.dirichlet_tags;
  v.dirichlet_values = [](Point) { return 0.0; };
  return v;
}

} // namespace

ErrorEstimate eigen_error_estimate(const EigenProblem& problem, const EigenSolution& sol,
                                   const FeFunction* recovered_u, const FeFunction* recovered_z) {
  if (!recovered_u || !recovered_z)
    throw UsageError("eigen_error_estimate: recovered eigenfunctions missing");
  const FeFunction w_z = interpolation_remainder(*recovered_z, sol.u_h.space_ptr());
  const FeFunction w_u = interpolation_remainder(*recovered_u, sol.u_h.space_ptr());
  auto primal = localized_primal_residual(shifted(problem, sol.lambda_h), sol.u_h, w_z);
  auto dual = localized_dual_residual(shifted(problem, sol.pi_h), nullptr, sol.u_h, sol.z_h, w_u);
  for (double& v : primal)
    v = -v;
  for (double& v : dual)
    v = -v;
  return assemble_estimate(sol.u_h.space().mesh(), primal, &dual);
}

double eigen_remainder(const EigenProblem& problem, const EigenSolution& sol,
                       const EigenSolution& reference, double lambda) {
  const auto fine = reference.u_h.space_ptr();
  FeFunction u = reference.u_h, z = reference.z_h;
  const FeFunction uh = interpolate(fine, sol.u_h);
  const FeFunction zh = interpolate(fine, sol.z_h);
  // Align the reference with the discrete normalization.
  const double su = (m_product(problem.m, u, uh) < 0.0 ? -1.0 : 1.0) /
                    std::sqrt(m_product(problem.m, u, u));
  for (double& v : u.coefficients())
    v *= su;
  const double sz = 1.0 / m_product(problem.m, u, z);
  for (double& v : z.coefficients())
    v *= sz;
  u -= uh;
  z -= zh;
  return 0.5 * (lambda - sol.lambda_h) * m_product(problem.m, u, z);
}

} // namespace dwr
