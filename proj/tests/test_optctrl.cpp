#include "dwr/errors.hpp"
#include "dwr/optctrl.hpp"
#include "dwr/recovery.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

using namespace dwr;

namespace {

const double pi = std::numbers::pi;

std::shared_ptr<const Mesh> square(std::size_t n) {
  return std::make_shared<const Mesh>(refine_uniform(Mesh::rect_grid(n / 2, n / 2, {0, 0}, {1, 1})));
}

ControlProblem model() {
  ControlProblem cp;
  cp.target = [](Point x) { return 1.0 + 0.5 * std::cos(pi * x.y); };
  return cp;
}

double norm(const Vector& v) {
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

Eigen::MatrixXd dense(const SparseMatrix& A) {
  Eigen::MatrixXd D(A.n_rows(), A.n_cols());
  const auto d = A.to_dense();
  for (std::size_t i = 0; i < A.n_rows(); ++i)
    for (std::size_t j = 0; j < A.n_cols(); ++j)
      D(i, j) = d[i][j];
  return D;
}

Eigen::VectorXd dense(const Vector& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

} // namespace

TEST_CASE("an attainable target needs no control") {
  ControlProblem cp = model();
  cp.rhs = [](Point x) { return 1.0 + x.x * x.y; };
  const auto mesh = square(8);
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  const auto sys = assemble_control_system(cp, space);
  const auto u0 = std::make_shared<FeFunction>(solve_state(cp, sys, FeFunction(space)));
  cp.target = [u0](Point x) { return u0->evaluate(x); };

  const auto sol = solve_kkt(cp, mesh);
  CHECK(norm(sol.q_h.coefficients()) <= 1e-10);
  CHECK(std::abs(control_cost(cp, sol.u_h, sol.q_h)) <= 1e-10);
  const auto Ru = patch_recover(sol.u_h), Rq = recover_control(sol.q_h), Rz = patch_recover(sol.z_h);
  const auto est = control_error_estimate(cp, sol, &Ru, &Rq, &Rz);
  CHECK(std::abs(est.primal_part) <= 1e-10);
  CHECK(std::abs(est.dual_part) <= 1e-10);
  CHECK(std::abs(est.control_part) <= 1e-10);
}

TEST_CASE("strong regularization suppresses the control") {
  ControlProblem cp = model();
  cp.alpha = 1e4;
  const auto a = solve_kkt(cp, square(8));
  cp.alpha = 1e6;
  const auto b = solve_kkt(cp, square(8));
  const double ratio = norm(a.q_h.coefficients()) / norm(b.q_h.coefficients());
  CHECK(ratio == doctest::Approx(100.0).epsilon(0.01));
}

TEST_CASE("optimality system on a 2x2 mesh matches a dense reduced-problem oracle") {
  const ControlProblem cp = model();
  const auto mesh = std::make_shared<const Mesh>(Mesh::rect_grid(2, 2, {0, 0}, {1, 1}));
  const auto sol = solve_kkt(cp, mesh);
  const auto sys = assemble_control_system(cp, sol.u_h.space_ptr());

  // u = A^{-1} (F + N q); minimize 1/2 u^T M_obs u - g^T u + alpha/2 q^T M_cc q.
  const Eigen::MatrixXd A = dense(sys.A), Mo = dense(sys.M_obs), Mc = dense(sys.M_control);
  const auto nc = static_cast<Eigen::Index>(sys.control_dofs.size());
  Eigen::MatrixXd N(A.rows(), nc), Mcc(nc, nc);
  for (Eigen::Index k = 0; k < nc; ++k) {
    N.col(k) = Mc.col(sys.control_dofs[k]);
    for (Eigen::Index l = 0; l < nc; ++l)
      Mcc(k, l) = Mc(sys.control_dofs[k], sys.control_dofs[l]);
  }
  const auto lu = A.fullPivLu();
  const Eigen::VectorXd u0 = lu.solve(dense(sys.F));
  const Eigen::MatrixXd B = lu.solve(N);
  const Eigen::MatrixXd H = cp.alpha * Mcc + B.transpose() * Mo * B;
  const Eigen::VectorXd q = H.fullPivLu().solve(B.transpose() * (dense(sys.g_obs) - Mo * u0));
  const Eigen::VectorXd u = u0 + B * q;
  const Eigen::VectorXd z = A.transpose().fullPivLu().solve(Mo * u - dense(sys.g_obs));

  for (Eigen::Index k = 0; k < nc; ++k)
    CHECK(std::abs(sol.q_h.coefficients()[sys.control_dofs[k]] - q(k)) <= 1e-9);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    CHECK(std::abs(sol.u_h.coefficients()[i] - u(i)) <= 1e-9);
    CHECK(std::abs(sol.z_h.coefficients()[i] - z(i)) <= 1e-9);
  }
}

TEST_CASE("the reduced gradient vanishes at the discrete optimum") {
  const ControlProblem cp = model();
  for (std::size_t n : {4, 8, 16}) {
    const auto sol = solve_kkt(cp, square(n));
    const auto sys = assemble_control_system(cp, sol.u_h.space_ptr());
    for (double g : reduced_gradient(cp, sys, sol.q_h, sol.z_h))
      CHECK(std::abs(g) <= 1e-10);
  }
}

TEST_CASE("finite differences confirm the adjoint gradient") {
  const ControlProblem cp = model();
  const auto space = std::make_shared<const FeSpace>(square(8), 1);
  const auto sys = assemble_control_system(cp, space);
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  FeFunction q(space), dq(space);
  for (Index d : sys.control_dofs) {
    q.coefficients()[d] = u01(rng);
    dq.coefficients()[d] = u01(rng);
  }
  const FeFunction u = solve_state(cp, sys, q);
  const FeFunction z = solve_adjoint(cp, sys, u);
  const Vector g = reduced_gradient(cp, sys, q, z);
  double directional = 0.0;
  for (std::size_t k = 0; k < sys.control_dofs.size(); ++k)
    directional += g[k] * dq.coefficients()[sys.control_dofs[k]];
  const double j0 = control_cost(cp, u, q);
  std::vector<double> errs;
  for (double eps : {1e-4, 1e-6}) {
    FeFunction qe = q;
    for (Index d : sys.control_dofs)
      qe.coefficients()[d] += eps * dq.coefficients()[d];
    const double fd = (control_cost(cp, solve_state(cp, sys, qe), qe) - j0) / eps;
    errs.push_back(std::abs(fd - directional));
    CHECK(errs.back() <= 10.0 * eps + 1e-8);
  }
  CHECK(errs[1] < errs[0]);
}

TEST_CASE("the estimate is invariant under reflection of the data") {
  ControlProblem up = model();
  up.target = [](Point x) { return 1.0 + x.y * x.y; };
  ControlProblem down = model();
  down.target = [](Point x) { return 1.0 + (1.0 - x.y) * (1.0 - x.y); };
  auto estimate = [](const ControlProblem& cp) {
    const auto sol = solve_kkt(cp, square(8));
    const auto Ru = patch_recover(sol.u_h), Rq = recover_control(sol.q_h), Rz = patch_recover(sol.z_h);
    return control_error_estimate(cp, sol, &Ru, &Rq, &Rz);
  };
  const auto a = estimate(up), b = estimate(down);
  CHECK(std::abs(a.signed_estimate - b.signed_estimate) <= 1e-10);
  CHECK(std::abs(a.eta_global - b.eta_global) <= 1e-10);
  CHECK(std::abs(a.signed_estimate) > 1e-6);
}

TEST_CASE("estimation performs no linear solves") {
  const ControlProblem cp = model();
  const auto sol = solve_kkt(cp, square(8));
  const auto Ru = patch_recover(sol.u_h), Rq = recover_control(sol.q_h), Rz = patch_recover(sol.z_h);
  const auto before = linear_solve_count();
  const auto est = control_error_estimate(cp, sol, &Ru, &Rq, &Rz);
  CHECK(linear_solve_count() == before);
  CHECK(est.eta_global > 0.0);
  CHECK_THROWS_AS(control_error_estimate(cp, sol, &Ru, nullptr, &Rz), UsageError);
  CHECK_THROWS_AS(control_error_estimate(cp, sol, nullptr, &Rq, &Rz), UsageError);
}

TEST_CASE("cost estimate against a fine reference") {
  const ControlProblem cp = model();
  const auto mesh = square(8);
  const auto sol = solve_kkt(cp, mesh);
  const auto ref = solve_kkt(cp, std::make_shared<const Mesh>(refine_uniform(*mesh, 2)), 2);
  const double j_ref = control_cost(cp, ref.u_h, ref.q_h);
  const double j_h = control_cost(cp, sol.u_h, sol.q_h);
  const auto Ru = patch_recover(sol.u_h), Rq = recover_control(sol.q_h), Rz = patch_recover(sol.z_h);
  const auto est = control_error_estimate(cp, sol, &Ru, &Rq, &Rz);
  const double i_eff = std::abs(j_ref - j_h) / est.eta_global;
  MESSAGE("J_ref = ", j_ref, ", J_h = ", j_h, ", eta = ", est.eta_global, ", I_eff = ", i_eff);
  CHECK(i_eff >= 0.5);
  CHECK(i_eff <= 2.0);
  // The state re-solved on a finer mesh with the same control stays close.
  CHECK(std::abs(admissible_cost(cp, sol) - j_h) <= 10.0 * std::abs(j_ref - j_h) + 1e-12);
}

TEST_CASE("invalid control problems are rejected") {
  ControlProblem cp = model();
  cp.alpha = 0.0;
  CHECK_THROWS_AS(solve_kkt(cp, square(4)), DomainError);
  cp = model();
  cp.control_tag = 9;
  CHECK_THROWS_AS(solve_kkt(cp, square(4)), DomainError);
}
