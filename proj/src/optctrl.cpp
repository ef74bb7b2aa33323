#include "dwr/optctrl.hpp"

#include "dwr/assembly.hpp"
#include "dwr/discrete.hpp"
#include "dwr/errors.hpp"
#include "dwr/quadrature.hpp"
#include "dwr/recovery.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

namespace dwr {

namespace {

constexpr std::size_t kkt_max_iter = 5000;

std::string fmt_sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

void check(const ControlProblem& cp) {
  if (!(cp.alpha > 0.0))
    throw DomainError("control problem: alpha must be positive");
  if (!cp.state_form.symmetric() || cp.state_form.nonlinear())
    throw UsageError("control problem: state form must be linear and symmetric");
}

SparseMatrix boundary_mass(const FeSpace& space, int tag) {
  SparseMatrix M(make_pattern(space));
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.dofs_per_cell();
  std::vector<double> local(n * n);
  std::array<ShapeValue, 9> sv;
  for (Index c : mesh.active_cells())
    for (int s = 0; s < 4; ++s) {
      if (mesh.cell(c).boundary_tags[static_cast<std::size_t>(s)] != tag)
        continue;
      std::fill(local.begin(), local.end(), 0.0);
      auto [a, b] = mesh.side_vertices(c, s);
      for (const auto& q : segment_gauss(mesh.vertex(a), mesh.vertex(b), 3)) {
        space.shape(c, q.point, std::span(sv.data(), n));
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            local[i * n + j] += q.weight * sv[i].value * sv[j].value;
      }
      distribute_local(space, space.cell_dofs(c), local, {}, &M, nullptr);
    }
  return M;
}

VariationalProblem state_problem(const ControlProblem& cp, const FeFunction* q) {
  VariationalProblem p;
  p.form = cp.state_form;
  p.rhs = cp.rhs;
  const int tag = cp.control_tag;
  auto g = cp.neumann;
  if (q)
    p.neumann = [g, tag, q](int t, Point x) { return t == tag ? q->evaluate(x) : g(t, x); };
  else
    p.neumann = [g, tag](int t, Point x) { return t == tag ? 0.0 : g(t, x); };
  return p;
}

} // namespace

bool ControlProblem::observed(Point x) const {
  return x.x >= observation_lo.x && x.x <= observation_hi.x && x.y >= observation_lo.y &&
         x.y <= observation_hi.y;
}

ControlSystem assemble_control_system(const ControlProblem& cp, std::shared_ptr<const FeSpace> space) {
  check(cp);
  ControlSystem sys;
  sys.space = space;
  sys.A = assemble_operator(*space, cp.state_form);
  sys.M_obs = assemble_operator(*space, FormDescriptor::reaction([cp](Point x) { return cp.observed(x) ? 1.0 : 0.0; }));
  sys.M_control = boundary_mass(*space, cp.control_tag);
  for (Index i = 0; i < space->n_dofs(); ++i)
    if (space->is_constrained(i))
      sys.M_obs.set(i, i, 0.0);
  sys.F = assemble_rhs(*space, state_problem(cp, nullptr));
  VariationalProblem target;
  target.form = FormDescriptor::mass(1.0);
  target.rhs = [cp](Point x) { return cp.observed(x) ? cp.target(x) : 0.0; };
  sys.g_obs = assemble_rhs(*space, target);
  for (Index d : space->boundary_dofs({cp.control_tag}))
    if (!space->is_constrained(d))
      sys.control_dofs.push_back(d);
  if (sys.control_dofs.empty())
    throw DomainError("control problem: control boundary is empty");
  return sys;
}

KktSolution solve_kkt(const ControlProblem& cp, std::shared_ptr<const Mesh> mesh, unsigned degree,
                      double tol) {
  auto space = std::make_shared<const FeSpace>(mesh, degree);
  const ControlSystem sys = assemble_control_system(cp, space);
  const std::size_t n = space->n_dofs(), nc = sys.control_dofs.size();
  const std::size_t N = 2 * n + nc;

  std::vector<Index> cpos(n, static_cast<Index>(-1));
  for (std::size_t k = 0; k < nc; ++k)
    cpos[sys.control_dofs[k]] = static_cast<Index>(k);

  // Unknowns [u | q | z]:
  //   M_obs u            - A^T z = g_obs
  //          alpha M_cc q + N^T z = 0
  //   -A u + N q                 = -F
  std::vector<SparseMatrix::Triplet> t;
  std::vector<SparseMatrix::Triplet> tc;
  auto each = [](const SparseMatrix& M, auto&& f) {
    const auto& off = M.row_offsets();
    const auto& cols = M.column_indices();
    const auto& vals = M.values();
    for (std::size_t r = 0; r < M.n_rows(); ++r)
      for (std::size_t k = off[r]; k < off[r + 1]; ++k)
        if (vals[k] != 0.0)
          f(static_cast<Index>(r), cols[k], vals[k]);
  };
  each(sys.M_obs, [&](Index i, Index j, double v) { t.push_back({i, j, v}); });
  each(sys.A, [&](Index i, Index j, double v) {
    t.push_back({j, static_cast<Index>(n + nc + i), -v});
    t.push_back({static_cast<Index>(n + nc + i), j, -v});
  });
  each(sys.M_control, [&](Index i, Index j, double v) {
    const Index ci = cpos[i], cj = cpos[j];
    if (ci != static_cast<Index>(-1) && cj != static_cast<Index>(-1)) {
      t.push_back({static_cast<Index>(n + ci), static_cast<Index>(n + cj), cp.alpha * v});
      tc.push_back({ci, cj, cp.alpha * v});
    }
    if (cj != static_cast<Index>(-1)) {
      t.push_back({static_cast<Index>(n + nc + i), static_cast<Index>(n + cj), v});
      t.push_back({static_cast<Index>(n + cj), static_cast<Index>(n + nc + i), v});
    }
  });
  const SparseMatrix K = SparseMatrix::from_triplets(N, N, t);
  const SparseMatrix Mcc = SparseMatrix::from_triplets(nc, nc, tc);

  Vector rhs(N, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = sys.g_obs[i];
    rhs[n + nc + i] = -sys.F[i];
  }

  // Block-triangular preconditioner from K without the observation block:
  // -A z = r1, alpha M_cc q = r2 - N^T z, A u = N q - r3. The dropped part
  // is compact, so GMRES iteration counts stay bounded under refinement.
  GmresOptions opts;
  opts.restart = 100;
  opts.preconditioner = [&](std::span<const double> x, std::span<double> y) {
    const double inner = 1e-13;
    auto cg = [&](const SparseMatrix& B, const Vector& r) {
      if (norm2(r) == 0.0)
        return Vector(r.size(), 0.0);
      return solve_cg(B, r, inner, 10 * r.size() + 100).first;
    };
    Vector r(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    Vector z = cg(sys.A, r);
    for (double& v : z)
      v = -v;
    const Vector mz = sys.M_control * z;
    Vector rq(nc);
    for (std::size_t k = 0; k < nc; ++k)
      rq[k] = x[n + k] - mz[sys.control_dofs[k]];
    const Vector q = cg(Mcc, rq);
    Vector qfull(n, 0.0);
    for (std::size_t k = 0; k < nc; ++k)
      qfull[sys.control_dofs[k]] = q[k];
    Vector ru = sys.M_control * qfull;
    for (std::size_t i = 0; i < n; ++i)
      ru[i] = space->is_constrained(static_cast<Index>(i)) ? -x[n + nc + i] : ru[i] - x[n + nc + i];
    const Vector u = cg(sys.A, ru);
    std::copy(u.begin(), u.end(), y.begin());
    std::copy(q.begin(), q.end(), y.begin() + static_cast<std::ptrdiff_t>(n));
    std::copy(z.begin(), z.end(), y.begin() + static_cast<std::ptrdiff_t>(n + nc));
  };
  auto [x, report] = solve_gmres(K, rhs, tol, kkt_max_iter, opts);

  const Vector r = K * x;
  double worst = 0.0;
  for (auto [off, len] : {std::pair{std::size_t{0}, n}, std::pair{n, nc}, std::pair{n + nc, n}}) {
    double s = 0.0;
    for (std::size_t i = off; i < off + len; ++i)
      s += (rhs[i] - r[i]) * (rhs[i] - r[i]);
    worst = std::max(worst, std::sqrt(s));
  }
  // The contract is on the blocks; the relative GMRES target may stall
  // slightly above it because the inner solves are inexact.
  if (worst > 1e-10)
    throw SolverError("optimality system did not converge after " + std::to_string(report.iterations) +
                      " iterations (block residual " + fmt_sci(worst) + ")");

  KktSolution sol{FeFunction(space), FeFunction(space), FeFunction(space), report};
  for (std::size_t i = 0; i < n; ++i) {
    sol.u_h.coefficients()[i] = x[i];
    sol.z_h.coefficients()[i] = x[n + nc + i];
  }
  for (std::size_t k = 0; k < nc; ++k)
    sol.q_h.coefficients()[sys.control_dofs[k]] = x[n + k];
  sol.u_h.distribute_constraints();
  sol.q_h.distribute_constraints();
  sol.z_h.distribute_constraints();
  return sol;
}

double control_cost(const ControlProblem& cp, const FeFunction& u, const FeFunction& q) {
  const Mesh& mesh = u.space().mesh();
  double obs = 0.0;
  for (Index c : mesh.active_cells()) {
    const Point lo = mesh.lower_corner(c), hi = mesh.upper_corner(c);
    const Point mid{0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y)};
    if (!cp.observed(mid))
      continue;
    for (const auto& p : rectangle_gauss(lo, hi, 4)) {
      const double d = u.value(c, p.point) - cp.target(p.point);
      obs += p.weight * d * d;
    }
  }
  const Mesh& qm = q.space().mesh();
  double ctl = 0.0;
  for (Index c : qm.active_cells())
    for (int s = 0; s < 4; ++s) {
      if (qm.cell(c).boundary_tags[static_cast<std::size_t>(s)] != cp.control_tag)
        continue;
      auto [a, b] = qm.side_vertices(c, s);
      for (const auto& p : segment_gauss(qm.vertex(a), qm.vertex(b), 3)) {
        const double v = q.value(c, p.point);
        ctl += p.weight * v * v;
      }
    }
  return 0.5 * obs + 0.5 * cp.alpha * ctl;
}

FeFunction solve_state(const ControlProblem& cp, const ControlSystem& sys, const FeFunction& q) {
  (void)cp;
  Vector b = sys.F;
  const Vector mq = sys.M_control * q.coefficients();
  for (std::size_t i = 0; i < b.size(); ++i)
    if (!sys.space->is_constrained(static_cast<Index>(i)))
      b[i] += mq[i];
  auto [x, rep] = solve_cg(sys.A, b, 1e-12, 20000);
  if (!rep.converged)
    throw SolverError("state solve did not converge");
  FeFunction u(sys.space, std::move(x));
  u.distribute_constraints();
  return u;
}

FeFunction solve_adjoint(const ControlProblem& cp, const ControlSystem& sys, const FeFunction& u) {
  (void)cp;
  Vector b = sys.M_obs * u.coefficients();
  for (std::size_t i = 0; i < b.size(); ++i)
    b[i] -= sys.g_obs[i];
  auto [x, rep] = solve_cg(sys.A, b, 1e-12, 20000);
  if (!rep.converged)
    throw SolverError("adjoint solve did not converge");
  FeFunction z(sys.space, std::move(x));
  z.distribute_constraints();
  return z;
}

Vector reduced_gradient(const ControlProblem& cp, const ControlSystem& sys, const FeFunction& q,
                        const FeFunction& z) {
  const Vector mq = sys.M_control * q.coefficients();
  const Vector mz = sys.M_control * z.coefficients();
  Vector g(sys.control_dofs.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = cp.alpha * mq[sys.control_dofs[k]] + mz[sys.control_dofs[k]];
  return g;
}

FeFunction recover_control(const FeFunction& q_h) { return patch_recover(q_h); }

ErrorEstimate control_error_estimate(const ControlProblem& cp, const KktSolution& sol,
                                     const FeFunction* recovered_u, const FeFunction* recovered_q,
                                     const FeFunction* recovered_z) {
  if (!recovered_u || !recovered_q || !recovered_z)
    throw UsageError("control_error_estimate: recovered state, control and adjoint are required");
  check(cp);
  const auto& space = sol.u_h.space_ptr();
  const Mesh& mesh = space->mesh();
  const FeFunction w_u = interpolation_remainder(*recovered_u, space);
  const FeFunction w_q = interpolation_remainder(*recovered_q, space);
  const FeFunction w_z = interpolation_remainder(*recovered_z, space);

  // rho(u_h)(w_z): state residual with Neumann data q_h on Gamma_c.
  const auto P = localized_primal_residual(state_problem(cp, &sol.q_h), sol.u_h, w_z);

  // rho*(z_h)(w_u) with J_u'(u_h)(phi) = (u_h - u_target, phi)_obs.
  const FeFunction& u_h = sol.u_h;
  const auto goal = GoalFunctional::rhs_functional(
      [&cp, &u_h](Point x) { return cp.observed(x) ? u_h.evaluate(x) - cp.target(x) : 0.0; },
      [](int, Point) { return 0.0; });
  const auto D = localized_dual_residual(state_problem(cp, nullptr), &goal, sol.u_h, sol.z_h, w_u);

  // rho^q(q_h)(w_q) = alpha (q_h, w_q)_Gamma + (z_h, w_q)_Gamma, side by side.
  std::vector<double> C(P.size(), 0.0);
  const auto cells = mesh.active_cells();
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Index c = cells[k];
    for (int s = 0; s < 4; ++s) {
      if (mesh.cell(c).boundary_tags[static_cast<std::size_t>(s)] != cp.control_tag)
        continue;
      auto [a, b] = mesh.side_vertices(c, s);
      for (const auto& p : segment_gauss(mesh.vertex(a), mesh.vertex(b), 3))
        C[k] += p.weight * (cp.alpha * sol.q_h.value(c, p.point) + sol.z_h.value(c, p.point)) *
                w_q.value(c, p.point);
    }
  }

  ErrorEstimate est;
  est.has_dual_part = true;
  est.cells.assign(cells.begin(), cells.end());
  est.signed_cells.resize(cells.size());
  est.eta_cells.resize(cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    est.primal_part += 0.5 * P[k];
    est.dual_part += 0.5 * D[k];
    est.control_part += 0.5 * C[k];
    est.signed_cells[k] = 0.5 * (P[k] + D[k] + C[k]);
    est.eta_cells[k] = std::abs(est.signed_cells[k]);
    est.eta_global += est.eta_cells[k];
  }
  est.signed_estimate = est.primal_part + est.dual_part + est.control_part;
  return est;
}

double admissible_cost(const ControlProblem& cp, const KktSolution& sol) {
  auto fine = std::make_shared<const Mesh>(refine_uniform(sol.u_h.space().mesh(), 1));
  auto space = std::make_shared<const FeSpace>(fine, sol.u_h.space().degree());
  const FeFunction& q = sol.q_h;
  auto [u, rep] = solve_primal(space, state_problem(cp, &q), SolveOptions{1e-12, 1e-12, 20000});
  (void)rep;
  return control_cost(cp, u, q);
}

} // namespace dwr
