#include "dwr/problems.hpp"

#include "dwr/errors.hpp"
#include "dwr/recovery.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

namespace dwr {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double p2_nu = 0.01;

Mesh unit_square_6x6() { return refine_uniform(Mesh::rect_grid(3, 3, {0.0, 0.0}, {1.0, 1.0}), 1); }
Mesh unit_square_8x8() { return refine_uniform(Mesh::rect_grid(2, 2, {0.0, 0.0}, {1.0, 1.0}), 2); }

// Q2 solution of P1L on a mesh graded toward the reentrant corner. The
// corner singularity pollutes the whole domain, so the corner cells are
// refined far below the uniform size.
const FeFunction& p1l_fine_solution(const VariationalProblem& problem) {
  static std::once_flag once;
  static FeFunction fine;
  std::call_once(once, [&] {
    Mesh m = refine_uniform(Mesh::lshape(), 5);
    for (int k = 0; k < 12; ++k) {
      const auto c = m.cells_containing({0.0, 0.0});
      m = refine_with_closure(m, std::set<Index>(c.begin(), c.end()));
    }
    auto space = std::make_shared<const FeSpace>(std::make_shared<const Mesh>(std::move(m)), 2);
    fine = solve_primal(space, problem, SolveOptions{1e-10, 1e-10, 200000}).first;
  });
  return fine;
}

double p5_reference_cost(const ControlProblem& cp) {
  static std::once_flag once;
  static double cost = 0.0;
  std::call_once(once, [&] {
    auto mesh = std::make_shared<const Mesh>(Mesh::rect_grid(64, 64, {0.0, 0.0}, {1.0, 1.0}));
    const KktSolution sol = solve_kkt(cp, mesh, 2);
    cost = control_cost(cp, sol.u_h, sol.q_h);
  });
  return cost;
}

std::vector<ProblemDefinition> build_registry() {
  std::vector<ProblemDefinition> r;

  {
    ProblemDefinition p;
    p.name = "P1";
    p.summary = "-Lap u = 1 on the unit square, u = 0; regularized point value at (0.5, 0.5)";
    p.problem.form = FormDescriptor::stiffness(1.0);
    p.problem.rhs = [](Point) { return 1.0; };
    p.problem.dirichlet_tags = {1, 2, 3, 4};
    p.goal = [](const Mesh& m) { return regularize_point_value({0.5, 0.5}, m); };
    p.goal_reference = [](const GoalFunctional& g) -> std::optional<double> {
      return poisson_square_disc_mean(g.center(), g.radius());
    };
    p.initial_mesh = unit_square_6x6;
    r.push_back(std::move(p));
  }
  {
    ProblemDefinition p;
    p.name = "P1L";
    p.summary = "-Lap u = 1 on the L-shaped domain, u = 0; regularized point value at (-0.5, 0.5)";
    p.geometry = Geometry::lshape;
    p.problem.form = FormDescriptor::stiffness(1.0);
    p.problem.rhs = [](Point) { return 1.0; };
    p.problem.dirichlet_tags = {1, 2, 3, 4};
    p.goal = [](const Mesh& m) { return regularize_point_value({-0.5, 0.5}, m); };
    const VariationalProblem prob = p.problem;
    p.goal_reference = [prob](const GoalFunctional& g) -> std::optional<double> {
      return g.apply(p1l_fine_solution(prob));
    };
    p.initial_mesh = [] { return refine_uniform(Mesh::lshape(), 2); };
    r.push_back(std::move(p));
  }
  {
    ProblemDefinition p;
    p.name = "P2";
    p.summary = "-0.01 Lap u + u_x = 0, u = sin(pi y) at inflow; outflow flux";
    p.problem.form = FormDescriptor::stiffness(p2_nu) + FormDescriptor::advection([](Point) { return Point{1.0, 0.0}; });
    p.problem.dirichlet_tags = {1, 3, 4};
    p.problem.dirichlet_values = [](Point x) { return std::sin(pi * x.y); };
    p.goal = [](const Mesh&) { return GoalFunctional::boundary_flux(2, 1.0); };
    p.goal_reference = [](const GoalFunctional&) -> std::optional<double> { return advection_outflow_flux(p2_nu); };
    p.initial_mesh = unit_square_8x8;
    r.push_back(std::move(p));
  }
  {
    ProblemDefinition p;
    p.name = "P3";
    p.summary = "-Lap u + u^3 = f with u = sin(pi x) sin(pi y); mean over [0, 0.5]^2";
    p.problem.form = FormDescriptor::stiffness(1.0) + FormDescriptor::semilinear_cubic(1.0);
    p.problem.rhs = [](Point x) {
      const double s = std::sin(pi * x.x) * std::sin(pi * x.y);
      return 2.0 * pi * pi * s + s * s * s;
    };
    p.problem.dirichlet_tags = {1, 2, 3, 4};
    p.goal = [](const Mesh&) { return GoalFunctional::subdomain_mean({0.0, 0.0}, {0.5, 0.5}); };
    p.goal_reference = [](const GoalFunctional&) -> std::optional<double> { return 4.0 / (pi * pi); };
    p.initial_mesh = unit_square_8x8;
    r.push_back(std::move(p));
  }
  {
    ProblemDefinition p;
    p.name = "P4";
    p.summary = "Laplace eigenvalue on the unit square (first eigenvalue)";
    p.kind = ProblemKind::eigen;
    p.eigen.a = FormDescriptor::stiffness(1.0);
    p.eigen.m = FormDescriptor::mass(1.0);
    p.eigen.shift = 15.0;
    p.initial_mesh = unit_square_8x8;
    r.push_back(std::move(p));
  }
  {
    ProblemDefinition p;
    p.name = "P4n";
    p.summary = "eigenvalue of -0.1 Lap u + u_x on the unit square (nonsymmetric)";
    p.kind = ProblemKind::eigen;
    p.eigen.a = FormDescriptor::stiffness(0.1) + FormDescriptor::advection([](Point) { return Point{1.0, 0.0}; });
    p.eigen.m = FormDescriptor::mass(1.0);
    p.eigen.shift = 4.0;
    p.initial_mesh = unit_square_8x8;
    r.push_back(std::move(p));
  }
  {
    ProblemDefinition p;
    p.name = "P5";
    p.summary = "Neumann boundary control of -Lap u + u on the left edge, target on the right half";
    p.kind = ProblemKind::control;
    p.control.target = [](Point x) { return 1.0 + 0.5 * std::cos(pi * x.y); };
    p.initial_mesh = [] { return refine_uniform(Mesh::rect_grid(2, 2, {0.0, 0.0}, {1.0, 1.0}), 1); };
    r.push_back(std::move(p));
  }
  return r;
}

struct LevelTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

// Shared stop rule; true when the loop ends after this row.
bool finished(ConvergenceTable& table, const ConvergenceRow& row, double tol, std::size_t max_dofs,
              std::size_t max_levels) {
  if (row.eta <= tol) {
    table.status = AdaptStatus::tolerance_reached;
    return true;
  }
  if (row.n_dofs > max_dofs) {
    table.status = AdaptStatus::max_dofs_reached;
    return true;
  }
  if (row.level + 1 >= max_levels) {
    table.status = AdaptStatus::max_levels_reached;
    return true;
  }
  return false;
}

ConvergenceTable run_eigen(const ProblemDefinition& p, double tol, const MarkingStrategy& strategy,
                           std::size_t max_dofs, const RunOptions& options) {
  ConvergenceTable table;
  const double ref = reference_value(p).value;
  auto mesh = std::make_shared<const Mesh>(p.initial_mesh());
  for (std::size_t level = 0;; ++level) {
    LevelTimer timer;
    EigenSolution sol;
    try {
      sol = solve_eigen_pair(p.eigen, mesh);
    } catch (const SolverError& e) {
      table.status = AdaptStatus::solver_failure;
      table.message = e.what();
      return table;
    }
    const FeFunction ru = patch_recover(sol.u_h), rz = patch_recover(sol.z_h);
    ErrorEstimate est = eigen_error_estimate(p.eigen, sol, &ru, &rz);
    ConvergenceRow row;
    row.level = level;
    row.n_dofs = sol.u_h.space().n_dofs();
    row.n_cells = mesh->n_active_cells();
    row.j_h = sol.lambda_h;
    row.eta = est.eta_global;
    row.signed_estimate = est.signed_estimate;
    row.j_ref = ref;
    row.i_eff = maybe_effectivity(row.j_ref, row.j_h, row.eta);
    est.effectivity = row.i_eff;
    row.wall_time_s = timer.seconds();
    table.rows.push_back(row);
    if (options.observer)
      options.observer({level, mesh, {{"u_h", &sol.u_h}, {"z_h", &sol.z_h}}, &est});
    if (finished(table, row, tol, max_dofs, options.max_levels))
      return table;
    mesh = std::make_shared<const Mesh>(refine_with_closure(*mesh, mark_cells(est, strategy, &sol.u_h)));
  }
}

ConvergenceTable run_control(const ProblemDefinition& p, double tol, const MarkingStrategy& strategy,
                             std::size_t max_dofs, const RunOptions& options) {
  ConvergenceTable table;
  const double ref = reference_value(p).value;
  auto mesh = std::make_shared<const Mesh>(p.initial_mesh());
  for (std::size_t level = 0;; ++level) {
    LevelTimer timer;
    std::optional<KktSolution> sol;
    try {
      sol = solve_kkt(p.control, mesh);
    } catch (const SolverError& e) {
      table.status = AdaptStatus::solver_failure;
      table.message = e.what();
      return table;
    }
    const FeFunction ru = patch_recover(sol->u_h), rq = recover_control(sol->q_h),
                     rz = patch_recover(sol->z_h);
    ErrorEstimate est = control_error_estimate(p.control, *sol, &ru, &rq, &rz);
    ConvergenceRow row;
    row.level = level;
    row.n_dofs = sol->u_h.space().n_dofs();
    row.n_cells = mesh->n_active_cells();
    row.j_h = control_cost(p.control, sol->u_h, sol->q_h);
    row.eta = est.eta_global;
    row.signed_estimate = est.signed_estimate;
    row.j_ref = ref;
    row.i_eff = maybe_effectivity(row.j_ref, row.j_h, row.eta);
    est.effectivity = row.i_eff;
    row.wall_time_s = timer.seconds();
    table.rows.push_back(row);
    if (options.observer)
      options.observer({level, mesh, {{"u_h", &sol->u_h}, {"q_h", &sol->q_h}, {"z_h", &sol->z_h}}, &est});
    if (finished(table, row, tol, max_dofs, options.max_levels))
      return table;
    mesh = std::make_shared<const Mesh>(refine_with_closure(*mesh, mark_cells(est, strategy, &sol->u_h)));
  }
}

} // namespace

const std::vector<ProblemDefinition>& registry() {
  static const std::vector<ProblemDefinition> r = build_registry();
  return r;
}

std::string registry_listing() {
  std::ostringstream os;
  for (const auto& p : registry())
    os << p.name << std::string(p.name.size() < 5 ? 5 - p.name.size() : 1, ' ') << p.summary << '\n';
  return os.str();
}

const ProblemDefinition& find_problem(const std::string& name) {
  for (const auto& p : registry())
    if (p.name == name)
      return p;
  throw UsageError("unknown problem '" + name + "'; available problems:\n" + registry_listing());
}

double poisson_square_series(Point x0, int max_index) {
  double s = 0.0;
  for (int m = 1; m <= max_index; m += 2)
    for (int n = 1; n <= max_index; n += 2)
      s += 16.0 / (std::pow(pi, 4) * m * n * (m * m + n * n)) * std::sin(m * pi * x0.x) * std::sin(n * pi * x0.y);
  return s;
}

double poisson_square_center_tail(int max_index) {
  // With alternating signs and terms decreasing in each index, every
  // omitted inner sum is bounded by its first term.
  auto b = [](double m, double n) { return 16.0 / (std::pow(pi, 4) * m * n * (m * m + n * n)); };
  const double first = max_index + 2;
  double t = 0.0;
  for (int m = 1; m <= max_index; m += 2)
    t += b(m, first);
  constexpr int cutoff = 1000001;
  for (int n = 1; n <= cutoff; n += 2)
    t += b(first, n);
  t += 16.0 / (std::pow(pi, 4) * first) / (2.0 * double(cutoff) * double(cutoff));
  return t;
}

double poisson_square_disc_mean(Point x0, double r, int max_index) {
  double s = 0.0;
  for (int m = 1; m <= max_index; m += 2)
    for (int n = 1; n <= max_index; n += 2) {
      const double k = pi * std::sqrt(double(m * m + n * n));
      s += 16.0 / (std::pow(pi, 4) * m * n * (m * m + n * n)) * std::sin(m * pi * x0.x) *
           std::sin(n * pi * x0.y) * 2.0 * std::cyl_bessel_j(1.0, k * r) / (k * r);
    }
  return s;
}

double advection_outflow_flux(double nu) {
  // nu X'' - X' - nu pi^2 X = 0, X(0) = 1, X'(1) = 0; the large root is
  // scaled out to avoid overflow.
  const double d = std::sqrt(1.0 + 4.0 * nu * nu * pi * pi);
  const double r1 = (1.0 + d) / (2.0 * nu), r2 = (1.0 - d) / (2.0 * nu);
  const double B = 1.0 / (1.0 - r2 * std::exp(r2 - r1) / r1);
  const double x1 = B * std::exp(r2) * (1.0 - r2 / r1);
  return x1 * 2.0 / pi;
}

ReferenceValue reference_value(const ProblemDefinition& p) {
  if (p.name == "P1")
    return {poisson_square_series({0.5, 0.5}), ReferenceKind::series, poisson_square_center_tail()};
  if (p.name == "P1L")
    return {p1l_fine_solution(p.problem).evaluate({-0.5, 0.5}), ReferenceKind::numerical, 0.0};
  if (p.name == "P2")
    return {advection_outflow_flux(p2_nu), ReferenceKind::closed_form, 0.0};
  if (p.name == "P3")
    return {4.0 / (pi * pi), ReferenceKind::closed_form, 0.0};
  if (p.name == "P4")
    return {2.0 * pi * pi, ReferenceKind::closed_form, 0.0};
  if (p.name == "P4n")
    return {0.2 * pi * pi + 2.5, ReferenceKind::closed_form, 0.0};
  if (p.name == "P5")
    return {p5_reference_cost(p.control), ReferenceKind::numerical, 0.0};
  throw UsageError("no reference rule for problem '" + p.name + "'");
}

AdaptiveProblem adaptive_problem(const ProblemDefinition& p) {
  if (p.kind != ProblemKind::stationary)
    throw UsageError("adaptive_problem: " + p.name + " is not a stationary problem");
  return {p.problem, p.initial_mesh(), p.goal, p.goal_reference};
}

ConvergenceTable run_problem(const ProblemDefinition& p, double tol, const MarkingStrategy& strategy,
                             std::size_t max_dofs, const RunOptions& options) {
  if (!(tol > 0.0))
    throw DomainError("run_problem: tolerance must be positive");
  switch (p.kind) {
  case ProblemKind::eigen:
    return run_eigen(p, tol, strategy, max_dofs, options);
  case ProblemKind::control:
    return run_control(p, tol, strategy, max_dofs, options);
  case ProblemKind::stationary:
    break;
  }
  AdaptOptions ao;
  ao.max_levels = options.max_levels;
  if (options.observer)
    ao.observer = [&options](const LevelData& d) {
      options.observer({d.level, d.mesh, {{"u_h", d.u_h}, {"z_h", d.z_h}}, d.estimate});
    };
  return adapt_loop(adaptive_problem(p), tol, strategy, max_dofs, ao);
}

} // namespace dwr
