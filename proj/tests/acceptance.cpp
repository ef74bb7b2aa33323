// Acceptance run: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "dwr/adapt.hpp"
#include "dwr/errors.hpp"
#include "dwr/problems.hpp"
#include "dwr/recovery.hpp"
#include "dwr/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace dwr;

namespace {

const double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

// n x n cells of the unit square grouped into sibling patches.
std::shared_ptr<const Mesh> square(std::size_t n) {
  return share(refine_uniform(Mesh::rect_grid(n / 2, n / 2, {0, 0}, {1, 1})));
}

Outcome effectivity_table() {
  struct Row {
    std::size_t n;
    double j_h, eta, i_eff;
  };
  const double j_ref = 5.57953;
  const Row rows[] = {{2244, 5.59431, 3.1e-2, 0.47}, {4368, 5.58980, 1.8e-2, 0.58},
                      {7680, 5.58507, 8.0e-3, 0.69}};
  Outcome o{true, ""};
  std::ostringstream s;
  for (const Row& r : rows) {
    const double v = effectivity_index(j_ref, r.j_h, r.eta);
    s << "N=" << r.n << " I_eff=" << v << " (table " << r.i_eff << ") ";
    o.pass = o.pass && std::abs(v - r.i_eff) <= 0.02;
  }
  o.detail = s.str();
  return o;
}

Outcome accurate_weight_identity() {
  const ProblemDefinition& def = find_problem("P1");
  const auto coarse = square(16);
  const auto space = std::make_shared<const FeSpace>(coarse, 1);
  const GoalFunctional goal = def.goal(*coarse);
  const auto j_ref = def.goal_reference(goal);
  if (!j_ref)
    return {false, "no reference for the regularized goal"};
  const auto [u, ru] = solve_primal(space, def.problem);
  const auto fine = std::make_shared<const FeSpace>(share(refine_uniform(*coarse, 2)), 2);
  const FeFunction u_fine = interpolate(fine, u);
  const auto [z, rz] = solve_dual(fine, def.problem, goal, u_fine);
  FeFunction w = z;
  w -= interpolate(fine, interpolate(space, z));
  const double est = weighted_primal_residual(def.problem, u_fine, w);
  const double err = *j_ref - goal.apply(u);
  const double rel = std::abs(est - err) / std::abs(err);
  std::ostringstream s;
  s << "J_ref - J_h = " << err << ", weighted residual = " << est << ", relative gap = " << rel;
  return {rel <= 0.02, s.str()};
}

Outcome abstract_identities() {
  AbstractFunctional L;
  L.value = [](std::span<const double> x) { return x[0] * x[0] + x[0] * x[1] + x[1] * x[1] - x[0]; };
  L.derivative = [](std::span<const double> x, std::span<const double> d) {
    return (2 * x[0] + x[1] - 1.0) * d[0] + (x[0] + 2 * x[1]) * d[1];
  };
  const std::vector<double> x{2.0 / 3.0, -1.0 / 3.0}, xh{0.5, 0.0};
  const std::vector<Vector> sub{{1.0, 0.0}};
  const double q = abstract_error_identity(L, x, xh, xh, &sub).estimate;
  const auto [l, r] = trapezoid_kernel_check([](double s) { return s * s; }, [](double) { return 2.0; });
  std::ostringstream s;
  s << "quadratic estimate " << q << ", trapezoid sides " << l << " / " << r;
  const bool ok = std::abs(q + 1.0 / 12.0) <= 1e-12 && std::abs(l + 1.0 / 6.0) <= 1e-12 &&
                  std::abs(r + 1.0 / 6.0) <= 1e-12;
  return {ok, s.str()};
}

Outcome effectivity_along_adaptation() {
  Outcome o{true, ""};
  std::ostringstream s;
  for (const char* name : {"P1", "P1L"}) {
    AdaptOptions opt;
    opt.max_levels = 6;
    const auto table =
        adapt_loop(adaptive_problem(find_problem(name)), 1e-14, MarkingStrategy::error_balancing(1.0),
                   100000000, opt);
    s << name << ":";
    for (const auto& row : table.rows) {
      s << ' ' << (row.i_eff ? std::to_string(*row.i_eff) : std::string("-"));
      if (row.level >= 2)
        o.pass = o.pass && row.i_eff && *row.i_eff >= 0.3 && *row.i_eff <= 3.0;
    }
    o.pass = o.pass && table.rows.size() == 6;
    s << "  ";
  }
  o.detail = s.str();
  return o;
}

// Dofs of the first level whose goal error is at most tol, 0 if none.
std::size_t dofs_to_reach(const ConvergenceTable& t, double reference, double tol) {
  for (const auto& row : t.rows)
    if (std::abs(row.j_h - reference) <= tol)
      return row.n_dofs;
  return 0;
}

Outcome adaptive_versus_uniform() {
  const ProblemDefinition& def = find_problem("P1L");
  const double ref = reference_value(def).value;
  const AdaptiveProblem ap = adaptive_problem(def);
  const auto adaptive = adapt_loop(ap, 1e-14, MarkingStrategy::error_balancing(1.5), 20000);
  const auto uniform = adapt_loop(ap, 1e-14, MarkingStrategy::uniform(), 20000);
  // Reported only: the default theta = 1.
  const auto adaptive1 = adapt_loop(ap, 1e-14, MarkingStrategy::error_balancing(1.0), 20000);
  const std::size_t na = dofs_to_reach(adaptive, ref, 5e-4), nu = dofs_to_reach(uniform, ref, 5e-4);
  std::ostringstream s;
  s << "dofs for error <= 5e-4: adaptive (theta 1.5) " << na << ", uniform " << nu
    << ", adaptive (theta 1, not graded) " << dofs_to_reach(adaptive1, ref, 5e-4);
  if (na == 0 || nu == 0)
    return {false, s.str()};
  const double ratio = static_cast<double>(nu) / static_cast<double>(na);
  s << ", ratio " << ratio;
  return {ratio >= 4.0, s.str()};
}

Outcome eigenvalue_estimates() {
  const EigenProblem& p = find_problem("P4").eigen;
  const double lambda = 2 * pi * pi;
  Outcome o{true, ""};
  std::ostringstream s;
  for (std::size_t n : {8, 16, 32}) {
    const auto mesh = square(n);
    const auto sol = solve_eigen_pair(p, mesh);
    const auto Ru = patch_recover(sol.u_h), Rz = patch_recover(sol.z_h);
    const auto est = eigen_error_estimate(p, sol, &Ru, &Rz);
    const double i_eff = std::abs(lambda - sol.lambda_h) / std::abs(est.signed_estimate);
    s << "h=1/" << n << " lambda_h-lambda=" << sol.lambda_h - lambda << " I_eff=" << i_eff;
    o.pass = o.pass && sol.lambda_h >= lambda && i_eff >= 0.5 && i_eff <= 2.0;
    if (n == 16) {
      const auto ref = solve_eigen_pair(p, share(refine_uniform(*mesh, 2)));
      const double R = eigen_remainder(p, sol, ref, lambda);
      const double gap = (lambda - sol.lambda_h) - est.signed_estimate;
      const bool close = std::abs(gap - R) <= 0.2 * std::abs(R);
      s << " [error minus estimate=" << gap << " remainder=" << R << (close ? "" : " mismatch") << "]";
      o.pass = o.pass && close;
    }
    s << "  ";
  }
  o.detail = s.str();
  return o;
}

Outcome control_estimates() {
  const ControlProblem& cp = find_problem("P5").control;
  Outcome o{true, ""};
  std::ostringstream s;
  for (std::size_t n : {4, 8, 16}) {
    const auto mesh = square(n);
    const auto sol = solve_kkt(cp, mesh);
    const auto ref = solve_kkt(cp, share(refine_uniform(*mesh, 2)), 2);
    const double j_ref = control_cost(cp, ref.u_h, ref.q_h);
    const double j_h = control_cost(cp, sol.u_h, sol.q_h);
    const auto before = linear_solve_count();
    const auto Ru = patch_recover(sol.u_h), Rq = recover_control(sol.q_h), Rz = patch_recover(sol.z_h);
    const auto est = control_error_estimate(cp, sol, &Ru, &Rq, &Rz);
    const auto solves = linear_solve_count() - before;
    const double i_eff = std::abs(j_ref - j_h) / est.eta_global;
    s << "h=1/" << n << " I_eff=" << i_eff << " solves=" << solves << "  ";
    o.pass = o.pass && i_eff >= 0.5 && i_eff <= 2.0 && solves == 0;
  }
  o.detail = s.str();
  return o;
}

Outcome invariant_suites() {
  const char* suites[] = {DWR_TEST_MESH, DWR_TEST_LINALG, DWR_TEST_FEM, DWR_TEST_DWR, DWR_TEST_CLI};
  Outcome o{true, ""};
  for (const char* exe : suites) {
    const std::string cmd = std::string("\"") + exe + "\" > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    const std::string name = std::string(exe).substr(std::string(exe).find_last_of('/') + 1);
    o.detail += name + (rc == 0 ? " ok  " : " FAILED  ");
    o.pass = o.pass && rc == 0;
  }
  return o;
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"effectivity index on tabulated rows", effectivity_table},
      {"weighted residual with accurate weight", accurate_weight_identity},
      {"abstract identity and trapezoid kernel", abstract_identities},
      {"effectivity along adaptation", effectivity_along_adaptation},
      {"adaptive versus uniform cost", adaptive_versus_uniform},
      {"eigenvalue estimate and remainder", eigenvalue_estimates},
      {"optimal control estimate", control_estimates},
      {"invariant suites", invariant_suites},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::cout << "criterion " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << "  "
              << criteria[i].first << "  (" << o.detail << "; " << secs << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
