#include "dwr/adapt.hpp"
#include "dwr/errors.hpp"
#include "dwr/problems.hpp"
#include "dwr/quadrature.hpp"
#include "dwr/recovery.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

using namespace dwr;

namespace {

const double pi = std::numbers::pi;

std::shared_ptr<const Mesh> make_mesh(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

// L(x) = 1/2 x^T [[2,1],[1,2]] x - x_1.
AbstractFunctional quadratic_fixture() {
  AbstractFunctional L;
  L.value = [](std::span<const double> x) {
    return x[0] * x[0] + x[0] * x[1] + x[1] * x[1] - x[0];
  };
  L.derivative = [](std::span<const double> x, std::span<const double> d) {
    return (2 * x[0] + x[1] - 1.0) * d[0] + (x[0] + 2 * x[1]) * d[1];
  };
  L.third_derivative = [](std::span<const double>, std::span<const double>, std::span<const double>,
                          std::span<const double>) { return 0.0; };
  return L;
}

ErrorEstimate estimate_from(std::vector<double> eta) {
  ErrorEstimate e;
  for (std::size_t i = 0; i < eta.size(); ++i)
    e.cells.push_back(i);
  e.eta_cells = eta;
  e.signed_cells = eta;
  e.eta_global = std::accumulate(eta.begin(), eta.end(), 0.0);
  e.signed_estimate = e.eta_global;
  return e;
}

VariationalProblem poisson(ScalarField f) {
  VariationalProblem p;
  p.form = FormDescriptor::stiffness();
  p.rhs = std::move(f);
  p.dirichlet_tags = {1, 2, 3, 4};
  return p;
}

} // namespace

TEST_CASE("abstract identity is exact for a quadratic functional") {
  const auto L = quadratic_fixture();
  const std::vector<double> x{2.0 / 3.0, -1.0 / 3.0}, xh{0.5, 0.0};
  const std::vector<Vector> sub{{1.0, 0.0}};
  const auto r = abstract_error_identity(L, x, xh, xh, &sub);
  CHECK(r.estimate == doctest::Approx(-1.0 / 12.0).epsilon(1e-14));
  CHECK(std::abs(r.estimate - (L.value(x) - L.value(xh))) < 1e-12);
  REQUIRE(r.remainder);
  CHECK(*r.remainder == 0.0);

  const auto same = abstract_error_identity(L, xh, xh, xh, &sub);
  CHECK(same.estimate == 0.0);
  CHECK(*same.remainder == 0.0);

  // x_h = (1, 0) is not stationary on span{e1}.
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(abstract_error_identity(L, x, bad, bad, &sub), UsageError);
}

TEST_CASE("abstract identity plus cubic remainder reproduces the error") {
  // L(x) = x^4/4 + x^2/2 - x on R; discrete space {0}, so x_h = y_h = 0.
  AbstractFunctional L;
  L.value = [](std::span<const double> x) { return std::pow(x[0], 4) / 4 + x[0] * x[0] / 2 - x[0]; };
  L.derivative = [](std::span<const double> x, std::span<const double> d) {
    return (std::pow(x[0], 3) + x[0] - 1.0) * d[0];
  };
  L.third_derivative = [](std::span<const double> x, std::span<const double> a, std::span<const double> b,
                          std::span<const double> c) { return 6.0 * x[0] * a[0] * b[0] * c[0]; };
  // Real root of x^3 + x - 1 by bisection.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (lo + hi);
    (m * m * m + m - 1.0 > 0 ? hi : lo) = m;
  }
  const std::vector<double> x{0.5 * (lo + hi)}, xh{0.0};
  const auto r = abstract_error_identity(L, x, xh, xh);
  REQUIRE(r.remainder);
  CHECK(std::abs(r.estimate + *r.remainder - (L.value(x) - L.value(xh))) < 1e-12);
  CHECK(std::abs(*r.remainder) > 1e-3);
}

TEST_CASE("trapezoid kernel self-check") {
  auto [l2, r2] = trapezoid_kernel_check([](double s) { return s * s; }, [](double) { return 2.0; });
  CHECK(l2 == doctest::Approx(-1.0 / 6.0).epsilon(1e-14));
  CHECK(r2 == doctest::Approx(-1.0 / 6.0).epsilon(1e-14));

  auto [l1, r1] = trapezoid_kernel_check([](double s) { return 3.0 - 2.0 * s; }, [](double) { return 0.0; });
  CHECK(std::abs(l1) < 1e-15);
  CHECK(r1 == 0.0);

  // s^4: both sides are -3/10. Composite Simpson with h = 1/20 is not exact
  // for quartics; its error is h^4 max|g''''| / 180 per unit interval.
  auto [l4, r4] = trapezoid_kernel_check([](double s) { return std::pow(s, 4); },
                                         [](double s) { return 12.0 * s * s; });
  const double h4 = std::pow(1.0 / 20.0, 4);
  CHECK(std::abs(l4 + 0.3) <= h4 * 24.0 / 180.0 * (1 + 1e-9));
  CHECK(std::abs(r4 + 0.3) <= 0.5 * h4 * 288.0 / 180.0 * (1 + 1e-9));
  CHECK(std::abs(l4 - r4) <= h4 * (24.0 + 144.0) / 180.0);
}

TEST_CASE("weighted residuals vanish on discrete test functions") {
  const auto mesh = make_mesh(refine_with_closure(Mesh::rect_grid(4, 4, {0, 0}, {1, 1}), {0, 5}));
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  const auto p = poisson([](Point x) { return 1.0 + x.x * x.y; });
  const auto [u, ru] = solve_primal(space, p);
  const auto goal = GoalFunctional::subdomain_mean({0.25, 0.25}, {0.75, 0.5});
  const auto [z, rz] = solve_dual(space, p, goal, u);

  std::mt19937 rng(5);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    FeFunction psi(space);
    for (auto& c : psi.coefficients())
      c = n01(rng);
    for (Index d : space->boundary_dofs())
      psi.coefficients()[d] = 0.0;
    psi.distribute_constraints();
    double norm = 0.0;
    for (double c : psi.coefficients())
      norm += c * c;
    norm = std::sqrt(norm);
    CHECK(std::abs(weighted_primal_residual(p, u, psi)) <= 10.0 * 1e-11 * norm);
    CHECK(std::abs(weighted_dual_residual(p, goal, u, z, psi)) <= 10.0 * 1e-11 * norm);
  }

  // No data and u_h = 0.
  const auto zero_p = poisson([](Point) { return 0.0; });
  const FeFunction zero(space);
  const auto w = nodal_interpolate(space, [](Point x) { return std::sin(5 * x.x) * x.y; });
  CHECK(weighted_primal_residual(zero_p, zero, w) == 0.0);
  // J' = 0 and z_h = 0.
  CHECK(weighted_dual_residual(zero_p, u, zero, w) == 0.0);

  const auto other = std::make_shared<const FeSpace>(make_mesh(Mesh::rect_grid(4, 4, {0, 0}, {1, 1})), 1);
  CHECK_THROWS_AS(weighted_primal_residual(p, u, FeFunction(other)), UsageError);
}

TEST_CASE("dual equals primal when the goal is the right-hand side") {
  const auto mesh = make_mesh(refine_uniform(Mesh::rect_grid(2, 2, {0, 0}, {1, 1}), 2));
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  const auto p = poisson([](Point x) { return std::exp(x.x) + x.y; });
  const auto [u, ru] = solve_primal(space, p);
  const auto goal = GoalFunctional::rhs_functional(p.rhs, p.neumann);
  const auto [z, rz] = solve_dual(space, p, goal, u);
  for (Index d = 0; d < space->n_dofs(); ++d)
    CHECK(std::abs(z.coefficients()[d] - u.coefficients()[d]) < 1e-9);
  const auto rec = patch_recover(u);
  CHECK(std::abs(weighted_dual_residual(p, goal, u, z, rec) - weighted_primal_residual(p, u, rec)) < 1e-10);
  CHECK(std::abs(weighted_primal_residual(p, u, rec)) > 1e-6);
}

TEST_CASE("bilinear solutions give vanishing indicators") {
  const auto mesh = make_mesh(refine_with_closure(Mesh::rect_grid(4, 4, {0, 0}, {1, 1}), {5}));
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  VariationalProblem p = poisson([](Point) { return 0.0; });
  p.dirichlet_values = [](Point x) { return 1.0 + 2.0 * x.x - x.y + 3.0 * x.x * x.y; };
  const auto [u, ru] = solve_primal(space, p);
  const auto goal = GoalFunctional::subdomain_mean({0.1, 0.1}, {0.4, 0.6});
  const auto [z, rz] = solve_dual(space, p, goal, u);
  const auto Rz = patch_recover(z), Ru = patch_recover(u);
  const auto est = localize_indicators(p, goal, u, z, &Rz, &Ru);
  for (double e : est.eta_cells)
    CHECK(e <= 1e-12);
  CHECK_THROWS_AS(localize_indicators(p, goal, u, z, nullptr), UsageError);
}

TEST_CASE("indicators respect the symmetry of the data") {
  const auto mesh = make_mesh(Mesh::rect_grid(8, 8, {0, 0}, {1, 1}));
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  const auto p = poisson([](Point) { return 1.0; });
  const auto goal = regularize_point_value({0.5, 0.5}, *mesh);
  const auto [u, ru] = solve_primal(space, p);
  const auto [z, rz] = solve_dual(space, p, goal, u);
  const auto Rz = patch_recover(z);
  const auto est = localize_indicators(p, goal, u, z, &Rz);
  std::map<std::pair<int, int>, double> eta;
  for (std::size_t k = 0; k < est.cells.size(); ++k) {
    const Point lo = mesh->lower_corner(est.cells[k]);
    eta[{int(std::lround(lo.x * 8)), int(std::lround(lo.y * 8))}] = est.eta_cells[k];
  }
  double asym = 0.0;
  for (const auto& [ij, e] : eta) {
    const auto [i, j] = ij;
    asym = std::max(asym, std::abs(e - eta.at({7 - i, j})));
    asym = std::max(asym, std::abs(e - eta.at({i, 7 - j})));
    asym = std::max(asym, std::abs(e - eta.at({j, i})));
  }
  CHECK(asym <= 1e-10);
}

TEST_CASE("localized indicators match a brute-force residual oracle") {
  const auto mesh = make_mesh(refine_uniform(Mesh::rect_grid(2, 2, {0, 0}, {1, 1}), 2));
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  const auto& def = find_problem("P1");
  const auto& p = def.problem;
  const auto goal = def.goal(*mesh);
  const auto [u, ru] = solve_primal(space, p);
  const auto [z, rz] = solve_dual(space, p, goal, u);
  const auto Rz = patch_recover(z);
  const auto est = localize_indicators(p, goal, u, z, &Rz);
  const auto w = interpolation_remainder(Rz, space);

  // Per cell: (f, w)_K (Q1 Laplacians vanish) minus half the gradient jump
  // on interior sides, normal derivative on the (Dirichlet) boundary skipped.
  const Point normals[4] = {{0, -1}, {1, 0}, {0, 1}, {-1, 0}};
  double sum_abs = 0.0, sum_signed = 0.0;
  for (Index c : mesh->active_cells()) {
    double cell = 0.0;
    for (const auto& q : rectangle_gauss(mesh->lower_corner(c), mesh->upper_corner(c), 4))
      cell += q.weight * p.rhs(q.point) * w.value(c, q.point);
    for (int s = 0; s < 4; ++s) {
      if (mesh->cell(c).boundary_tags[s] != interior_tag)
        continue;
      auto [a, b] = mesh->side_vertices(c, s);
      const Point n = normals[s];
      for (const auto& q : segment_gauss(mesh->vertex(a), mesh->vertex(b), 4)) {
        const Point out{q.point.x + 1e-9 * n.x, q.point.y + 1e-9 * n.y};
        const auto nb = mesh->cells_containing(out);
        Index other = nb.front();
        for (Index k : nb)
          if (k != c)
            other = k;
        const Point g1 = u.gradient(c, q.point), g2 = u.gradient(other, q.point);
        const double jump = (g1.x - g2.x) * n.x + (g1.y - g2.y) * n.y;
        cell -= 0.5 * q.weight * jump * w.value(c, q.point);
      }
    }
    sum_abs += std::abs(cell);
    sum_signed += cell;
  }
  CHECK(std::abs(est.eta_global - sum_abs) <= 1e-12 * std::max(1.0, sum_abs));
  CHECK(std::abs(est.signed_estimate - sum_signed) <= 1e-12 * std::max(1.0, std::abs(sum_signed)));
  // Localization consistency with the weak form.
  CHECK(std::abs(est.signed_estimate - weighted_primal_residual(p, u, w)) <= 1e-10);
  double total = 0.0;
  for (double e : est.eta_cells) {
    CHECK(e >= 0.0);
    total += e;
  }
  CHECK(std::abs(total - est.eta_global) <= 1e-12 * est.eta_global);
}

TEST_CASE("the weighted residual with an accurate dual weight reproduces the goal error") {
  // -Lap u = 2 pi^2 sin(pi x) sin(pi y); mean over [0, 1/2]^2 is 4 / pi^2.
  const auto p = poisson([](Point x) { return 2 * pi * pi * std::sin(pi * x.x) * std::sin(pi * x.y); });
  const auto goal = GoalFunctional::subdomain_mean({0, 0}, {0.5, 0.5});
  const auto coarse = make_mesh(refine_with_closure(Mesh::rect_grid(8, 8, {0, 0}, {1, 1}), {0, 9, 27}));
  const auto space = std::make_shared<const FeSpace>(coarse, 1);
  const auto [u, ru] = solve_primal(space, p);
  const auto fine_space = std::make_shared<const FeSpace>(make_mesh(refine_uniform(*coarse, 2)), 2);
  const auto u_fine = interpolate(fine_space, u);
  const auto [z, rz] = solve_dual(fine_space, p, goal, u_fine);
  // Weight z - I_h z on the fine space.
  const auto Iz = interpolate(fine_space, interpolate(space, z));
  FeFunction w = z;
  w -= Iz;
  const double est = weighted_primal_residual(p, u_fine, w);
  const double err = 4.0 / (pi * pi) - goal.apply(u);
  CHECK(std::abs(err) > 1e-5);
  CHECK(std::abs(est - err) <= 0.02 * std::abs(err));
}

TEST_CASE("error balancing marking") {
  CHECK(mark_cells(estimate_from({0.5, 0.3, 0.1, 0.1}), MarkingStrategy::error_balancing(1.0)) ==
        std::set<Index>{0, 1});
  CHECK(mark_cells(estimate_from({0.2, 0.2, 0.2, 0.2}), MarkingStrategy::error_balancing(1.0)).empty());
  CHECK(mark_cells(estimate_from({0.2, 0.2, 0.2, 0.2}), MarkingStrategy::error_balancing(0.99)).size() == 4);
  CHECK(mark_cells(estimate_from({0.2, 0.2, 0.2}), MarkingStrategy::uniform()).size() == 3);
  CHECK_THROWS_AS(mark_cells(estimate_from({}), MarkingStrategy::uniform()), UsageError);
}

TEST_CASE("fixed fraction marking against a sort oracle and scale invariance") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> eta(8 + trial);
    for (auto& e : eta)
      e = u(rng);
    for (double f : {0.25, 0.5, 1.0}) {
      const auto marked = mark_cells(estimate_from(eta), MarkingStrategy::fixed_fraction(f));
      std::vector<Index> order(eta.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return eta[a] > eta[b]; });
      const auto n = static_cast<std::size_t>(std::ceil(f * eta.size()));
      CHECK(marked == std::set<Index>(order.begin(), order.begin() + n));
    }
    for (double c : {1e-8, 3.0, 1e6}) {
      std::vector<double> scaled = eta;
      for (auto& e : scaled)
        e *= c;
      for (const auto& s : {MarkingStrategy::error_balancing(1.0), MarkingStrategy::error_balancing(1.5),
                            MarkingStrategy::fixed_fraction(0.3)})
        CHECK(mark_cells(estimate_from(scaled), s) == mark_cells(estimate_from(eta), s));
    }
  }
  // Ties go to the lower cell id.
  CHECK(mark_cells(estimate_from({0.1, 0.3, 0.3, 0.3}), MarkingStrategy::fixed_fraction(0.5)) ==
        std::set<Index>{1, 2});
}

TEST_CASE("gradient jump marking picks the cells with the largest jumps") {
  const auto mesh = make_mesh(Mesh::rect_grid(4, 4, {0, 0}, {1, 1}));
  const auto space = std::make_shared<const FeSpace>(mesh, 1);
  const auto u = nodal_interpolate(space, [](Point x) { return std::abs(x.x - 0.5) < 0.2 ? 1.0 : 0.0; });
  const auto jumps = gradient_jump_indicators(u);
  ErrorEstimate e = estimate_from(std::vector<double>(mesh->n_active_cells(), 1.0));
  e.cells = mesh->active_cells();
  const auto marked = mark_cells(e, MarkingStrategy::adhoc_gradient_jump(0.3), &u);
  CHECK(marked.size() == 5);
  double smallest_marked = 1e300, largest_unmarked = 0.0;
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    if (marked.count(e.cells[k]))
      smallest_marked = std::min(smallest_marked, jumps[k]);
    else
      largest_unmarked = std::max(largest_unmarked, jumps[k]);
  }
  CHECK(smallest_marked >= largest_unmarked);
  CHECK_THROWS_AS(mark_cells(e, MarkingStrategy::adhoc_gradient_jump(0.3)), UsageError);
}

TEST_CASE("strategy names parse") {
  CHECK(parse_strategy("dwr").kind == MarkingStrategy::Kind::error_balancing);
  CHECK(parse_strategy("uniform").kind == MarkingStrategy::Kind::uniform);
  CHECK(parse_strategy("fixed_fraction:0.2").parameter == doctest::Approx(0.2));
  CHECK(parse_strategy("adhoc").kind == MarkingStrategy::Kind::adhoc_gradient_jump);
  CHECK_THROWS_AS(parse_strategy("bogus"), UsageError);
}

TEST_CASE("effectivity index") {
  CHECK(effectivity_index(5.57953, 5.59431, 3.1e-2) == doctest::Approx(0.477).epsilon(1e-3));
  CHECK(effectivity_index(5.57953, 5.58980, 1.8e-2) == doctest::Approx(0.571).epsilon(1e-3));
  CHECK(effectivity_index(1.0, 1.0, 0.5) == 0.0);
  CHECK_THROWS_AS(effectivity_index(1.0, 1.1, 0.0), DomainError);
  CHECK_THROWS_AS(effectivity_index(1.0, 1.1, -1.0), DomainError);
}

TEST_CASE("adaptation stops immediately for a bilinear solution") {
  AdaptiveProblem ap;
  ap.problem = poisson([](Point) { return 0.0; });
  ap.problem.dirichlet_values = [](Point x) { return x.x - 2.0 * x.x * x.y; };
  ap.initial_mesh = Mesh::rect_grid(4, 4, {0, 0}, {1, 1});
  ap.goal = [](const Mesh&) { return GoalFunctional::subdomain_mean({0.2, 0.2}, {0.7, 0.4}); };
  const auto table = adapt_loop(ap, 1e-8, MarkingStrategy::error_balancing(), 100000);
  CHECK(table.status == AdaptStatus::tolerance_reached);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].eta <= 1e-10);
}

TEST_CASE("adaptation on the point-value Poisson problem") {
  const auto table = adapt_loop(adaptive_problem(find_problem("P1")), 1e-4,
                                MarkingStrategy::error_balancing(1.0), 1000000);
  CHECK(table.status == AdaptStatus::tolerance_reached);
  REQUIRE(table.rows.size() >= 3);
  CHECK(table.rows.back().eta <= 1e-4);
  for (std::size_t k = 0; k + 2 < table.rows.size(); ++k)
    CHECK(std::min(table.rows[k + 1].eta, table.rows[k + 2].eta) <= table.rows[k].eta);
  for (std::size_t k = 0; k + 1 < table.rows.size(); ++k) {
    CHECK(table.rows[k + 1].n_dofs > table.rows[k].n_dofs);
    REQUIRE(table.rows[k].i_eff);
  }
}

TEST_CASE("solver failure aborts the loop with a partial table") {
  AdaptiveProblem ap;
  ap.problem = poisson([](Point) { return 1.0; });
  ap.initial_mesh = Mesh::rect_grid(4, 4, {0, 0}, {1, 1});
  ap.goal = [](const Mesh&) { return GoalFunctional::subdomain_mean({0.2, 0.2}, {0.7, 0.4}); };
  AdaptOptions opt;
  opt.solve.max_iter = 1;
  const auto table = adapt_loop(ap, 1e-8, MarkingStrategy::error_balancing(), 100000, opt);
  CHECK(table.status == AdaptStatus::solver_failure);
  CHECK(!table.message.empty());
}
