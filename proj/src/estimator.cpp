#include "dwr/estimator.hpp"

#include "dwr/errors.hpp"
#include "dwr/quadrature.hpp"
#include "dwr/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dwr {

namespace {

void require_same_mesh(const FeFunction& a, const FeFunction& b, const char* what) {
  if (&a.space().mesh() != &b.space().mesh())
    throw UsageError(std::string(what) + ": weight lives on a different mesh");
}

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

// Values and derivatives of a function on a cell at x.
struct Local {
  double v;
  Point g;
  double lap;
};

Local local(const FeFunction& f, Index c, Point x) {
  return {f.value(c, x), f.gradient(c, x), f.laplacian(c, x)};
}

FormDescriptor pointwise_part(const FormDescriptor& form) {
  FormDescriptor p;
  for (const auto& t : form.terms)
    if (t.kind != FormKind::custom)
      p.terms.push_back(t);
  return p;
}

// sum_i w_i sum_j K_ij u_j over custom kernels (test i, trial j).
double custom_terms(const FormDescriptor& form, Index c, const FeFunction& test,
                    const FeFunction& trial) {
  const FeSpace& sp = trial.space();
  const std::size_t n = sp.dofs_per_cell();
  const auto dofs = sp.cell_dofs(c);
  std::vector<double> k(n * n);
  double s = 0.0;
  for (const auto& t : form.terms) {
    if (t.kind != FormKind::custom)
      continue;
    std::fill(k.begin(), k.end(), 0.0);
    t.kernel(sp, c, k);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        s += test.coefficients()[dofs[i]] * k[i * n + j] * trial.coefficients()[dofs[j]];
  }
  return s;
}

void require_custom_compatible(const FormDescriptor& form, const FeFunction& u, const FeFunction& w) {
  if (form.has_custom() && w.space_ptr() != u.space_ptr())
    throw UsageError("custom cell kernels need the weight on the solution space");
}

} // namespace

IdentityResult abstract_error_identity(const AbstractFunctional& L, std::span<const double> x,
                                       std::span<const double> x_h, std::span<const double> y_h,
                                       const std::vector<Vector>* subspace,
                                       double stationarity_tol) {
  const std::size_t n = x.size();
  if (x_h.size() != n || y_h.size() != n)
    throw UsageError("abstract_error_identity: dimension mismatch");
  if (subspace)
    for (const auto& b : *subspace)
      if (std::abs(L.derivative(x_h, b)) > stationarity_tol * std::max(1.0, norm2(b)))
        throw UsageError("abstract_error_identity: x_h is not stationary on the subspace");

  Vector d(n), e(n);
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = x[i] - y_h[i];
    e[i] = x[i] - x_h[i];
  }
  IdentityResult r;
  r.estimate = 0.5 * L.derivative(x_h, d);
  if (L.third_derivative) {
    const auto& g = gauss_legendre(5);
    Vector xs(n);
    double sum = 0.0;
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double s = g.points[q];
      for (std::size_t i = 0; i < n; ++i)
        xs[i] = x_h[i] + s * e[i];
      sum += g.weights[q] * L.third_derivative(xs, e, e, e) * s * (s - 1.0);
    }
    r.remainder = 0.5 * sum;
  }
  return r;
}

std::pair<double, double> trapezoid_kernel_check(const std::function<double(double)>& f,
                                                 const std::function<double(double)>& f2) {
  constexpr int panels = 20;
  auto simpson = [](const std::function<double(double)>& g) {
    const double h = 1.0 / panels;
    double s = g(0.0) + g(1.0);
    for (int i = 1; i < panels; ++i)
      s += (i % 2 ? 4.0 : 2.0) * g(i * h);
    return s * h / 3.0;
  };
  const double lhs = simpson(f) - 0.5 * (f(0.0) + f(1.0));
  const double rhs = 0.5 * simpson([&f2](double s) { return f2(s) * s * (s - 1.0); });
  return {lhs, rhs};
}

double weighted_primal_residual(const VariationalProblem& problem, const FeFunction& u_h,
                                const FeFunction& weight) {
  require_same_mesh(u_h, weight, "weighted_primal_residual");
  require_custom_compatible(problem.form, u_h, weight);
  const Mesh& mesh = u_h.space().mesh();
  const FormDescriptor pw = pointwise_part(problem.form);
  double total = 0.0;
  for (Index c : mesh.active_cells()) {
    double s = 0.0;
    for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3)) {
      const double u = u_h.value(c, q.point), w = weight.value(c, q.point);
      const Point gu = u_h.gradient(c, q.point), gw = weight.gradient(c, q.point);
      s += q.weight * (problem.rhs(q.point) * w -
                       (pw.terms.empty() ? 0.0 : pw.operator_integrand(q.point, u, gu, w, gw)));
    }
    s -= custom_terms(problem.form, c, weight, u_h);
    for (int side = 0; side < 4; ++side) {
      const int tag = mesh.cell(c).boundary_tags[static_cast<std::size_t>(side)];
      if (tag == interior_tag || problem.is_dirichlet(tag))
        continue;
      auto [a, b] = mesh.side_vertices(c, side);
      for (const auto& q : segment_gauss(mesh.vertex(a), mesh.vertex(b), 3))
        s += q.weight * problem.neumann(tag, q.point) * weight.value(c, q.point);
    }
    total += s;
  }
  return total;
}

double weighted_dual_residual(const VariationalProblem& problem, const FeFunction& u_h,
                              const FeFunction& z_h, const FeFunction& weight) {
  require_same_mesh(u_h, weight, "weighted_dual_residual");
  require_same_mesh(z_h, weight, "weighted_dual_residual");
  require_custom_compatible(problem.form, z_h, weight);
  const Mesh& mesh = u_h.space().mesh();
  const FormDescriptor pw = pointwise_part(problem.form);
  double total = 0.0;
  for (Index c : mesh.active_cells()) {
    if (!pw.terms.empty())
      for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3)) {
        const double u = u_h.value(c, q.point);
        total -= q.weight * pw.linearized_integrand(q.point, u, weight.value(c, q.point),
                                                    weight.gradient(c, q.point),
                                                    z_h.value(c, q.point), z_h.gradient(c, q.point));
      }
    total -= custom_terms(problem.form, c, z_h, weight);
  }
  return total;
}

double weighted_dual_residual(const VariationalProblem& problem, const GoalFunctional& goal,
                              const FeFunction& u_h, const FeFunction& z_h,
                              const FeFunction& weight) {
  return goal.apply(weight) + weighted_dual_residual(problem, u_h, z_h, weight);
}

std::vector<double> localized_primal_residual(const VariationalProblem& problem,
                                              const FeFunction& u_h, const FeFunction& weight) {
  require_same_mesh(u_h, weight, "localized_primal_residual");
  if (problem.form.has_custom())
    throw UsageError("custom cell kernels cannot be localized");
  const Mesh& mesh = u_h.space().mesh();
  const double nu = problem.form.diffusion();
  std::vector<double> out(mesh.n_active_cells(), 0.0);
  for (Index c : mesh.active_cells()) {
    double s = 0.0;
    for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3)) {
      const Local u = local(u_h, c, q.point);
      const double r = problem.rhs(q.point) - problem.form.strong_operator(q.point, u.v, u.g, u.lap);
      s += q.weight * r * weight.value(c, q.point);
    }
    for (int side = 0; side < 4; ++side) {
      const Point n = side_normal(side);
      const int tag = mesh.cell(c).boundary_tags[static_cast<std::size_t>(side)];
      if (tag != interior_tag) {
        auto [a, b] = mesh.side_vertices(c, side);
        for (const auto& q : segment_gauss(mesh.vertex(a), mesh.vertex(b), 3)) {
          const double g = problem.is_dirichlet(tag) ? 0.0 : problem.neumann(tag, q.point);
          s += q.weight * (g - problem.form.conormal(u_h.gradient(c, q.point), n)) *
               weight.value(c, q.point);
        }
        continue;
      }
      for (const SubFace& f : mesh.side_neighbors(c, side))
        for (const auto& q : segment_gauss(f.a, f.b, 3)) {
          const Point jump = u_h.gradient(c, q.point) - u_h.gradient(f.neighbor, q.point);
          s -= q.weight * 0.5 * nu * dot(jump, n) * weight.value(c, q.point);
        }
    }
    out[mesh.active_position(c)] = s;
  }
  return out;
}

std::vector<double> localized_dual_residual(const VariationalProblem& problem,
                                            const GoalFunctional* goal, const FeFunction& u_h,
                                            const FeFunction& z_h, const FeFunction& weight) {
  require_same_mesh(u_h, weight, "localized_dual_residual");
  require_same_mesh(z_h, weight, "localized_dual_residual");
  if (problem.form.has_custom())
    throw UsageError("custom cell kernels cannot be localized");
  const Mesh& mesh = u_h.space().mesh();
  const double nu = problem.form.diffusion();
  std::vector<double> out(mesh.n_active_cells(), 0.0);
  for (Index c : mesh.active_cells()) {
    double s = 0.0;
    if (goal) {
      for (const auto& q : goal->cell_quadrature(mesh, c))
        s += q.weight * weight.value(c, q.point);
      for (int side = 0; side < 4; ++side)
        for (const auto& q : goal->side_quadrature(mesh, c, side))
          s += q.weight * weight.value(c, q.point);
    }
    for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3)) {
      const Local z = local(z_h, c, q.point);
      const double r = problem.form.strong_adjoint(q.point, u_h.value(c, q.point), z.v, z.g, z.lap);
      s -= q.weight * r * weight.value(c, q.point);
    }
    for (int side = 0; side < 4; ++side) {
      const Point n = side_normal(side);
      const int tag = mesh.cell(c).boundary_tags[static_cast<std::size_t>(side)];
      if (tag != interior_tag) {
        auto [a, b] = mesh.side_vertices(c, side);
        for (const auto& q : segment_gauss(mesh.vertex(a), mesh.vertex(b), 3))
          s -= q.weight *
               problem.form.adjoint_conormal(q.point, z_h.value(c, q.point), z_h.gradient(c, q.point), n) *
               weight.value(c, q.point);
        continue;
      }
      // The advective part of the adjoint conormal cancels across sides.
      for (const SubFace& f : mesh.side_neighbors(c, side))
        for (const auto& q : segment_gauss(f.a, f.b, 3)) {
          const Point jump = z_h.gradient(c, q.point) - z_h.gradient(f.neighbor, q.point);
          s -= q.weight * 0.5 * nu * dot(jump, n) * weight.value(c, q.point);
        }
    }
    out[mesh.active_position(c)] = s;
  }
  return out;
}

ErrorEstimate assemble_estimate(const Mesh& mesh, const std::vector<double>& primal,
                                const std::vector<double>* dual) {
  ErrorEstimate e;
  e.cells = mesh.active_cells();
  const std::size_t n = e.cells.size();
  if (primal.size() != n || (dual && dual->size() != n))
    throw UsageError("assemble_estimate: size mismatch");
  e.signed_cells.resize(n);
  e.eta_cells.resize(n);
  double p = 0.0, d = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    p += primal[k];
    if (dual)
      d += (*dual)[k];
    e.signed_cells[k] = dual ? 0.5 * (primal[k] + (*dual)[k]) : primal[k];
    e.eta_cells[k] = std::abs(e.signed_cells[k]);
  }
  e.primal_part = 0.5 * p;
  e.has_dual_part = dual != nullptr;
  e.dual_part = dual ? 0.5 * d : 0.0;
  e.signed_estimate = dual ? e.primal_part + e.dual_part : 2.0 * e.primal_part;
  e.eta_global = std::accumulate(e.eta_cells.begin(), e.eta_cells.end(), 0.0);
  return e;
}

ErrorEstimate localize_indicators(const VariationalProblem& problem, const GoalFunctional& goal,
                                  const FeFunction& u_h, const FeFunction& z_h,
                                  const FeFunction* recovered_z, const FeFunction* recovered_u) {
  if (!recovered_z)
    throw UsageError("localize_indicators: recovered dual solution missing");
  const FeFunction w_z = interpolation_remainder(*recovered_z, z_h.space_ptr());
  const auto primal = localized_primal_residual(problem, u_h, w_z);
  if (!recovered_u)
    return assemble_estimate(u_h.space().mesh(), primal);
  const FeFunction w_u = interpolation_remainder(*recovered_u, u_h.space_ptr());
  const auto dual = localized_dual_residual(problem, &goal, u_h, z_h, w_u);
  return assemble_estimate(u_h.space().mesh(), primal, &dual);
}

MarkingStrategy MarkingStrategy::error_balancing(double theta) {
  if (!(theta > 0.0))
    throw DomainError("error_balancing: theta must be positive");
  return {Kind::error_balancing, theta};
}

MarkingStrategy MarkingStrategy::fixed_fraction(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw DomainError("fixed_fraction: fraction must lie in (0, 1]");
  return {Kind::fixed_fraction, fraction};
}

MarkingStrategy MarkingStrategy::uniform() { return {Kind::uniform, 1.0}; }

MarkingStrategy MarkingStrategy::adhoc_gradient_jump(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw DomainError("adhoc_gradient_jump: fraction must lie in (0, 1]");
  return {Kind::adhoc_gradient_jump, fraction};
}

std::string MarkingStrategy::name() const {
  std::ostringstream os;
  switch (kind) {
  case Kind::error_balancing:
    os << "error_balancing(" << parameter << ")";
    break;
  case Kind::fixed_fraction:
    os << "fixed_fraction(" << parameter << ")";
    break;
  case Kind::uniform:
    os << "uniform";
    break;
  case Kind::adhoc_gradient_jump:
    os << "adhoc_gradient_jump(" << parameter << ")";
    break;
  }
  return os.str();
}

MarkingStrategy parse_strategy(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  std::optional<double> arg;
  if (colon != std::string::npos) {
    try {
      arg = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw UsageError("bad strategy parameter in '" + text + "'");
    }
  }
  if (head == "dwr" || head == "error_balancing")
    return MarkingStrategy::error_balancing(arg.value_or(1.0));
  if (head == "fixed_fraction")
    return MarkingStrategy::fixed_fraction(arg.value_or(0.3));
  if (head == "uniform")
    return MarkingStrategy::uniform();
  if (head == "adhoc" || head == "adhoc_gradient_jump")
    return MarkingStrategy::adhoc_gradient_jump(arg.value_or(0.3));
  throw UsageError("unknown strategy '" + text +
                   "' (expected dwr, fixed_fraction[:f], uniform or adhoc)");
}

std::vector<double> gradient_jump_indicators(const FeFunction& u_h) {
  const Mesh& mesh = u_h.space().mesh();
  std::vector<double> out(mesh.n_active_cells(), 0.0);
  for (Index c : mesh.active_cells()) {
    double s = 0.0;
    for (int side = 0; side < 4; ++side) {
      if (mesh.cell(c).boundary_tags[static_cast<std::size_t>(side)] != interior_tag)
        continue;
      const Point n = side_normal(side);
      for (const SubFace& f : mesh.side_neighbors(c, side)) {
        const Point mid = 0.5 * (f.a + f.b);
        const Point d = f.b - f.a;
        const double jump = dot(u_h.gradient(c, mid) - u_h.gradient(f.neighbor, mid), n);
        s += std::abs(jump) * std::hypot(d.x, d.y);
      }
    }
    out[mesh.active_position(c)] = s;
  }
  return out;
}

namespace {

std::set<Index> top_fraction(const std::vector<Index>& cells, const std::vector<double>& values,
                             double fraction) {
  const std::size_t n = cells.size();
  const auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-12));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b])
      return values[a] > values[b];
    return cells[a] < cells[b];
  });
  std::set<Index> marked;
  for (std::size_t k = 0; k < std::min(count, n); ++k)
    marked.insert(cells[order[k]]);
  return marked;
}

} // namespace

std::set<Index> mark_cells(const ErrorEstimate& estimate, const MarkingStrategy& strategy,
                           const FeFunction* u_h) {
  const std::size_t n = estimate.eta_cells.size();
  if (n == 0 || estimate.cells.size() != n)
    throw UsageError("mark_cells: empty estimate");
  std::set<Index> marked;
  switch (strategy.kind) {
  case MarkingStrategy::Kind::error_balancing: {
    const double total = std::accumulate(estimate.eta_cells.begin(), estimate.eta_cells.end(), 0.0);
    const double threshold = strategy.parameter * total / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k)
      if (estimate.eta_cells[k] > threshold)
        marked.insert(estimate.cells[k]);
    break;
  }
  case MarkingStrategy::Kind::fixed_fraction:
    marked = top_fraction(estimate.cells, estimate.eta_cells, strategy.parameter);
    break;
  case MarkingStrategy::Kind::uniform:
    marked.insert(estimate.cells.begin(), estimate.cells.end());
    break;
  case MarkingStrategy::Kind::adhoc_gradient_jump: {
    if (!u_h)
      throw UsageError("mark_cells: the gradient-jump strategy needs the primal solution");
    if (u_h->space().mesh().active_cells() != estimate.cells)
      throw UsageError("mark_cells: solution and estimate live on different meshes");
    marked = top_fraction(estimate.cells, gradient_jump_indicators(*u_h), strategy.parameter);
    break;
  }
  }
  return marked;
}

double effectivity_index(double j_ref, double j_h, double eta) {
  if (!(eta > 0.0))
    throw DomainError("effectivity_index: eta must be positive");
  return std::abs(j_ref - j_h) / eta;
}

} // namespace dwr
