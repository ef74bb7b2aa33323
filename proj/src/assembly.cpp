#include "dwr/assembly.hpp"

#include "dwr/errors.hpp"
#include "dwr/quadrature.hpp"

#include <array>
#include <cmath>

namespace dwr {

SparsityPattern make_pattern(const FeSpace& space) {
  SparsityPattern p(space.n_dofs());
  std::vector<Index> expanded;
  for (Index c : space.mesh().active_cells()) {
    expanded.clear();
    for (Index d : space.cell_dofs(c))
      for (auto [m, w] : space.resolve(d))
        expanded.push_back(m);
    p.add_block(expanded, expanded);
  }
  for (Index i = 0; i < space.n_dofs(); ++i)
    p.add(i, i);
  return p;
}

unsigned quadrature_order(const FeSpace& space, const FormDescriptor& form) {
  return (space.degree() == 1 && form.constant_linear()) ? 2 : 3;
}

void distribute_local(const FeSpace& space, std::span<const Index> dofs,
                      std::span<const double> local_matrix, std::span<const double> local_vector,
                      SparseMatrix* A, Vector* b) {
  const std::size_t n = dofs.size();
  std::array<ConstraintLine, 9> lines;
  for (std::size_t i = 0; i < n; ++i)
    lines[i] = space.resolve(dofs[i]);
  if (A)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double v = local_matrix[i * n + j];
        if (v == 0.0)
          continue;
        for (auto [mi, wi] : lines[i])
          for (auto [mj, wj] : lines[j])
            A->add(mi, mj, wi * wj * v);
      }
  if (b)
    for (std::size_t i = 0; i < n; ++i)
      for (auto [mi, wi] : lines[i])
        (*b)[mi] += wi * local_vector[i];
}

namespace {

void finish_constrained_rows(const FeSpace& space, SparseMatrix* A, Vector* b) {
  for (Index i = 0; i < space.n_dofs(); ++i)
    if (space.is_constrained(i)) {
      if (A)
        A->set(i, i, 1.0);
      if (b)
        (*b)[i] = 0.0;
    }
}

} // namespace

SparseMatrix assemble_operator(const FeSpace& space, const FormDescriptor& form,
                               const FeFunction* linearization_point, bool adjoint) {
  if (form.nonlinear() && !linearization_point)
    throw UsageError("assemble_operator: nonlinear form needs a linearization point");
  if (linearization_point && &linearization_point->space() != &space &&
      linearization_point->space().mesh_ptr() != space.mesh_ptr())
    throw UsageError("assemble_operator: linearization point lives on another mesh");

  SparseMatrix A(make_pattern(space));
  const std::size_t n = space.dofs_per_cell();
  const unsigned order = quadrature_order(space, form);
  std::vector<double> local(n * n), custom(n * n);
  std::array<ShapeValue, 9> sv;
  FormDescriptor pointwise;
  for (const auto& t : form.terms)
    if (t.kind != FormKind::custom)
      pointwise.terms.push_back(t);

  for (Index c : space.mesh().active_cells()) {
    std::fill(local.begin(), local.end(), 0.0);
    if (!pointwise.terms.empty()) {
      for (const auto& q : rectangle_gauss(space.mesh().lower_corner(c), space.mesh().upper_corner(c), order)) {
        space.shape(c, q.point, std::span(sv.data(), n));
        const double u = linearization_point ? linearization_point->value(c, q.point) : 0.0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            local[i * n + j] += q.weight * pointwise.linearized_integrand(
                                               q.point, u, sv[j].value, {sv[j].dx, sv[j].dy},
                                               sv[i].value, {sv[i].dx, sv[i].dy});
      }
    }
    for (const auto& t : form.terms)
      if (t.kind == FormKind::custom) {
        custom.assign(n * n, 0.0);
        t.kernel(space, c, custom);
        for (std::size_t k = 0; k < n * n; ++k)
          local[k] += custom[k];
      }
    if (adjoint)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          std::swap(local[i * n + j], local[j * n + i]);
    distribute_local(space, space.cell_dofs(c), local, {}, &A, nullptr);
  }
  finish_constrained_rows(space, &A, nullptr);
  return A;
}

Vector assemble_rhs(const FeSpace& space, const VariationalProblem& problem) {
  Vector b(space.n_dofs(), 0.0);
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.dofs_per_cell();
  std::vector<double> local(n);
  std::array<ShapeValue, 9> sv;
  for (Index c : mesh.active_cells()) {
    std::fill(local.begin(), local.end(), 0.0);
    for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3)) {
      space.shape(c, q.point, std::span(sv.data(), n));
      const double f = problem.rhs(q.point);
      if (!std::isfinite(f))
        throw DataError("right-hand side is not finite");
      for (std::size_t i = 0; i < n; ++i)
        local[i] += q.weight * f * sv[i].value;
    }
    for (int s = 0; s < 4; ++s) {
      const int tag = mesh.cell(c).boundary_tags[static_cast<std::size_t>(s)];
      if (tag == interior_tag || problem.is_dirichlet(tag))
        continue;
      auto [a, bb] = mesh.side_vertices(c, s);
      for (const auto& q : segment_gauss(mesh.vertex(a), mesh.vertex(bb), 3)) {
        space.shape(c, q.point, std::span(sv.data(), n));
        const double g = problem.neumann(tag, q.point);
        for (std::size_t i = 0; i < n; ++i)
          local[i] += q.weight * g * sv[i].value;
      }
    }
    distribute_local(space, space.cell_dofs(c), {}, local, nullptr, &b);
  }
  finish_constrained_rows(space, nullptr, &b);
  return b;
}

Vector assemble_residual(const FeSpace& space, const VariationalProblem& problem,
                         const FeFunction& u) {
  Vector r(space.n_dofs(), 0.0);
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.dofs_per_cell();
  std::vector<double> local(n), custom(n * n);
  std::array<ShapeValue, 9> sv;
  FormDescriptor pointwise;
  for (const auto& t : problem.form.terms)
    if (t.kind != FormKind::custom)
      pointwise.terms.push_back(t);
  for (Index c : mesh.active_cells()) {
    std::fill(local.begin(), local.end(), 0.0);
    const auto dofs = space.cell_dofs(c);
    for (const auto& q : rectangle_gauss(mesh.lower_corner(c), mesh.upper_corner(c), 3)) {
      space.shape(c, q.point, std::span(sv.data(), n));
      double uv = 0.0;
      Point gu;
      for (std::size_t k = 0; k < n; ++k) {
        const double ck = u.coefficients()[dofs[k]];
        uv += ck * sv[k].value;
        gu.x += ck * sv[k].dx;
        gu.y += ck * sv[k].dy;
      }
      const double f = problem.rhs(q.point);
      for (std::size_t i = 0; i < n; ++i)
        local[i] += q.weight * (pointwise.operator_integrand(q.point, uv, gu, sv[i].value,
                                                             {sv[i].dx, sv[i].dy}) -
                                f * sv[i].value);
    }
    for (const auto& t : problem.form.terms)
      if (t.kind == FormKind::custom) {
        custom.assign(n * n, 0.0);
        t.kernel(space, c, custom);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            local[i] += custom[i * n + j] * u.coefficients()[dofs[j]];
      }
    for (int s = 0; s < 4; ++s) {
      const int tag = mesh.cell(c).boundary_tags[static_cast<std::size_t>(s)];
      if (tag == interior_tag || problem.is_dirichlet(tag))
        continue;
      auto [a, b] = mesh.side_vertices(c, s);
      for (const auto& q : segment_gauss(mesh.vertex(a), mesh.vertex(b), 3)) {
        space.shape(c, q.point, std::span(sv.data(), n));
        const double g = problem.neumann(tag, q.point);
        for (std::size_t i = 0; i < n; ++i)
          local[i] -= q.weight * g * sv[i].value;
      }
    }
    distribute_local(space, dofs, {}, local, nullptr, &r);
  }
  finish_constrained_rows(space, nullptr, &r);
  return r;
}

Vector assemble_functional(const FeSpace& space, const GoalFunctional& goal, const FeFunction*) {
  // All goals are linear in u, so the state does not enter.
  Vector j(space.n_dofs(), 0.0);
  const Mesh& mesh = space.mesh();
  const std::size_t n = space.dofs_per_cell();
  std::vector<double> local(n);
  std::array<ShapeValue, 9> sv;
  for (Index c : mesh.active_cells()) {
    std::fill(local.begin(), local.end(), 0.0);
    bool any = false;
    auto add = [&](const std::vector<QuadraturePoint>& qs) {
      for (const auto& q : qs) {
        any = true;
        space.shape(c, q.point, std::span(sv.data(), n));
        for (std::size_t i = 0; i < n; ++i)
          local[i] += q.weight * sv[i].value;
      }
    };
    add(goal.cell_quadrature(mesh, c));
    for (int s = 0; s < 4; ++s)
      add(goal.side_quadrature(mesh, c, s));
    if (any)
      distribute_local(space, space.cell_dofs(c), {}, local, nullptr, &j);
  }
  finish_constrained_rows(space, nullptr, &j);
  return j;
}

void apply_dirichlet(SparseMatrix& A, Vector& b, const std::map<Index, double>& values) {
  const auto& off = A.row_offsets();
  const auto& cols = A.column_indices();
  auto& vals = A.values();
  std::vector<char> fixed(A.n_rows(), 0);
  for (const auto& [i, g] : values)
    fixed[i] = 1;
  for (std::size_t r = 0; r < A.n_rows(); ++r) {
    if (fixed[r]) {
      for (std::size_t k = off[r]; k < off[r + 1]; ++k)
        vals[k] = cols[k] == r ? 1.0 : 0.0;
      b[r] = values.at(r);
      continue;
    }
    for (std::size_t k = off[r]; k < off[r + 1]; ++k)
      if (fixed[cols[k]]) {
        b[r] -= vals[k] * values.at(cols[k]);
        vals[k] = 0.0;
      }
  }
}

std::map<Index, double> dirichlet_values(const FeSpace& space, const std::set<int>& tags,
                                         const ScalarField& g) {
  std::map<Index, double> values;
  if (tags.empty())
    return values;
  for (Index d : space.boundary_dofs(tags))
    values[d] = g(space.support_point(d));
  return values;
}

void apply_dirichlet(SparseMatrix& A, Vector& b, const FeSpace& space, const std::set<int>& tags,
                     const ScalarField& g) {
  apply_dirichlet(A, b, dirichlet_values(space, tags, g));
}

} // namespace dwr
