#include "dwr/recovery.hpp"

#include "dwr/errors.hpp"

#include <array>

namespace dwr {

namespace {

std::array<double, 3> lagrange3(double t) {
  return {2.0 * (t - 0.5) * (t - 1.0), -4.0 * t * (t - 1.0), 2.0 * t * (t - 0.5)};
}

// Child of a patch (corner order) whose closure holds grid node (i, j).
std::size_t child_for(int i, int j) {
  if (j <= 1)
    return i <= 1 ? 0 : 1;
  return i <= 1 ? 3 : 2;
}

} // namespace

FeFunction patch_recover(const FeFunction& fh) {
  const FeSpace& q1 = fh.space();
  if (q1.degree() != 1)
    throw UsageError("patch_recover expects a Q1 function");
  const Mesh& mesh = q1.mesh();
  auto q2 = std::make_shared<const FeSpace>(q1.mesh_ptr(), 2);

  const std::size_t n = q2->n_dofs();
  Vector patch_sum(n, 0.0), fallback(n, 0.0);
  std::vector<unsigned> patch_count(n, 0);
  std::vector<char> has_fallback(n, 0);

  for (Index c : mesh.active_cells()) {
    const auto dofs = q2->cell_dofs(c);
    const Point lo = mesh.lower_corner(c), hi = mesh.upper_corner(c);
    const auto patch = sibling_patch(mesh, c);
    if (!patch) {
      for (std::size_t k = 0; k < 9; ++k) {
        const Point r = q2->node_reference(k);
        fallback[dofs[k]] = fh.value(c, {lo.x + r.x * (hi.x - lo.x), lo.y + r.y * (hi.y - lo.y)});
        has_fallback[dofs[k]] = 1;
      }
      continue;
    }
    const Index parent = *mesh.cell(c).parent;
    const Point plo = mesh.lower_corner(parent), phi = mesh.upper_corner(parent);
    std::array<std::array<double, 3>, 3> nodal{};  // [j][i]
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i) {
        const Point x{plo.x + 0.5 * i * (phi.x - plo.x), plo.y + 0.5 * j * (phi.y - plo.y)};
        nodal[j][i] = fh.value((*patch)[child_for(i, j)], x);
      }
    for (std::size_t k = 0; k < 9; ++k) {
      const Point r = q2->node_reference(k);
      const Point x{lo.x + r.x * (hi.x - lo.x), lo.y + r.y * (hi.y - lo.y)};
      const auto lx = lagrange3((x.x - plo.x) / (phi.x - plo.x));
      const auto ly = lagrange3((x.y - plo.y) / (phi.y - plo.y));
      double v = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
          v += nodal[j][i] * lx[i] * ly[j];
      patch_sum[dofs[k]] += v;
      ++patch_count[dofs[k]];
    }
  }

  Vector coeff(n, 0.0);
  for (Index d = 0; d < n; ++d)
    coeff[d] = patch_count[d] ? patch_sum[d] / patch_count[d] : fallback[d];
  FeFunction out(q2, std::move(coeff));
  out.distribute_constraints();
  return out;
}

FeFunction interpolate(std::shared_ptr<const FeSpace> target, const FeFunction& f) {
  if (&target->mesh() != &f.space().mesh() && target->mesh_ptr() != f.space().mesh_ptr()) {
    FeFunction out(target);
    for (Index d = 0; d < target->n_dofs(); ++d)
      out.coefficients()[d] = f.evaluate(target->support_point(d));
    out.distribute_constraints();
    return out;
  }
  // Same mesh: read values cell by cell, no point location needed.
  const Mesh& mesh = target->mesh();
  FeFunction out(target);
  std::vector<char> done(target->n_dofs(), 0);
  for (Index c : mesh.active_cells()) {
    const auto dofs = target->cell_dofs(c);
    for (std::size_t k = 0; k < dofs.size(); ++k) {
      if (done[dofs[k]] || target->is_constrained(dofs[k]))
        continue;
      out.coefficients()[dofs[k]] = f.value(c, target->support_point(dofs[k]));
      done[dofs[k]] = 1;
    }
  }
  out.distribute_constraints();
  return out;
}

FeFunction interpolation_remainder(const FeFunction& g, std::shared_ptr<const FeSpace> coarse) {
  const FeFunction ig = interpolate(coarse, g);
  FeFunction w = g;
  w -= interpolate(g.space_ptr(), ig);
  return w;
}

} // namespace dwr
