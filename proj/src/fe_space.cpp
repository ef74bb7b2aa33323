#include "dwr/fe_space.hpp"

#include "dwr/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

namespace dwr {

namespace {

constexpr std::array<std::array<int, 2>, 4> q1_nodes{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
constexpr std::array<std::array<int, 2>, 9> q2_nodes{
    {{0, 0}, {2, 0}, {2, 2}, {0, 2}, {1, 0}, {2, 1}, {1, 2}, {0, 1}, {1, 1}}};

struct Lagrange1D {
  double v, d, dd;
};

Lagrange1D lagrange(unsigned degree, int i, double t) {
  if (degree == 1)
    return i == 0 ? Lagrange1D{1.0 - t, -1.0, 0.0} : Lagrange1D{t, 1.0, 0.0};
  switch (i) {
  case 0:
    return {2.0 * t * t - 3.0 * t + 1.0, 4.0 * t - 3.0, 4.0};
  case 1:
    return {-4.0 * t * t + 4.0 * t, -8.0 * t + 4.0, -8.0};
  default:
    return {2.0 * t * t - t, 4.0 * t - 1.0, 4.0};
  }
}

std::array<int, 2> tensor_index(unsigned degree, std::size_t k) {
  return degree == 1 ? q1_nodes[k] : q2_nodes[k];
}

} // namespace

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, unsigned degree)
    : mesh_(std::move(mesh)), degree_(degree) {
  if (degree != 1 && degree != 2)
    throw UsageError("FeSpace supports degree 1 and 2 only");
  const Mesh& m = *mesh_;
  const std::size_t per_cell = dofs_per_cell();
  cell_dofs_.resize(m.n_active_cells() * per_cell);

  using Key = std::tuple<int, Index, Index>;
  std::map<Key, Index> numbering;
  auto dof_for = [&](const Key& k, Point where) {
    auto [it, inserted] = numbering.emplace(k, support_points_.size());
    if (inserted)
      support_points_.push_back(where);
    return it->second;
  };
  auto side_key = [&](Index a, Index b) -> Key {
    if (auto mid = m.midpoint(a, b))
      return {0, *mid, 0};
    return {1, std::min(a, b), std::max(a, b)};
  };

  for (std::size_t pos = 0; pos < m.n_active_cells(); ++pos) {
    const Index c = m.active_cells()[pos];
    const auto& v = m.cell(c).vertex_ids;
    Index* out = cell_dofs_.data() + pos * per_cell;
    for (std::size_t k = 0; k < 4; ++k)
      out[k] = dof_for({0, v[k], 0}, m.vertex(v[k]));
    if (degree_ == 2) {
      for (int s = 0; s < 4; ++s) {
        auto [a, b] = m.side_vertices(c, s);
        out[4 + s] = dof_for(side_key(a, b), 0.5 * (m.vertex(a) + m.vertex(b)));
      }
      out[8] = dof_for({2, c, 0}, 0.5 * (m.lower_corner(c) + m.upper_corner(c)));
    }
  }

  constraints_.assign(n_dofs(), {});
  for (Index c : m.active_cells())
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = m.side_vertices(c, s);
      auto mid = m.midpoint(a, b);
      if (!mid)
        continue;
      const Index da = numbering.at({0, a, 0});
      const Index db = numbering.at({0, b, 0});
      const Index dm = numbering.at({0, *mid, 0});
      if (degree_ == 1) {
        constraints_[dm] = {{da, 0.5}, {db, 0.5}};
      } else {
        const Index qa = numbering.at(side_key(a, *mid));
        const Index qb = numbering.at(side_key(*mid, b));
        constraints_[qa] = {{da, 0.375}, {dm, 0.75}, {db, -0.125}};
        constraints_[qb] = {{da, -0.125}, {dm, 0.75}, {db, 0.375}};
      }
    }

  // Flatten chains so that no master is itself constrained.
  std::vector<ConstraintLine> flat(n_dofs());
  for (Index i = 0; i < n_dofs(); ++i)
    if (!constraints_[i].empty())
      flat[i] = resolve(i);
  constraints_ = std::move(flat);
}

ConstraintLine FeSpace::resolve(Index global) const {
  if (constraints_[global].empty())
    return {{global, 1.0}};
  std::map<Index, double> acc;
  for (auto [master, w] : constraints_[global])
    for (auto [d, w2] : resolve(master))
      acc[d] += w * w2;
  return {acc.begin(), acc.end()};
}

std::span<const Index> FeSpace::cell_dofs(Index cell) const {
  const std::size_t pos = mesh_->active_position(cell);
  return {cell_dofs_.data() + pos * dofs_per_cell(), dofs_per_cell()};
}

std::size_t FeSpace::n_constraints() const {
  return static_cast<std::size_t>(
      std::count_if(constraints_.begin(), constraints_.end(), [](const auto& c) { return !c.empty(); }));
}

std::vector<std::size_t> FeSpace::side_nodes(int s) const {
  const auto a = static_cast<std::size_t>(s);
  const auto b = static_cast<std::size_t>((s + 1) % 4);
  if (degree_ == 1)
    return {a, b};
  return {a, 4 + a, b};
}

Point FeSpace::node_reference(std::size_t k) const {
  const auto ij = tensor_index(degree_, k);
  const double scale = degree_ == 1 ? 1.0 : 0.5;
  return {scale * ij[0], scale * ij[1]};
}

std::vector<Index> FeSpace::boundary_dofs(const std::set<int>& tags) const {
  std::set<Index> out;
  const Mesh& m = *mesh_;
  for (Index c : m.active_cells()) {
    const auto dofs = cell_dofs(c);
    for (int s = 0; s < 4; ++s) {
      const int tag = m.cell(c).boundary_tags[static_cast<std::size_t>(s)];
      if (tag == interior_tag || (!tags.empty() && !tags.count(tag)))
        continue;
      for (std::size_t k : side_nodes(s))
        out.insert(dofs[k]);
    }
  }
  return {out.begin(), out.end()};
}

void FeSpace::shape(Index cell, Point x, std::span<ShapeValue> out) const {
  const Point lo = mesh_->lower_corner(cell), hi = mesh_->upper_corner(cell);
  const double hx = hi.x - lo.x, hy = hi.y - lo.y;
  const double t = (x.x - lo.x) / hx, s = (x.y - lo.y) / hy;
  for (std::size_t k = 0; k < dofs_per_cell(); ++k) {
    const auto ij = tensor_index(degree_, k);
    const Lagrange1D lx = lagrange(degree_, ij[0], t);
    const Lagrange1D ly = lagrange(degree_, ij[1], s);
    out[k] = {lx.v * ly.v, lx.d / hx * ly.v, lx.v * ly.d / hy, lx.dd / (hx * hx) * ly.v,
              lx.v * ly.dd / (hy * hy)};
  }
}

void FeSpace::distribute(std::span<double> coefficients) const {
  for (Index i = 0; i < n_dofs(); ++i) {
    if (constraints_[i].empty())
      continue;
    double v = 0.0;
    for (auto [d, w] : constraints_[i])
      v += w * coefficients[d];
    coefficients[i] = v;
  }
}

double evaluate_local(const FeSpace& space, Index cell, std::span<const double> local, Point x) {
  std::array<ShapeValue, 9> sv;
  space.shape(cell, x, std::span(sv.data(), space.dofs_per_cell()));
  double v = 0.0;
  for (std::size_t k = 0; k < space.dofs_per_cell(); ++k)
    v += local[k] * sv[k].value;
  return v;
}

FeFunction::FeFunction(std::shared_ptr<const FeSpace> space)
    : space_(std::move(space)), coefficients_(space_->n_dofs(), 0.0) {}

FeFunction::FeFunction(std::shared_ptr<const FeSpace> space, Vector coefficients)
    : space_(std::move(space)), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != space_->n_dofs())
    throw UsageError("FeFunction: coefficient vector has wrong length");
}

double FeFunction::value(Index cell, Point x) const {
  std::array<ShapeValue, 9> sv;
  space_->shape(cell, x, std::span(sv.data(), space_->dofs_per_cell()));
  const auto dofs = space_->cell_dofs(cell);
  double v = 0.0;
  for (std::size_t k = 0; k < dofs.size(); ++k)
    v += coefficients_[dofs[k]] * sv[k].value;
  return v;
}

Point FeFunction::gradient(Index cell, Point x) const {
  std::array<ShapeValue, 9> sv;
  space_->shape(cell, x, std::span(sv.data(), space_->dofs_per_cell()));
  const auto dofs = space_->cell_dofs(cell);
  Point g;
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    g.x += coefficients_[dofs[k]] * sv[k].dx;
    g.y += coefficients_[dofs[k]] * sv[k].dy;
  }
  return g;
}

double FeFunction::laplacian(Index cell, Point x) const {
  std::array<ShapeValue, 9> sv;
  space_->shape(cell, x, std::span(sv.data(), space_->dofs_per_cell()));
  const auto dofs = space_->cell_dofs(cell);
  double l = 0.0;
  for (std::size_t k = 0; k < dofs.size(); ++k)
    l += coefficients_[dofs[k]] * (sv[k].dxx + sv[k].dyy);
  return l;
}

double FeFunction::evaluate(Point x) const {
  const auto cell = space_->mesh().locate(x);
  if (!cell)
    throw DomainError("evaluate: point outside the domain");
  return value(*cell, x);
}

void FeFunction::distribute_constraints() { space_->distribute(coefficients_); }

double FeFunction::max_constraint_violation() const {
  double worst = 0.0;
  for (Index i = 0; i < space_->n_dofs(); ++i) {
    if (!space_->is_constrained(i))
      continue;
    double v = 0.0;
    for (auto [d, w] : space_->constraint(i))
      v += w * coefficients_[d];
    worst = std::max(worst, std::abs(v - coefficients_[i]));
  }
  return worst;
}

FeFunction& FeFunction::operator-=(const FeFunction& other) {
  if (other.space_ != space_)
    throw UsageError("FeFunction subtraction needs the same space");
  for (std::size_t i = 0; i < coefficients_.size(); ++i)
    coefficients_[i] -= other.coefficients_[i];
  return *this;
}

FeFunction nodal_interpolate(std::shared_ptr<const FeSpace> space, const ScalarField& f) {
  FeFunction fh(space);
  for (Index i = 0; i < space->n_dofs(); ++i)
    fh.coefficients()[i] = f(space->support_point(i));
  fh.distribute_constraints();
  return fh;
}

} // namespace dwr
