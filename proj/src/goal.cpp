#include "dwr/goal.hpp"

#include "dwr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dwr {

namespace {

constexpr unsigned theta_points = 20;
constexpr unsigned inner_points = 5;

} // namespace

std::vector<QuadraturePoint> disc_rectangle_quadrature(Point c, double r, Point lo, Point hi) {
  std::vector<QuadraturePoint> q;
  const double sa = std::max(-1.0, (lo.x - c.x) / r);
  const double sb = std::min(1.0, (hi.x - c.x) / r);
  if (sa >= sb)
    return q;
  const double ta = std::asin(sa), tb = std::asin(sb);

  // Breakpoints where the circle crosses the horizontal cell bounds.
  std::vector<double> cuts{ta, tb};
  for (double y : {lo.y, hi.y}) {
    const double cval = std::abs(y - c.y) / r;
    if (cval <= 1.0) {
      const double t = std::acos(cval);
      for (double tt : {t, -t})
        if (tt > ta && tt < tb)
          cuts.push_back(tt);
    }
  }
  std::sort(cuts.begin(), cuts.end());

  const auto& outer = gauss_legendre(theta_points);
  const auto& inner = gauss_legendre(inner_points);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double t0 = cuts[k], t1 = cuts[k + 1];
    if (t1 - t0 <= 0.0)
      continue;
    for (unsigned i = 0; i < theta_points; ++i) {
      const double th = t0 + (t1 - t0) * outer.points[i];
      const double x = c.x + r * std::sin(th);
      const double half = r * std::cos(th);
      const double ylo = std::max(lo.y, c.y - half);
      const double yhi = std::min(hi.y, c.y + half);
      if (yhi <= ylo)
        continue;
      const double wx = (t1 - t0) * outer.weights[i] * half;  // dx = r cos(theta) dtheta
      for (unsigned j = 0; j < inner_points; ++j)
        q.push_back({{x, ylo + (yhi - ylo) * inner.points[j]}, wx * (yhi - ylo) * inner.weights[j]});
    }
  }
  return q;
}

double disc_area_in_domain(const Mesh& mesh, Point c, double r) {
  double a = 0.0;
  for (Index k : mesh.active_cells())
    for (const auto& qp : disc_rectangle_quadrature(c, r, mesh.lower_corner(k), mesh.upper_corner(k)))
      a += qp.weight;
  return a;
}

GoalFunctional GoalFunctional::point_value(Point x0, double radius, double disc_area) {
  if (!(radius > 0.0) || !(disc_area > 0.0))
    throw DomainError("point_value: radius and disc area must be positive");
  GoalFunctional g;
  g.kind_ = Kind::point_value;
  g.center_ = x0;
  g.radius_ = radius;
  g.disc_area_ = disc_area;
  return g;
}

GoalFunctional GoalFunctional::subdomain_mean(Point lo, Point hi) {
  if (!(lo.x < hi.x) || !(lo.y < hi.y))
    throw DomainError("subdomain_mean: empty region");
  GoalFunctional g;
  g.kind_ = Kind::subdomain_mean;
  g.lo_ = lo;
  g.hi_ = hi;
  return g;
}

GoalFunctional GoalFunctional::boundary_flux(int tag, double weight) {
  GoalFunctional g;
  g.kind_ = Kind::boundary_flux;
  g.tag_ = tag;
  g.weight_ = weight;
  return g;
}

GoalFunctional GoalFunctional::rhs_functional(ScalarField f, BoundaryField neumann) {
  GoalFunctional g;
  g.kind_ = Kind::rhs_functional;
  g.f_ = std::move(f);
  g.neumann_ = std::move(neumann);
  return g;
}

std::string GoalFunctional::describe() const {
  std::ostringstream os;
  switch (kind_) {
  case Kind::point_value:
    os << "mean over disc at (" << center_.x << ", " << center_.y << "), r = " << radius_;
    break;
  case Kind::subdomain_mean:
    os << "mean over [" << lo_.x << ", " << hi_.x << "] x [" << lo_.y << ", " << hi_.y << "]";
    break;
  case Kind::boundary_flux:
    os << "flux through boundary tag " << tag_;
    break;
  case Kind::rhs_functional:
    os << "right-hand side functional";
    break;
  }
  return os.str();
}

std::vector<QuadraturePoint> GoalFunctional::cell_quadrature(const Mesh& mesh, Index cell) const {
  const Point lo = mesh.lower_corner(cell), hi = mesh.upper_corner(cell);
  std::vector<QuadraturePoint> q;
  switch (kind_) {
  case Kind::point_value:
    q = disc_rectangle_quadrature(center_, radius_, lo, hi);
    for (auto& p : q)
      p.weight /= disc_area_;
    break;
  case Kind::subdomain_mean: {
    const Point a{std::max(lo.x, lo_.x), std::max(lo.y, lo_.y)};
    const Point b{std::min(hi.x, hi_.x), std::min(hi.y, hi_.y)};
    if (a.x < b.x && a.y < b.y) {
      q = rectangle_gauss(a, b, 4);
      const double area = (hi_.x - lo_.x) * (hi_.y - lo_.y);
      for (auto& p : q)
        p.weight /= area;
    }
    break;
  }
  case Kind::boundary_flux:
    break;
  case Kind::rhs_functional:
    q = rectangle_gauss(lo, hi, 3);
    for (auto& p : q)
      p.weight *= f_(p.point);
    break;
  }
  return q;
}

std::vector<QuadraturePoint> GoalFunctional::side_quadrature(const Mesh& mesh, Index cell, int s) const {
  const int tag = mesh.cell(cell).boundary_tags[static_cast<std::size_t>(s)];
  if (tag == interior_tag)
    return {};
  if (kind_ != Kind::boundary_flux && kind_ != Kind::rhs_functional)
    return {};
  if (kind_ == Kind::boundary_flux && tag != tag_)
    return {};
  auto [a, b] = mesh.side_vertices(cell, s);
  auto q = segment_gauss(mesh.vertex(a), mesh.vertex(b), 3);
  for (auto& p : q)
    p.weight *= kind_ == Kind::boundary_flux ? weight_ : neumann_(tag, p.point);
  return q;
}

double GoalFunctional::apply(const Mesh& mesh, const std::function<double(Index, Point)>& u) const {
  double j = 0.0;
  for (Index k : mesh.active_cells()) {
    for (const auto& qp : cell_quadrature(mesh, k))
      j += qp.weight * u(k, qp.point);
    for (int s = 0; s < 4; ++s)
      for (const auto& qp : side_quadrature(mesh, k, s))
        j += qp.weight * u(k, qp.point);
  }
  return j;
}

double GoalFunctional::apply(const FeFunction& u) const {
  return apply(u.space().mesh(), [&u](Index k, Point x) { return u.value(k, x); });
}

GoalFunctional regularize_point_value(Point x0, const Mesh& mesh) {
  const auto cells = mesh.cells_containing(x0);
  if (cells.empty())
    throw DomainError("regularize_point_value: point outside the domain");
  double r = mesh.cell_diameter(cells.front());
  for (Index k : cells)
    r = std::min(r, mesh.cell_diameter(k));
  return GoalFunctional::point_value(x0, r, disc_area_in_domain(mesh, x0, r));
}

} // namespace dwr
