#pragma once

#include "dwr/fe_space.hpp"
#include "dwr/forms.hpp"
#include "dwr/quadrature.hpp"

#include <string>
#include <vector>

namespace dwr {

/// Linear output functional J(u) = (j, u)_Omega + (j_b, u)_boundary,
/// represented through weighted quadrature on each active cell so that the
/// same points serve assembly, evaluation and residual weighting.
class GoalFunctional {
public:
  enum class Kind { point_value, subdomain_mean, boundary_flux, rhs_functional };

  /// Mean over the disc of radius `radius` around x0, normalized by
  /// `disc_area` (the area of the disc inside the domain).
  static GoalFunctional point_value(Point x0, double radius, double disc_area);
  /// Mean over the rectangle [lo, hi].
  static GoalFunctional subdomain_mean(Point lo, Point hi);
  /// Weighted boundary integral over sides tagged `tag`; with weight = beta.n
  /// this is the advective flux through that boundary part.
  static GoalFunctional boundary_flux(int tag, double weight = 1.0);
  /// J(u) = (f, u) + (g_N, u)_boundary.
  static GoalFunctional rhs_functional(ScalarField f, BoundaryField neumann);

  Kind kind() const { return kind_; }
  Point center() const { return center_; }
  double radius() const { return radius_; }
  std::string describe() const;

  /// Volume quadrature on an active cell, density folded into the weights.
  std::vector<QuadraturePoint> cell_quadrature(const Mesh& mesh, Index cell) const;
  /// Boundary quadrature on side s of an active cell (empty for interior sides).
  std::vector<QuadraturePoint> side_quadrature(const Mesh& mesh, Index cell, int s) const;

  /// J applied to a function given cell-wise.
  double apply(const Mesh& mesh, const std::function<double(Index, Point)>& u) const;
  double apply(const FeFunction& u) const;

private:
  Kind kind_ = Kind::rhs_functional;
  Point center_;
  double radius_ = 0.0;
  double disc_area_ = 0.0;
  Point lo_, hi_;
  int tag_ = 0;
  double weight_ = 1.0;
  ScalarField f_;
  BoundaryField neumann_;
};

/// Quadrature for a polynomial integrand over (disc of radius r around c)
/// intersected with the rectangle [lo, hi]; exact up to rounding for smooth
/// integrands thanks to the x = c.x + r sin(theta) substitution.
std::vector<QuadraturePoint> disc_rectangle_quadrature(Point c, double r, Point lo, Point hi);

/// Area of the disc intersected with the mesh's active cells.
double disc_area_in_domain(const Mesh& mesh, Point c, double r);

/// Regularized point value: disc mean with radius equal to the diameter of
/// the (smallest) active cell containing x0.
GoalFunctional regularize_point_value(Point x0, const Mesh& mesh);

} // namespace dwr
