#pragma once

#include "dwr/mesh.hpp"
#include "dwr/sparse.hpp"

#include <functional>
#include <memory>
#include <set>
#include <span>
#include <vector>

namespace dwr {

using ScalarField = std::function<double(Point)>;

/// Value and physical derivatives of one shape function at one point.
struct ShapeValue {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double dxx = 0.0;
  double dyy = 0.0;
};

/// Master dofs and weights of one constrained (hanging) dof.
using ConstraintLine = std::vector<std::pair<Index, double>>;

/// Continuous tensor-product Lagrange space (Q1 or Q2) on the active cells
/// of a mesh. Dofs on hanging nodes are constrained to the trace of the
/// coarse neighbor: Q1 hanging vertices take the average of the edge
/// endpoints, Q2 quarter-point dofs the quadratic interpolant of the three
/// coarse edge dofs. Chains are flattened, so masters are never constrained.
class FeSpace {
public:
  FeSpace(std::shared_ptr<const Mesh> mesh, unsigned degree);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  unsigned degree() const { return degree_; }
  std::size_t n_dofs() const { return support_points_.size(); }
  std::size_t dofs_per_cell() const { return degree_ == 1 ? 4 : 9; }

  /// Global dofs of an active cell, in local node order (vertices, then for
  /// Q2 the side midpoints of sides 0..3 and the center).
  std::span<const Index> cell_dofs(Index cell) const;

  bool is_constrained(Index dof) const { return !constraints_[dof].empty(); }
  const ConstraintLine& constraint(Index dof) const { return constraints_[dof]; }
  std::size_t n_constraints() const;

  Point support_point(Index dof) const { return support_points_[dof]; }

  /// Dofs on sides whose boundary tag is in `tags` (any boundary side when
  /// `tags` is empty).
  std::vector<Index> boundary_dofs(const std::set<int>& tags = {}) const;

  /// Local node indices lying on side s.
  std::vector<std::size_t> side_nodes(int s) const;

  /// Reference coordinates (in [0,1]^2) of local node k.
  Point node_reference(std::size_t k) const;

  /// All local shape functions of an active cell at physical point x.
  void shape(Index cell, Point x, std::span<ShapeValue> out) const;

  /// Sets every constrained entry to its constraint combination.
  void distribute(std::span<double> coefficients) const;

  /// Expands local dof `global` into unconstrained (dof, weight) pairs.
  ConstraintLine resolve(Index global) const;

private:
  std::shared_ptr<const Mesh> mesh_;
  unsigned degree_;
  std::vector<Index> cell_dofs_;             // indexed by active position
  std::vector<Point> support_points_;
  std::vector<ConstraintLine> constraints_;
};

/// Coefficient vector bound to an FeSpace.
class FeFunction {
public:
  FeFunction() = default;
  explicit FeFunction(std::shared_ptr<const FeSpace> space);
  FeFunction(std::shared_ptr<const FeSpace> space, Vector coefficients);

  const FeSpace& space() const { return *space_; }
  const std::shared_ptr<const FeSpace>& space_ptr() const { return space_; }
  const Vector& coefficients() const { return coefficients_; }
  Vector& coefficients() { return coefficients_; }

  double value(Index cell, Point x) const;
  Point gradient(Index cell, Point x) const;
  double laplacian(Index cell, Point x) const;

  /// Point evaluation anywhere in the closure of the domain.
  double evaluate(Point x) const;

  void distribute_constraints();
  double max_constraint_violation() const;

  FeFunction& operator-=(const FeFunction& other);

private:
  std::shared_ptr<const FeSpace> space_;
  Vector coefficients_;
};

/// Coefficients set to f at the dof support points, constraints re-enforced.
FeFunction nodal_interpolate(std::shared_ptr<const FeSpace> space, const ScalarField& f);

/// Evaluates the space's local expansion on a cell for given local values.
double evaluate_local(const FeSpace& space, Index cell, std::span<const double> local, Point x);

} // namespace dwr
