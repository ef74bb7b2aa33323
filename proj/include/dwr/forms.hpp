#pragma once

#include "dwr/fe_space.hpp"

#include <functional>
#include <set>
#include <vector>

namespace dwr {

using VectorField = std::function<Point(Point)>;
/// Boundary data g(tag, x); only evaluated on boundary sides.
using BoundaryField = std::function<double(int, Point)>;

/// Local matrix callback: fills `local` (row-major, entry (i, j) is the form
/// with trial function j and test function i).
using CellKernel = std::function<void(const FeSpace&, Index cell, std::vector<double>& local)>;

enum class FormKind { mass, stiffness, advection, reaction, semilinear_cubic, custom };

struct FormTerm {
  FormKind kind = FormKind::mass;
  double scale = 1.0;
  ScalarField coefficient;  // reaction
  VectorField velocity;     // advection (assumed divergence free)
  CellKernel kernel;        // custom
};

/// Sum of elementary form terms. The semilinear term contributes
/// scale * u^3 to the operator and 3 * scale * u^2 to its linearization.
struct FormDescriptor {
  std::vector<FormTerm> terms;

  static FormDescriptor mass(double scale = 1.0);
  static FormDescriptor stiffness(double diffusion = 1.0);
  static FormDescriptor advection(VectorField velocity);
  static FormDescriptor reaction(ScalarField coefficient);
  static FormDescriptor semilinear_cubic(double scale = 1.0);
  static FormDescriptor custom(CellKernel kernel);

  FormDescriptor operator+(const FormDescriptor& other) const;
  FormDescriptor scaled(double s) const;

  bool nonlinear() const;
  bool symmetric() const;
  bool has_custom() const;
  /// True when every term has constant coefficients and is linear.
  bool constant_linear() const;

  /// Integrand of A(u)(w) at a point.
  double operator_integrand(Point x, double u, Point gu, double w, Point gw) const;
  /// Integrand of the linearization A'(u)(phi, psi).
  double linearized_integrand(Point x, double u, double phi, Point gphi, double psi,
                              Point gpsi) const;
  /// Strong form -div(nu grad u) + beta.grad u + c u + k u^3.
  double strong_operator(Point x, double u, Point gu, double lap_u) const;
  /// Strong form of the adjoint of A'(u) applied to z:
  /// -nu lap z - beta.grad z + c z + 3 k u^2 z.
  double strong_adjoint(Point x, double u, double z, Point gz, double lap_z) const;
  /// Conormal flux nu dn u of the operator.
  double conormal(Point gu, Point normal) const;
  /// Conormal flux of the adjoint: nu dn z + (beta.n) z.
  double adjoint_conormal(Point x, double z, Point gz, Point normal) const;
  double diffusion() const;
};

/// Operator, data and boundary conditions of one scalar model problem:
/// find u with A(u)(psi) = (f, psi) + (g_N, psi)_{natural boundary}.
struct VariationalProblem {
  FormDescriptor form;
  ScalarField rhs = [](Point) { return 0.0; };
  BoundaryField neumann = [](int, Point) { return 0.0; };
  std::set<int> dirichlet_tags;
  ScalarField dirichlet_values = [](Point) { return 0.0; };

  bool is_dirichlet(int tag) const { return dirichlet_tags.count(tag) > 0; }
};

/// Outward unit normal of side s.
Point side_normal(int s);

} // namespace dwr
