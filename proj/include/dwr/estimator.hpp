#pragma once

#include "dwr/fe_space.hpp"
#include "dwr/forms.hpp"
#include "dwr/goal.hpp"

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace dwr {

/// A differentiable functional on R^n with its first and (optionally)
/// third derivative.
struct AbstractFunctional {
  std::function<double(std::span<const double>)> value;
  std::function<double(std::span<const double>, std::span<const double>)> derivative;
  std::function<double(std::span<const double>, std::span<const double>, std::span<const double>,
                       std::span<const double>)>
      third_derivative;
};

struct IdentityResult {
  double estimate = 0.0;
  std::optional<double> remainder;
};

/// Evaluates 1/2 L'(x_h)(x - y_h) and, when L''' is available, the cubic
/// remainder 1/2 int_0^1 L'''(x_h + s e)(e, e, e) s (s - 1) ds with
/// e = x - x_h (5-point Gauss in s). When `subspace` is given, the
/// stationarity of x_h on it is checked first (UsageError otherwise).
IdentityResult abstract_error_identity(const AbstractFunctional& L, std::span<const double> x,
                                       std::span<const double> x_h, std::span<const double> y_h,
                                       const std::vector<Vector>* subspace = nullptr,
                                       double stationarity_tol = 1e-10);

/// Both sides of the trapezoidal-rule error formula
///   int_0^1 f ds - (f(0) + f(1)) / 2 = 1/2 int_0^1 f''(s) s (s - 1) ds,
/// each integral by 20-panel composite Simpson.
std::pair<double, double> trapezoid_kernel_check(const std::function<double(double)>& f,
                                                 const std::function<double(double)>& f2);

/// rho(u_h)(w) = F(w) - a(u_h)(w) by cell quadrature. The weight must live
/// on the mesh of u_h (UsageError otherwise).
double weighted_primal_residual(const VariationalProblem& problem, const FeFunction& u_h,
                                const FeFunction& weight);

/// rho*(z_h)(w) = J'(u_h)(w) - a'(u_h)(w, z_h).
double weighted_dual_residual(const VariationalProblem& problem, const GoalFunctional& goal,
                              const FeFunction& u_h, const FeFunction& z_h,
                              const FeFunction& weight);
/// Same without a goal (J' = 0).
double weighted_dual_residual(const VariationalProblem& problem, const FeFunction& u_h,
                              const FeFunction& z_h, const FeFunction& weight);

/// Cell-wise strong form of rho(u_h)(w): (f - L u_h, w)_K, half the
/// conormal jump on interior sides, and g_N - nu d_n u_h on the boundary.
/// Indexed by active position; the entries sum to weighted_primal_residual.
std::vector<double> localized_primal_residual(const VariationalProblem& problem,
                                              const FeFunction& u_h, const FeFunction& weight);

/// Cell-wise strong form of rho*(z_h)(w) with the adjoint operator and
/// adjoint conormal. `goal` may be null (J' = 0).
std::vector<double> localized_dual_residual(const VariationalProblem& problem,
                                            const GoalFunctional* goal, const FeFunction& u_h,
                                            const FeFunction& z_h, const FeFunction& weight);

struct ErrorEstimate {
  std::vector<Index> cells;          // active cell ids
  std::vector<double> eta_cells;     // |signed cell contribution|
  std::vector<double> signed_cells;
  double eta_global = 0.0;
  double signed_estimate = 0.0;
  std::optional<double> effectivity;
  double primal_part = 0.0;          // 1/2 rho(u_h)(w_z)
  double dual_part = 0.0;            // 1/2 rho*(z_h)(w_u)
  double control_part = 0.0;         // 1/2 rho^q(q_h)(w_q), control problems only
  bool has_dual_part = false;
};

/// Builds an estimate from per-cell primal contributions and, when given,
/// dual contributions. Without dual contributions the cell value is the
/// primal one (factor 1), otherwise the mean of both.
ErrorEstimate assemble_estimate(const Mesh& mesh, const std::vector<double>& primal,
                                const std::vector<double>* dual = nullptr);

/// DWR indicators with weights w_z = R z_h - I_h R z_h (and the analogous
/// w_u when `recovered_u` is given). Throws UsageError when recovered_z is
/// missing.
ErrorEstimate localize_indicators(const VariationalProblem& problem, const GoalFunctional& goal,
                                  const FeFunction& u_h, const FeFunction& z_h,
                                  const FeFunction* recovered_z,
                                  const FeFunction* recovered_u = nullptr);

struct MarkingStrategy {
  enum class Kind { error_balancing, fixed_fraction, uniform, adhoc_gradient_jump };
  Kind kind = Kind::error_balancing;
  double parameter = 1.0;

  static MarkingStrategy error_balancing(double theta = 1.0);
  static MarkingStrategy fixed_fraction(double fraction);
  static MarkingStrategy uniform();
  static MarkingStrategy adhoc_gradient_jump(double fraction = 0.3);
  std::string name() const;
};

/// Parses "dwr"/"error_balancing", "fixed_fraction[:f]", "uniform", "adhoc".
MarkingStrategy parse_strategy(const std::string& text);

/// Sum over the sides of each active cell of |[d_n u_h]| times the side
/// length, indexed by active position.
std::vector<double> gradient_jump_indicators(const FeFunction& u_h);

/// Cells to refine. The ad hoc strategy needs u_h.
std::set<Index> mark_cells(const ErrorEstimate& estimate, const MarkingStrategy& strategy,
                           const FeFunction* u_h = nullptr);

/// |J_ref - J_h| / eta; DomainError for eta <= 0.
double effectivity_index(double j_ref, double j_h, double eta);

} // namespace dwr
