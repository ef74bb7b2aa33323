#pragma once

#include "dwr/fe_space.hpp"
#include "dwr/forms.hpp"
#include "dwr/goal.hpp"
#include "dwr/sparse.hpp"

#include <map>
#include <optional>

namespace dwr {

/// Sparsity pattern of the condensed system on a space (constrained dofs
/// keep only their diagonal).
SparsityPattern make_pattern(const FeSpace& space);

/// Tensor Gauss order used for a form on a space: 2x2 for constant
/// coefficient Q1 forms, 3x3 otherwise.
unsigned quadrature_order(const FeSpace& space, const FormDescriptor& form);

/// Assembles the (linearized) form. Entry (i, j) is a'(u)(phi_j, phi_i);
/// with `adjoint` it is a'(u)(phi_i, phi_j). Hanging-node constraints are
/// condensed into the masters; constrained rows hold a unit diagonal.
SparseMatrix assemble_operator(const FeSpace& space, const FormDescriptor& form,
                               const FeFunction* linearization_point = nullptr,
                               bool adjoint = false);

/// Data vector (f, phi_i) + (g_N, phi_i) over non-Dirichlet boundary sides.
Vector assemble_rhs(const FeSpace& space, const VariationalProblem& problem);

/// Residual vector A(u)(phi_i) - (f, phi_i) - (g_N, phi_i), condensed;
/// constrained rows are zero.
Vector assemble_residual(const FeSpace& space, const VariationalProblem& problem,
                         const FeFunction& u);

/// Vector J'(u)(phi_i) for a linear goal functional, condensed.
Vector assemble_functional(const FeSpace& space, const GoalFunctional& goal,
                           const FeFunction* state = nullptr);

/// Symmetric elimination of prescribed dof values: prescribed rows become
/// identity rows with the value on the right-hand side, and prescribed
/// columns are moved to the right-hand side of the other rows.
void apply_dirichlet(SparseMatrix& A, Vector& b, const std::map<Index, double>& values);

/// Dirichlet values at the support points of the dofs on the given tags.
std::map<Index, double> dirichlet_values(const FeSpace& space, const std::set<int>& tags,
                                         const ScalarField& g);

void apply_dirichlet(SparseMatrix& A, Vector& b, const FeSpace& space, const std::set<int>& tags,
                     const ScalarField& g);

/// Adds local contributions to the global system through the constraints.
void distribute_local(const FeSpace& space, std::span<const Index> dofs,
                      std::span<const double> local_matrix, std::span<const double> local_vector,
                      SparseMatrix* A, Vector* b);

} // namespace dwr
