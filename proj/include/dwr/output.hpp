#pragma once

#include "dwr/adapt.hpp"
#include "dwr/estimator.hpp"

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace dwr {

using NamedField = std::pair<std::string, const FeFunction*>;

/// Legacy ASCII VTK unstructured grid of the active cells (quads, cell
/// type 9). Every field becomes a POINT_DATA scalar sampled at the mesh
/// vertices; `estimate` adds the CELL_DATA scalar eta_k. Numbers are
/// written with 17 significant digits so the output round-trips exactly.
/// UsageError when a field lives on another mesh.
void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<NamedField>& fields,
               const ErrorEstimate* estimate = nullptr);

void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<NamedField>& fields,
               const ErrorEstimate* estimate = nullptr);

/// Convergence table as csv with the header
/// level,n_dofs,n_cells,j_h,eta,signed_estimate,i_eff,wall_time_s.
/// Reals use %.10e; i_eff is blank when no reference exists. Without
/// `wall_time` the time column is written as 0 so repeated runs compare
/// byte for byte.
void write_table_csv(std::ostream& out, const ConvergenceTable& table, bool wall_time = true);

} // namespace dwr
