#include "dwr/output.hpp"

#include "dwr/errors.hpp"

#include <cstdio>
#include <fstream>

namespace dwr {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

} // namespace

void write_table_csv(std::ostream& out, const ConvergenceTable& table, bool wall_time) {
  out << "level,n_dofs,n_cells,j_h,eta,signed_estimate,i_eff,wall_time_s\n";
  for (const auto& r : table.rows)
    out << r.level << ',' << r.n_dofs << ',' << r.n_cells << ',' << sci(r.j_h) << ',' << sci(r.eta) << ','
        << sci(r.signed_estimate) << ',' << (r.i_eff ? sci(*r.i_eff) : std::string()) << ','
        << sci(wall_time ? r.wall_time_s : 0.0) << '\n';
}

void write_vtk(std::ostream& out, const Mesh& mesh, const std::vector<NamedField>& fields,
               const ErrorEstimate* estimate) {
  for (const auto& [name, f] : fields)
    if (!f || &f->space().mesh() != &mesh)
      throw UsageError("write_vtk: field '" + name + "' does not live on the given mesh");
  const auto& active = mesh.active_cells();
  if (estimate && estimate->eta_cells.size() != active.size())
    throw UsageError("write_vtk: estimate does not match the active cells");

  const std::size_t nv = mesh.vertices().size(), nc = active.size();
  out << "# vtk DataFile Version 3.0\n"
      << "dwr adapted mesh\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << nv << " double\n";
  for (std::size_t i = 0; i < nv; ++i) {
    const Point p = mesh.vertex(i);
    out << num(p.x) << ' ' << num(p.y) << " 0\n";
  }
  out << "CELLS " << nc << ' ' << 5 * nc << '\n';
  for (Index c : active) {
    const auto& v = mesh.cell(c).vertex_ids;
    out << "4 " << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << v[3] << '\n';
  }
  out << "CELL_TYPES " << nc << '\n';
  for (std::size_t k = 0; k < nc; ++k)
    out << "9\n";

  if (!fields.empty()) {
    out << "POINT_DATA " << nv << '\n';
    std::vector<double> values(nv);
    for (const auto& [name, f] : fields) {
      for (Index c : active)
        for (Index v : mesh.cell(c).vertex_ids)
          values[v] = f->value(c, mesh.vertex(v));
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double x : values)
        out << num(x) << '\n';
    }
  }
  if (estimate) {
    out << "CELL_DATA " << nc << "\nSCALARS eta_k double 1\nLOOKUP_TABLE default\n";
    for (double e : estimate->eta_cells)
      out << num(e) << '\n';
  }
}

void write_vtk(const std::string& path, const Mesh& mesh, const std::vector<NamedField>& fields,
               const ErrorEstimate* estimate) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw UsageError("write_vtk: cannot open " + path);
  write_vtk(out, mesh, fields, estimate);
}

} // namespace dwr
