#include "dwr/mesh.hpp"

#include "dwr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dwr {

namespace {

// Which sides of the parent a child touches (child index = corner index).
constexpr std::array<std::array<bool, 4>, 4> child_touches_side{{
    {true, false, false, true},   // lower-left: bottom, left
    {true, true, false, false},   // lower-right: bottom, right
    {false, true, true, false},   // upper-right: right, top
    {false, false, true, true},   // upper-left: top, left
}};

bool inside_box(Point p, Point lo, Point hi, double tol) {
  return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol;
}

} // namespace

Index Mesh::add_vertex(Point p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y))
    throw DomainError("non-finite vertex coordinates");
  const Index id = vertices_.size();
  vertices_.push_back({id, p});
  return id;
}

Mesh Mesh::rect_grid(std::size_t nx, std::size_t ny, Point lower, Point upper) {
  if (nx < 1 || ny < 1)
    throw DomainError("rect_grid needs at least one cell per direction");
  if (!(lower.x < upper.x) || !(lower.y < upper.y))
    throw DomainError("rect_grid bounds are degenerate");

  Mesh m;
  const double hx = (upper.x - lower.x) / static_cast<double>(nx);
  const double hy = (upper.y - lower.y) / static_cast<double>(ny);
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i) {
      const double x = i == nx ? upper.x : lower.x + static_cast<double>(i) * hx;
      const double y = j == ny ? upper.y : lower.y + static_cast<double>(j) * hy;
      m.add_vertex({x, y});
    }
  auto vid = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      Cell c;
      c.id = m.cells_.size();
      c.vertex_ids = {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)};
      c.boundary_tags = {j == 0 ? 1 : interior_tag, i + 1 == nx ? 2 : interior_tag,
                         j + 1 == ny ? 3 : interior_tag, i == 0 ? 4 : interior_tag};
      m.cells_.push_back(c);
    }
  m.domain_area_ = (upper.x - lower.x) * (upper.y - lower.y);
  m.tolerance_ = 1e-12 * std::max(upper.x - lower.x, upper.y - lower.y);
  m.finalize();
  return m;
}

Mesh Mesh::lshape() {
  Mesh m;
  // 0:(-1,-1) 1:(0,-1) 2:(-1,0) 3:(0,0) 4:(1,0) 5:(-1,1) 6:(0,1) 7:(1,1)
  for (Point p : {Point{-1, -1}, Point{0, -1}, Point{-1, 0}, Point{0, 0}, Point{1, 0},
                  Point{-1, 1}, Point{0, 1}, Point{1, 1}})
    m.add_vertex(p);
  auto add = [&m](std::array<Index, 4> v, std::array<int, 4> tags) {
    Cell c;
    c.id = m.cells_.size();
    c.vertex_ids = v;
    c.boundary_tags = tags;
    m.cells_.push_back(c);
  };
  add({0, 1, 3, 2}, {1, 2, 0, 4});
  add({2, 3, 6, 5}, {0, 0, 3, 4});
  add({3, 4, 7, 6}, {1, 2, 3, 0});
  m.domain_area_ = 3.0;
  m.tolerance_ = 2e-12;
  m.finalize();
  return m;
}

std::size_t Mesh::active_position(Index cell) const {
  if (cell >= active_pos_.size() || active_pos_[cell] == static_cast<std::size_t>(-1))
    throw UsageError("cell " + std::to_string(cell) + " is not active");
  return active_pos_[cell];
}

double Mesh::cell_area(Index cell) const {
  const Point lo = lower_corner(cell), hi = upper_corner(cell);
  return (hi.x - lo.x) * (hi.y - lo.y);
}

double Mesh::cell_diameter(Index cell) const {
  const Point d = upper_corner(cell) - lower_corner(cell);
  return std::hypot(d.x, d.y);
}

std::pair<Index, Index> Mesh::side_vertices(Index cell, int s) const {
  const auto& v = cells_.at(cell).vertex_ids;
  return {v[static_cast<std::size_t>(s)], v[static_cast<std::size_t>((s + 1) % 4)]};
}

std::optional<Index> Mesh::midpoint(Index a, Index b) const {
  auto it = midpoints_.find(key(a, b));
  if (it == midpoints_.end())
    return std::nullopt;
  return it->second;
}

Index Mesh::get_or_create_midpoint(Index a, Index b) {
  const auto k = key(a, b);
  if (auto it = midpoints_.find(k); it != midpoints_.end())
    return it->second;
  const Index m = add_vertex(0.5 * (vertex(a) + vertex(b)));
  midpoints_.emplace(k, m);
  return m;
}

void Mesh::refine_cell(Index id) {
  if (!cells_[id].active())
    return;
  const auto v = cells_[id].vertex_ids;
  const auto tags = cells_[id].boundary_tags;
  const unsigned level = cells_[id].level;
  const Index m0 = get_or_create_midpoint(v[0], v[1]);
  const Index m1 = get_or_create_midpoint(v[1], v[2]);
  const Index m2 = get_or_create_midpoint(v[2], v[3]);
  const Index m3 = get_or_create_midpoint(v[3], v[0]);
  const Index c = add_vertex(0.5 * (vertex(v[0]) + vertex(v[2])));

  const std::array<std::array<Index, 4>, 4> child_vertices{{
      {v[0], m0, c, m3},
      {m0, v[1], m1, c},
      {c, m1, v[2], m2},
      {m3, c, m2, v[3]},
  }};
  std::array<Index, 4> kids{};
  for (std::size_t k = 0; k < 4; ++k) {
    Cell child;
    child.id = cells_.size();
    child.vertex_ids = child_vertices[k];
    child.level = level + 1;
    child.parent = id;
    for (std::size_t s = 0; s < 4; ++s)
      child.boundary_tags[s] = child_touches_side[k][s] ? tags[s] : interior_tag;
    kids[k] = child.id;
    cells_.push_back(child);
  }
  cells_[id].children = kids;
}

void Mesh::finalize() {
  active_.clear();
  roots_.clear();
  active_pos_.assign(cells_.size(), static_cast<std::size_t>(-1));
  for (const auto& c : cells_) {
    if (!c.parent)
      roots_.push_back(c.id);
    if (c.active()) {
      active_pos_[c.id] = active_.size();
      active_.push_back(c.id);
    }
  }

  side_owners_.clear();
  for (Index k : active_)
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = side_vertices(k, s);
      side_owners_[key(a, b)].push_back({k, s});
    }

  edges_.clear();
  std::map<std::pair<Index, Index>, std::size_t> seen;
  for (Index k : active_)
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = side_vertices(k, s);
      if (seen.count(key(a, b)))
        continue;
      const auto subfaces = side_neighbors(k, s);
      Edge e;
      if (subfaces.size() == 2) {
        e.vertex_ids = {a, b};
        e.cells = {k, subfaces[0].neighbor, subfaces[1].neighbor};
        e.hanging_vertex = midpoint(a, b);
      } else if (subfaces.size() == 1) {
        const auto& nb = cells_[subfaces[0].neighbor];
        if (nb.level < cells_[k].level)
          continue;  // recorded from the coarse side
        e.vertex_ids = {a, b};
        e.cells = {k, subfaces[0].neighbor};
      } else {
        e.vertex_ids = {a, b};
        e.cells = {k};
      }
      seen.emplace(key(a, b), edges_.size());
      edges_.push_back(std::move(e));
    }
}

std::vector<SubFace> Mesh::side_neighbors(Index cell, int s) const {
  const auto [a, b] = side_vertices(cell, s);
  std::vector<SubFace> out;

  auto owner_other_than = [&](Index p, Index q) -> std::optional<Index> {
    auto it = side_owners_.find(key(p, q));
    if (it == side_owners_.end())
      return std::nullopt;
    for (auto [k, side] : it->second)
      if (k != cell)
        return k;
    return std::nullopt;
  };

  if (auto k = owner_other_than(a, b)) {
    out.push_back({*k, vertex(a), vertex(b)});
    return out;
  }
  if (auto m = midpoint(a, b)) {
    auto k0 = owner_other_than(a, *m);
    auto k1 = owner_other_than(*m, b);
    if (!k0 || !k1)
      throw UsageError("mesh is not one-irregular at cell " + std::to_string(cell));
    out.push_back({*k0, vertex(a), vertex(*m)});
    out.push_back({*k1, vertex(*m), vertex(b)});
    return out;
  }
  const Cell& c = cells_[cell];
  if (c.parent) {
    const Cell& p = cells_[*c.parent];
    std::size_t idx = 0;
    while ((*p.children)[idx] != cell)
      ++idx;
    if (child_touches_side[idx][static_cast<std::size_t>(s)]) {
      const auto [pa, pb] = side_vertices(p.id, s);
      auto it = side_owners_.find(key(pa, pb));
      if (it != side_owners_.end())
        for (auto [k, side] : it->second)
          if (k != p.id) {
            out.push_back({k, vertex(a), vertex(b)});
            return out;
          }
    }
  }
  return out;
}

std::vector<Index> Mesh::hanging_vertices() const {
  std::set<Index> hanging;
  for (Index k : active_)
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = side_vertices(k, s);
      if (auto m = midpoint(a, b))
        hanging.insert(*m);
    }
  return {hanging.begin(), hanging.end()};
}

std::optional<Index> Mesh::descend(Index id, Point p) const {
  const double tol = tolerance_;
  if (!inside_box(p, lower_corner(id), upper_corner(id), tol))
    return std::nullopt;
  const Cell& c = cells_[id];
  if (c.active())
    return id;
  for (Index kid : *c.children)
    if (auto hit = descend(kid, p))
      return hit;
  return std::nullopt;
}

std::optional<Index> Mesh::locate(Point p) const {
  std::optional<Index> best;
  for (Index r : roots_)
    if (auto hit = descend(r, p))
      if (!best || *hit < *best)
        best = hit;
  return best;
}

std::vector<Index> Mesh::cells_containing(Point p) const {
  std::vector<Index> out;
  for (Index k : active_)
    if (inside_box(p, lower_corner(k), upper_corner(k), tolerance_))
      out.push_back(k);
  return out;
}

Mesh refine_with_closure(const Mesh& mesh, const std::set<Index>& marked) {
  Mesh out = mesh;
  for (Index k : marked) {
    if (k >= out.cells_.size() || !out.cells_[k].active())
      throw UsageError("marked cell " + std::to_string(k) + " is not active");
    out.refine_cell(k);
  }

  // Closure: an active cell must not see a neighbor two levels finer.
  const std::size_t max_sweeps = out.cells_.size() + 1;
  for (std::size_t sweep = 0;; ++sweep) {
    if (sweep > max_sweeps)
      throw SolverError("refinement closure did not terminate");
    std::vector<Index> violating;
    for (const Cell& c : out.cells_) {
      if (!c.active())
        continue;
      for (int s = 0; s < 4; ++s) {
        auto [a, b] = out.side_vertices(c.id, s);
        auto m = out.midpoint(a, b);
        if (m && (out.midpoint(a, *m) || out.midpoint(*m, b))) {
          violating.push_back(c.id);
          break;
        }
      }
    }
    if (violating.empty())
      break;
    for (Index k : violating)
      out.refine_cell(k);
  }
  out.finalize();
  return out;
}

Mesh refine_uniform(const Mesh& mesh, unsigned times) {
  Mesh out = mesh;
  for (unsigned t = 0; t < times; ++t) {
    const auto& act = out.active_cells();
    out = refine_with_closure(out, std::set<Index>(act.begin(), act.end()));
  }
  return out;
}

std::optional<std::array<Index, 4>> sibling_patch(const Mesh& mesh, Index cell) {
  const Cell& c = mesh.cell(cell);
  if (!c.active())
    throw UsageError("sibling_patch needs an active cell");
  if (!c.parent)
    return std::nullopt;
  const auto kids = *mesh.cell(*c.parent).children;
  for (Index k : kids)
    if (!mesh.cell(k).active())
      return std::nullopt;
  return kids;
}

} // namespace dwr
