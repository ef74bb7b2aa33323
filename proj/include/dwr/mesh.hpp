#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace dwr {

using Index = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

/// Side numbering of a cell: 0 bottom (v0->v1), 1 right (v1->v2),
/// 2 top (v2->v3), 3 left (v3->v0). Boundary tags created by the grid
/// generators follow the same convention shifted by one (1 bottom,
/// 2 right, 3 top, 4 left); tag 0 marks an interior side.
enum Side : int { bottom = 0, right = 1, top = 2, left = 3 };

inline constexpr int interior_tag = 0;

struct Vertex {
  Index id = 0;
  Point coords;
};

struct Cell {
  Index id = 0;
  std::array<Index, 4> vertex_ids{};  // counterclockwise, v0 lower-left
  unsigned level = 0;
  std::optional<Index> parent;
  std::optional<std::array<Index, 4>> children;  // same corner order as vertices
  std::array<int, 4> boundary_tags{};

  bool active() const { return !children.has_value(); }
};

struct Edge {
  std::array<Index, 2> vertex_ids{};
  std::vector<Index> cells;  // adjacent active cells
  std::optional<Index> hanging_vertex;
};

/// Portion of a cell side together with the active cell on the other side.
struct SubFace {
  Index neighbor = 0;
  Point a;
  Point b;
};

/// Hierarchical mesh of axis-parallel rectangles with isotropic 1->4
/// refinement. A Mesh value is never modified after construction;
/// refine_with_closure() returns a new mesh that keeps the old cells as
/// ancestors.
class Mesh {
public:
  static Mesh rect_grid(std::size_t nx, std::size_t ny, Point lower, Point upper);
  static Mesh lshape();

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<Index>& active_cells() const { return active_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const Cell& cell(Index id) const { return cells_.at(id); }
  const Point& vertex(Index id) const { return vertices_.at(id).coords; }
  std::size_t n_active_cells() const { return active_.size(); }

  /// Position of an active cell in active_cells(); throws for inactive ids.
  std::size_t active_position(Index cell) const;

  Point lower_corner(Index cell) const { return vertex(cells_[cell].vertex_ids[0]); }
  Point upper_corner(Index cell) const { return vertex(cells_[cell].vertex_ids[2]); }
  double cell_area(Index cell) const;
  double cell_diameter(Index cell) const;
  double domain_area() const { return domain_area_; }

  /// Vertex ids of side `s` of a cell, in counterclockwise order.
  std::pair<Index, Index> side_vertices(Index cell, int s) const;

  /// Registered midpoint vertex of the segment between two vertices.
  std::optional<Index> midpoint(Index a, Index b) const;

  /// Active cells across side `s` of the active cell. Empty on the boundary;
  /// one entry for a conforming or coarser neighbor; two entries (one per
  /// half) when the neighbors are one level finer.
  std::vector<SubFace> side_neighbors(Index cell, int s) const;

  /// Vertices of active cells that lie in the interior of a side of
  /// another active cell.
  std::vector<Index> hanging_vertices() const;

  /// Active cell whose closure contains p (smallest id wins); nullopt
  /// outside the domain.
  std::optional<Index> locate(Point p) const;

  /// All active cells whose closure contains p.
  std::vector<Index> cells_containing(Point p) const;

  /// Geometric tolerance scaled to the domain size.
  double tolerance() const { return tolerance_; }

private:
  friend Mesh refine_with_closure(const Mesh&, const std::set<Index>&);

  Index add_vertex(Point p);
  Index get_or_create_midpoint(Index a, Index b);
  void refine_cell(Index cell);
  void finalize();
  std::optional<Index> descend(Index root, Point p) const;

  static std::pair<Index, Index> key(Index a, Index b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }

  std::vector<Vertex> vertices_;
  std::vector<Cell> cells_;
  std::vector<Index> active_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> active_pos_;
  std::map<std::pair<Index, Index>, Index> midpoints_;
  std::map<std::pair<Index, Index>, std::vector<std::pair<Index, int>>> side_owners_;
  std::vector<Index> roots_;
  double domain_area_ = 0.0;
  double tolerance_ = 1e-12;
};

/// Refines every marked active cell into four children, then refines
/// further cells (ascending id) until no active cell has a neighbor that is
/// two or more levels finer.
Mesh refine_with_closure(const Mesh& mesh, const std::set<Index>& marked);

/// Uniform refinement of every active cell, `times` times.
Mesh refine_uniform(const Mesh& mesh, unsigned times = 1);

/// The four children of the cell's parent if they are all active.
std::optional<std::array<Index, 4>> sibling_patch(const Mesh& mesh, Index cell);

} // namespace dwr
