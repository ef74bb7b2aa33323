#include "dwr/errors.hpp"
#include "dwr/mesh.hpp"

#include <doctest.h>

#include <cmath>

using namespace dwr;

namespace {

double active_area(const Mesh& m) {
  double a = 0.0;
  for (Index c : m.active_cells())
    a += m.cell_area(c);
  return a;
}

bool strictly_inside_segment(Point p, Point a, Point b) {
  const double eps = 1e-12;
  if (a.x == b.x)
    return std::abs(p.x - a.x) < eps && p.y > std::min(a.y, b.y) + eps && p.y < std::max(a.y, b.y) - eps;
  return std::abs(p.y - a.y) < eps && p.x > std::min(a.x, b.x) + eps && p.x < std::max(a.x, b.x) - eps;
}

// Brute force: for every side of every active cell, count the distinct
// vertices of other active cells lying strictly inside it.
std::size_t max_hanging_per_side(const Mesh& m) {
  std::size_t worst = 0;
  for (Index c : m.active_cells())
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = m.side_vertices(c, s);
      std::set<Index> inside;
      for (Index k : m.active_cells())
        for (Index v : m.cell(k).vertex_ids)
          if (strictly_inside_segment(m.vertex(v), m.vertex(a), m.vertex(b)))
            inside.insert(v);
      worst = std::max(worst, inside.size());
    }
  return worst;
}

} // namespace

TEST_CASE("rect grid counts") {
  const Mesh one = Mesh::rect_grid(1, 1, {0, 0}, {1, 1});
  CHECK(one.n_active_cells() == 1);
  CHECK(one.vertices().size() == 4);
  CHECK(one.edges().size() == 4);

  const Mesh two = Mesh::rect_grid(2, 2, {0, 0}, {1, 1});
  CHECK(two.n_active_cells() == 4);
  CHECK(two.vertices().size() == 9);
  CHECK(two.edges().size() == 12);
  CHECK(two.hanging_vertices().empty());

  const Mesh strip = Mesh::rect_grid(3, 1, {0, 0}, {3, 1});
  for (Index c : strip.active_cells())
    CHECK(strip.cell_area(c) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("rect grid rejects degenerate bounds") {
  CHECK_THROWS_AS(Mesh::rect_grid(2, 2, {0, 0}, {0, 1}), DomainError);
  CHECK_THROWS_AS(Mesh::rect_grid(0, 2, {0, 0}, {1, 1}), DomainError);
  CHECK_THROWS_AS(Mesh::rect_grid(2, 2, {1, 1}, {0, 0}), DomainError);
}

TEST_CASE("cells are counterclockwise with v0 lower left") {
  const Mesh m = refine_uniform(Mesh::lshape(), 1);
  for (Index c : m.active_cells()) {
    const auto& v = m.cell(c).vertex_ids;
    const Point p0 = m.vertex(v[0]), p1 = m.vertex(v[1]), p2 = m.vertex(v[2]), p3 = m.vertex(v[3]);
    CHECK(p0.x < p1.x);
    CHECK(p1.y < p2.y);
    CHECK(p3.x < p2.x);
    CHECK(p0.y < p3.y);
    const double cross = (p1.x - p0.x) * (p3.y - p0.y) - (p1.y - p0.y) * (p3.x - p0.x);
    CHECK(cross > 0.0);
  }
}

TEST_CASE("lshape geometry") {
  const Mesh m = Mesh::lshape();
  CHECK(m.n_active_cells() == 3);
  CHECK(m.vertices().size() == 8);
  CHECK(active_area(m) == doctest::Approx(3.0).epsilon(1e-15));
  // The reentrant corner touches all three unit squares.
  CHECK(m.cells_containing({0.0, 0.0}).size() == 3);
  CHECK_FALSE(m.locate({0.5, -0.5}).has_value());
  CHECK(m.locate({-0.5, -0.5}).has_value());
}

TEST_CASE("refining a single cell") {
  const Mesh m = refine_with_closure(Mesh::rect_grid(1, 1, {0, 0}, {1, 1}), {0});
  CHECK(m.n_active_cells() == 4);
  CHECK(m.hanging_vertices().empty());
  for (Index c : m.active_cells()) {
    CHECK(m.cell_area(c) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m.cell(c).level == 1);
    CHECK(m.cell(c).parent == Index{0});
  }
  // Children follow the corner order of the parent.
  const auto ch = *m.cell(0).children;
  CHECK(m.lower_corner(ch[0]) == Point{0.0, 0.0});
  CHECK(m.lower_corner(ch[1]) == Point{0.5, 0.0});
  CHECK(m.lower_corner(ch[2]) == Point{0.5, 0.5});
  CHECK(m.lower_corner(ch[3]) == Point{0.0, 0.5});
}

TEST_CASE("one refined cell of a 2x2 grid leaves two hanging vertices") {
  const Mesh m = refine_with_closure(Mesh::rect_grid(2, 2, {0, 0}, {1, 1}), {0});
  CHECK(m.n_active_cells() == 7);
  CHECK(m.hanging_vertices().size() == 2);
  CHECK(max_hanging_per_side(m) == 1);
}

TEST_CASE("closure keeps the mesh one-irregular") {
  Mesh m = Mesh::rect_grid(2, 2, {0, 0}, {1, 1});
  m = refine_with_closure(m, {0});
  // Refine the child of cell 0 touching the shared edges.
  const Index corner = (*m.cell(0).children)[2];
  const Mesh twice = refine_with_closure(m, {corner});
  CHECK(max_hanging_per_side(twice) <= 1);
  // Neighbors of the twice refined child were forced to refine.
  CHECK(!twice.cell(1).active());
  CHECK(!twice.cell(2).active());

  SUBCASE("repeated corner refinement") {
    Mesh g = Mesh::lshape();
    for (int k = 0; k < 8; ++k) {
      const auto c = g.cells_containing({0.0, 0.0});
      const std::size_t before = g.n_active_cells();
      g = refine_with_closure(g, std::set<Index>(c.begin(), c.end()));
      CHECK(g.n_active_cells() > before);
      CHECK(max_hanging_per_side(g) <= 1);
      CHECK(active_area(g) == doctest::Approx(3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("edges record hanging vertices and symmetric adjacency") {
  const Mesh m = refine_with_closure(Mesh::rect_grid(2, 2, {0, 0}, {1, 1}), {3});
  std::size_t hanging = 0;
  for (const auto& e : m.edges()) {
    if (e.hanging_vertex)
      ++hanging;
    for (Index c : e.cells) {
      CHECK(m.cell(c).active());
      // The adjacent cell has a side on the segment.
      const Point a = m.vertex(e.vertex_ids[0]), b = m.vertex(e.vertex_ids[1]);
      bool found = false;
      for (int s = 0; s < 4; ++s) {
        auto [p, q] = m.side_vertices(c, s);
        const Point pa = m.vertex(p), pb = m.vertex(q);
        const bool same_line = (a.x == b.x && pa.x == pb.x && pa.x == a.x) || (a.y == b.y && pa.y == pb.y && pa.y == a.y);
        if (same_line)
          found = true;
      }
      CHECK(found);
    }
  }
  CHECK(hanging == m.hanging_vertices().size());
}

TEST_CASE("sibling patches") {
  const Mesh coarse = Mesh::rect_grid(2, 2, {0, 0}, {1, 1});
  CHECK_FALSE(sibling_patch(coarse, 0).has_value());

  const Mesh m = refine_uniform(Mesh::rect_grid(1, 1, {0, 0}, {1, 1}), 1);
  for (Index c : m.active_cells()) {
    const auto p = sibling_patch(m, c);
    REQUIRE(p.has_value());
    CHECK(*p == *m.cell(0).children);
  }

  const Index child = (*m.cell(0).children)[0];
  const Mesh broken = refine_with_closure(m, {child});
  const Index sibling = (*m.cell(0).children)[1];
  CHECK_FALSE(sibling_patch(broken, sibling).has_value());
}

TEST_CASE("area and child geometry invariants under random marking") {
  Mesh m = Mesh::rect_grid(3, 2, {0, 0}, {1.5, 1});
  unsigned state = 12345;
  for (int round = 0; round < 6; ++round) {
    std::set<Index> marked;
    for (Index c : m.active_cells()) {
      state = state * 1103515245u + 12345u;
      if ((state >> 16) % 5 == 0)
        marked.insert(c);
    }
    if (marked.empty())
      marked.insert(m.active_cells().front());
    const std::size_t before = m.n_active_cells();
    m = refine_with_closure(m, marked);
    CHECK(m.n_active_cells() > before);
    CHECK(active_area(m) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(max_hanging_per_side(m) <= 1);
  }
  for (const Cell& c : m.cells())
    if (c.children)
      for (Index k : *c.children)
        CHECK(m.cell_area(k) == doctest::Approx(m.cell_area(c.id) / 4.0).epsilon(1e-15));
}

TEST_CASE("refining inactive cells is rejected") {
  const Mesh m = refine_uniform(Mesh::rect_grid(1, 1, {0, 0}, {1, 1}), 1);
  CHECK_THROWS_AS(refine_with_closure(m, {0}), UsageError);
}
