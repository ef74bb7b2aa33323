#pragma once

#include "dwr/mesh.hpp"

#include <vector>

namespace dwr {

struct QuadraturePoint {
  Point point;
  double weight = 0.0;
};

/// n-point Gauss-Legendre rule on [0, 1]; exact for degree 2n - 1.
struct GaussRule1D {
  std::vector<double> points;
  std::vector<double> weights;
};
const GaussRule1D& gauss_legendre(unsigned n);

/// Tensor Gauss rule on the reference square [0, 1]^2.
std::vector<QuadraturePoint> tensor_gauss(unsigned n);

/// Gauss rule mapped to the rectangle [lo, hi] (physical weights).
std::vector<QuadraturePoint> rectangle_gauss(Point lo, Point hi, unsigned n);

/// Gauss rule on the segment [a, b] (weights include the segment length).
std::vector<QuadraturePoint> segment_gauss(Point a, Point b, unsigned n);

} // namespace dwr
