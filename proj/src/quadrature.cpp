#include "dwr/quadrature.hpp"

#include "dwr/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace dwr {

namespace {

GaussRule1D compute_gauss(unsigned n) {
  // Newton iteration on the Legendre polynomial P_n over [-1, 1], then map.
  GaussRule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (unsigned i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (unsigned k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pnm1 = n == 1 ? 1.0 : p0;
      dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
        break;
    }
    // recompute derivative at the converged root
    double p0 = 1.0, p1 = x;
    for (unsigned k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const double pn = n == 1 ? x : p1;
    const double pnm1 = n == 1 ? 1.0 : p0;
    dp = n * (x * pn - pnm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // ascending order on [0, 1]
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  return rule;
}

} // namespace

const GaussRule1D& gauss_legendre(unsigned n) {
  if (n == 0 || n > 64)
    throw UsageError("gauss_legendre: unsupported number of points");
  static std::mutex mutex;
  static std::map<unsigned, GaussRule1D> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, compute_gauss(n)).first;
  return it->second;
}

std::vector<QuadraturePoint> tensor_gauss(unsigned n) {
  return rectangle_gauss({0.0, 0.0}, {1.0, 1.0}, n);
}

std::vector<QuadraturePoint> rectangle_gauss(Point lo, Point hi, unsigned n) {
  const auto& g = gauss_legendre(n);
  const double hx = hi.x - lo.x, hy = hi.y - lo.y;
  std::vector<QuadraturePoint> q;
  q.reserve(n * n);
  for (unsigned j = 0; j < n; ++j)
    for (unsigned i = 0; i < n; ++i)
      q.push_back({{lo.x + hx * g.points[i], lo.y + hy * g.points[j]},
                   hx * hy * g.weights[i] * g.weights[j]});
  return q;
}

std::vector<QuadraturePoint> segment_gauss(Point a, Point b, unsigned n) {
  const auto& g = gauss_legendre(n);
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  std::vector<QuadraturePoint> q;
  q.reserve(n);
  for (unsigned i = 0; i < n; ++i)
    q.push_back({a + g.points[i] * (b - a), len * g.weights[i]});
  return q;
}

} // namespace dwr
