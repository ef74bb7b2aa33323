#include "dwr/forms.hpp"

#include "dwr/errors.hpp"

#include <cmath>

namespace dwr {

namespace {

FormDescriptor single(FormTerm t) {
  FormDescriptor f;
  f.terms.push_back(std::move(t));
  return f;
}

double checked(double v) {
  if (!std::isfinite(v))
    throw DataError("form coefficient is not finite");
  return v;
}

} // namespace

FormDescriptor FormDescriptor::mass(double scale) { return single({FormKind::mass, scale, {}, {}, {}}); }

FormDescriptor FormDescriptor::stiffness(double diffusion) {
  return single({FormKind::stiffness, diffusion, {}, {}, {}});
}

FormDescriptor FormDescriptor::advection(VectorField velocity) {
  return single({FormKind::advection, 1.0, {}, std::move(velocity), {}});
}

FormDescriptor FormDescriptor::reaction(ScalarField coefficient) {
  return single({FormKind::reaction, 1.0, std::move(coefficient), {}, {}});
}

FormDescriptor FormDescriptor::semilinear_cubic(double scale) {
  return single({FormKind::semilinear_cubic, scale, {}, {}, {}});
}

FormDescriptor FormDescriptor::custom(CellKernel kernel) {
  return single({FormKind::custom, 1.0, {}, {}, std::move(kernel)});
}

FormDescriptor FormDescriptor::operator+(const FormDescriptor& other) const {
  FormDescriptor f = *this;
  f.terms.insert(f.terms.end(), other.terms.begin(), other.terms.end());
  return f;
}

FormDescriptor FormDescriptor::scaled(double s) const {
  FormDescriptor f = *this;
  for (auto& t : f.terms) {
    if (t.kind == FormKind::custom) {
      auto k = t.kernel;
      t.kernel = [k, s](const FeSpace& sp, Index c, std::vector<double>& local) {
        k(sp, c, local);
        for (double& v : local)
          v *= s;
      };
    } else {
      t.scale *= s;
    }
  }
  return f;
}

bool FormDescriptor::nonlinear() const {
  for (const auto& t : terms)
    if (t.kind == FormKind::semilinear_cubic)
      return true;
  return false;
}

bool FormDescriptor::symmetric() const {
  for (const auto& t : terms)
    if (t.kind == FormKind::advection || t.kind == FormKind::custom)
      return false;
  return true;
}

bool FormDescriptor::has_custom() const {
  for (const auto& t : terms)
    if (t.kind == FormKind::custom)
      return true;
  return false;
}

bool FormDescriptor::constant_linear() const {
  for (const auto& t : terms)
    if (t.kind != FormKind::mass && t.kind != FormKind::stiffness)
      return false;
  return true;
}

double FormDescriptor::diffusion() const {
  double nu = 0.0;
  for (const auto& t : terms)
    if (t.kind == FormKind::stiffness)
      nu += t.scale;
  return nu;
}

double FormDescriptor::operator_integrand(Point x, double u, Point gu, double w, Point gw) const {
  double s = 0.0;
  for (const auto& t : terms) {
    switch (t.kind) {
    case FormKind::mass:
      s += t.scale * u * w;
      break;
    case FormKind::stiffness:
      s += t.scale * (gu.x * gw.x + gu.y * gw.y);
      break;
    case FormKind::advection: {
      const Point b = t.velocity(x);
      s += t.scale * checked(b.x * gu.x + b.y * gu.y) * w;
      break;
    }
    case FormKind::reaction:
      s += t.scale * checked(t.coefficient(x)) * u * w;
      break;
    case FormKind::semilinear_cubic:
      s += t.scale * u * u * u * w;
      break;
    case FormKind::custom:
      throw UsageError("custom cell kernels have no pointwise integrand");
    }
  }
  return s;
}

double FormDescriptor::linearized_integrand(Point x, double u, double phi, Point gphi, double psi,
                                            Point gpsi) const {
  double s = 0.0;
  for (const auto& t : terms) {
    switch (t.kind) {
    case FormKind::mass:
      s += t.scale * phi * psi;
      break;
    case FormKind::stiffness:
      s += t.scale * (gphi.x * gpsi.x + gphi.y * gpsi.y);
      break;
    case FormKind::advection: {
      const Point b = t.velocity(x);
      s += t.scale * checked(b.x * gphi.x + b.y * gphi.y) * psi;
      break;
    }
    case FormKind::reaction:
      s += t.scale * checked(t.coefficient(x)) * phi * psi;
      break;
    case FormKind::semilinear_cubic:
      s += 3.0 * t.scale * u * u * phi * psi;
      break;
    case FormKind::custom:
      throw UsageError("custom cell kernels have no pointwise integrand");
    }
  }
  return s;
}

double FormDescriptor::strong_operator(Point x, double u, Point gu, double lap_u) const {
  double s = 0.0;
  for (const auto& t : terms) {
    switch (t.kind) {
    case FormKind::mass:
      s += t.scale * u;
      break;
    case FormKind::stiffness:
      s -= t.scale * lap_u;
      break;
    case FormKind::advection: {
      const Point b = t.velocity(x);
      s += t.scale * (b.x * gu.x + b.y * gu.y);
      break;
    }
    case FormKind::reaction:
      s += t.scale * t.coefficient(x) * u;
      break;
    case FormKind::semilinear_cubic:
      s += t.scale * u * u * u;
      break;
    case FormKind::custom:
      throw UsageError("custom cell kernels cannot be localized");
    }
  }
  return s;
}

double FormDescriptor::strong_adjoint(Point x, double u, double z, Point gz, double lap_z) const {
  double s = 0.0;
  for (const auto& t : terms) {
    switch (t.kind) {
    case FormKind::mass:
      s += t.scale * z;
      break;
    case FormKind::stiffness:
      s -= t.scale * lap_z;
      break;
    case FormKind::advection: {
      const Point b = t.velocity(x);
      s -= t.scale * (b.x * gz.x + b.y * gz.y);
      break;
    }
    case FormKind::reaction:
      s += t.scale * t.coefficient(x) * z;
      break;
    case FormKind::semilinear_cubic:
      s += 3.0 * t.scale * u * u * z;
      break;
    case FormKind::custom:
      throw UsageError("custom cell kernels cannot be localized");
    }
  }
  return s;
}

double FormDescriptor::conormal(Point gu, Point n) const {
  return diffusion() * (gu.x * n.x + gu.y * n.y);
}

double FormDescriptor::adjoint_conormal(Point x, double z, Point gz, Point n) const {
  double s = diffusion() * (gz.x * n.x + gz.y * n.y);
  for (const auto& t : terms)
    if (t.kind == FormKind::advection) {
      const Point b = t.velocity(x);
      s += t.scale * (b.x * n.x + b.y * n.y) * z;
    }
  return s;
}

Point side_normal(int s) {
  switch (s) {
  case 0:
    return {0.0, -1.0};
  case 1:
    return {1.0, 0.0};
  case 2:
    return {0.0, 1.0};
  default:
    return {-1.0, 0.0};
  }
}

} // namespace dwr
