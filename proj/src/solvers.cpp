#include "dwr/solvers.hpp"

#include "dwr/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace dwr {

namespace {

std::atomic<std::uint64_t> solve_counter{0};

Preconditioner jacobi_of(const SparseMatrix& A) {
  Vector inv = A.diagonal();
  for (double& d : inv)
    d = (d != 0.0) ? 1.0 / d : 1.0;
  return [inv = std::move(inv)](std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i)
      y[i] = inv[i] * x[i];
  };
}

void normalize_with_sign(Vector& v) {
  const double n = norm2(v);
  std::size_t imax = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[imax]) * (1.0 + 1e-12))
      imax = i;
  const double s = (v[imax] < 0.0 ? -1.0 : 1.0) / n;
  for (double& x : v)
    x *= s;
}

} // namespace

std::uint64_t linear_solve_count() { return solve_counter.load(); }

std::pair<Vector, SolverReport> solve_cg(const SparseMatrix& A, std::span<const double> b,
                                         double tol, std::size_t max_iter) {
  ++solve_counter;
  const std::size_t n = b.size();
  if (A.n_rows() != n || A.n_cols() != n)
    throw UsageError("solve_cg: dimension mismatch");
#ifndef NDEBUG
  if (!A.is_symmetric(1e-10))
    throw UsageError("solve_cg: matrix is not symmetric");
#endif
  Vector x(n, 0.0), r(b.begin(), b.end()), z(n), p(n), q(n);
  SolverReport rep;
  const double bnorm = norm2(b);
  rep.residual_history.push_back(bnorm);
  if (bnorm == 0.0) {
    rep.converged = true;
    return {x, rep};
  }
  const auto precond = jacobi_of(A);
  // Minimal residual smoothing: y is the iterate returned and s = b - A y
  // its residual, chosen on the segment between the previous smoothed
  // residual and the current CG residual so that ||s|| never increases.
  Vector y = x, s = r, d(n);
  double snorm = bnorm;
  auto smooth = [&] {
    for (std::size_t i = 0; i < n; ++i)
      d[i] = r[i] - s[i];
    const double dd = dot(d, d);
    const double eta = dd > 0.0 ? -dot(s, d) / dd : 0.0;
    axpy(eta, d, s);
    for (std::size_t i = 0; i < n; ++i)
      y[i] += eta * (x[i] - y[i]);
    snorm = norm2(s);
  };
  auto true_residual = [&] {
    Vector ay = A * y;
    for (std::size_t i = 0; i < n; ++i)
      ay[i] = b[i] - ay[i];
    return ay;
  };
  // The recursively updated residuals drift from b - A y in long runs; on
  // apparent convergence the iteration restarts from the true residual.
  for (int restart = 0; restart < 4; ++restart) {
    x = y;
    r = s;
    precond(r, z);
    p = z;
    double rz = dot(r, z);
    while (rep.iterations < max_iter && snorm > tol * bnorm) {
      A.vmult(p, q);
      const double pq = dot(p, q);
      if (pq <= 0.0)
        break;  // not positive definite along p
      const double alpha = rz / pq;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      smooth();
      ++rep.iterations;
      rep.residual_history.push_back(snorm);
      precond(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i)
        p[i] = z[i] + beta * p[i];
    }
    s = true_residual();
    rep.final_residual_norm = norm2(s);
    if (rep.final_residual_norm <= tol * bnorm || rep.iterations >= max_iter || snorm > tol * bnorm)
      break;
    snorm = rep.final_residual_norm;
  }
  rep.converged = rep.final_residual_norm <= tol * bnorm;
  return {y, rep};
}

std::pair<Vector, SolverReport> solve_gmres(const SparseMatrix& A, std::span<const double> b,
                                            double tol, std::size_t restart,
                                            std::size_t max_iter) {
  GmresOptions opt;
  opt.restart = restart;
  return solve_gmres(A, b, tol, max_iter, opt);
}

std::pair<Vector, SolverReport> solve_gmres(const SparseMatrix& A, std::span<const double> b,
                                            double tol, std::size_t max_iter,
                                            const GmresOptions& options) {
  ++solve_counter;
  const std::size_t n = b.size();
  if (A.n_rows() != n || A.n_cols() != n)
    throw UsageError("solve_gmres: dimension mismatch");
  const std::size_t m = std::max<std::size_t>(1, std::min(options.restart, n));
  Preconditioner precond = options.preconditioner;
  if (!precond) {
    if (options.jacobi)
      precond = jacobi_of(A);
    else
      precond = [](std::span<const double> x, std::span<double> y) {
        std::copy(x.begin(), x.end(), y.begin());
      };
  }

  Vector x(n, 0.0);
  SolverReport rep;
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    rep.converged = true;
    rep.residual_history.push_back(0.0);
    return {x, rep};
  }

  Vector r(n), w(n), t(n);
  std::vector<Vector> V(m + 1, Vector(n));
  std::vector<Vector> H(m + 1, Vector(m, 0.0));
  Vector cs(m), sn(m), g(m + 1);

  auto true_residual = [&] {
    A.vmult(x, r);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = b[i] - r[i];
    return norm2(r);
  };

  double beta = true_residual();
  rep.residual_history.push_back(beta);
  double previous_cycle = beta;
  while (rep.iterations < max_iter && beta > tol * bnorm) {
    for (std::size_t i = 0; i < n; ++i)
      V[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    std::size_t j = 0;
    bool breakdown = false;
    for (; j < m && rep.iterations < max_iter; ++j) {
      precond(V[j], t);
      A.vmult(t, w);
      for (std::size_t i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H[i][j] = dot(w, V[i]);
        axpy(-H[i][j], V[i], w);
      }
      for (std::size_t i = 0; i <= j; ++i) {  // one reorthogonalization pass
        const double c = dot(w, V[i]);
        H[i][j] += c;
        axpy(-c, V[i], w);
      }
      H[j + 1][j] = norm2(w);
      for (std::size_t i = 0; i < j; ++i) {
        const double tmp = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = tmp;
      }
      const double denom = std::hypot(H[j][j], H[j + 1][j]);
      const double hnext = H[j + 1][j];
      if (denom == 0.0) {
        breakdown = true;
        break;
      }
      cs[j] = H[j][j] / denom;
      sn[j] = H[j + 1][j] / denom;
      H[j][j] = denom;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      ++rep.iterations;
      rep.residual_history.push_back(std::abs(g[j + 1]));
      if (hnext <= 1e-14 * denom) {
        ++j;
        breakdown = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i)
        V[j + 1][i] = w[i] / hnext;
      if (std::abs(g[j + 1]) <= tol * bnorm) {
        ++j;
        break;
      }
    }
    // Back substitution and update x += P^{-1} V y.
    Vector y(j, 0.0);
    for (std::size_t ii = j; ii-- > 0;) {
      double s = g[ii];
      for (std::size_t k = ii + 1; k < j; ++k)
        s -= H[ii][k] * y[k];
      y[ii] = s / H[ii][ii];
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t k = 0; k < j; ++k)
      axpy(y[k], V[k], w);
    precond(w, t);
    axpy(1.0, t, x);
    beta = true_residual();
    if (breakdown || beta > 0.999999 * previous_cycle)
      break;  // happy breakdown, or stagnation over a full cycle
    previous_cycle = beta;
  }
  rep.final_residual_norm = beta;
  rep.converged = beta <= tol * bnorm * 1.0000001;
  return {x, rep};
}

std::pair<Vector, SolverReport> newton_solve(const ResidualFunction& residual,
                                             const JacobianFunction& jacobian,
                                             std::span<const double> x0, double tol,
                                             const NewtonOptions& options) {
  Vector x(x0.begin(), x0.end());
  Vector r = residual(x);
  double rnorm = norm2(r);
  SolverReport rep;
  rep.residual_history.push_back(rnorm);
  while (rnorm > tol) {
    if (rep.iterations >= options.max_iter) {
      rep.final_residual_norm = rnorm;
      return {x, rep};
    }
    const SparseMatrix J = jacobian(x);
    Vector minus_r(r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
      minus_r[i] = -r[i];
    auto [delta, lin] = options.symmetric_jacobian
                            ? solve_cg(J, minus_r, options.linear_tol, 20 * r.size() + 100)
                            : solve_gmres(J, minus_r, options.linear_tol, 200, 20 * r.size() + 200);
    if (!lin.converged && lin.final_residual_norm > 1e-6 * rnorm) {
      rep.final_residual_norm = rnorm;
      return {x, rep};
    }
    double step = 1.0;
    bool accepted = false;
    Vector trial(x.size());
    Vector r_trial;
    for (std::size_t h = 0; h <= options.max_halvings; ++h) {
      for (std::size_t i = 0; i < x.size(); ++i)
        trial[i] = x[i] + step * delta[i];
      r_trial = residual(trial);
      const double tn = norm2(r_trial);
      if (tn < rnorm || tn <= tol) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++rep.iterations;
    if (!accepted) {
      rep.final_residual_norm = rnorm;
      return {x, rep};
    }
    x = std::move(trial);
    r = std::move(r_trial);
    rnorm = norm2(r);
    rep.residual_history.push_back(rnorm);
  }
  rep.final_residual_norm = rnorm;
  rep.converged = true;
  return {x, rep};
}

EigenPairResult eigen_pair(const SparseMatrix& A, const SparseMatrix& M, double shift,
                           bool adjoint, double tol, std::size_t max_iter) {
  const std::size_t n = A.n_rows();
  if (M.n_rows() != n || A.n_cols() != n || M.n_cols() != n)
    throw UsageError("eigen_pair: dimension mismatch");
  const SparseMatrix op = adjoint ? A.transpose() : A;
  const SparseMatrix mass = adjoint ? M.transpose() : M;
  const SparseMatrix shifted = op.add_scaled(mass, -shift);
  // CG first for symmetric pencils; it fails cleanly when the shift makes
  // the operator indefinite and GMRES takes over.
  bool try_cg = shifted.is_symmetric(1e-12);

  EigenPairResult res;
  // A ramp rather than the constant vector: the constant vector is an
  // exact eigenvector of many small test matrices (constant row sums).
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i)
    x[i] = 1.0 + static_cast<double>(i + 1) / static_cast<double>(n + 1);
  normalize_with_sign(x);
  Vector mx(n), ox(n), prev;
  double last_change = 0.0;
  for (std::size_t k = 0; k < max_iter; ++k) {
    mass.vmult(x, mx);
    const double rhs_norm = norm2(mx);
    if (rhs_norm == 0.0)
      throw UsageError("eigen_pair: start vector lies in the kernel of M");
    std::pair<Vector, SolverReport> solved;
    if (try_cg) {
      solved = solve_cg(shifted, mx, 1e-12, 10 * n + 200);
      if (!solved.second.converged)
        try_cg = false;
    }
    if (!try_cg)
      solved = solve_gmres(shifted, mx, 1e-13, std::min<std::size_t>(n, 200), 50 * n + 500);
    auto& [y, rep] = solved;
    const double ynorm = norm2(y);
    if (!std::isfinite(ynorm) || ynorm > 1e12 * rhs_norm ||
        (!rep.converged && rep.final_residual_norm > 1e-8 * rhs_norm))
      throw ShiftRejectedError("eigen_pair: shifted system is (nearly) singular");
    prev = x;
    x = std::move(y);
    normalize_with_sign(x);

    op.vmult(x, ox);
    mass.vmult(x, mx);
    const double xmx = dot(x, mx);
    if (std::abs(xmx) < 1e-300)
      throw UnsupportedSpectrumError("eigen_pair: iterate is M-orthogonal to itself");
    res.lambda = dot(x, ox) / xmx;
    Vector rv(n);
    for (std::size_t i = 0; i < n; ++i)
      rv[i] = ox[i] - res.lambda * mx[i];
    const double rn = norm2(rv);
    res.report.iterations = k + 1;
    res.report.final_residual_norm = rn;
    res.report.residual_history.push_back(rn);
    Vector diff(n);
    for (std::size_t i = 0; i < n; ++i)
      diff[i] = x[i] - prev[i];
    last_change = norm2(diff);
    if (rn <= tol * norm2(x)) {
      res.report.converged = true;
      res.vector = std::move(x);
      return res;
    }
  }
  if (last_change > 1e-3)
    throw UnsupportedSpectrumError(
        "eigen_pair: iterate oscillates; the eigenvalue nearest to the shift is not real");
  res.vector = std::move(x);
  return res;
}

} // namespace dwr
