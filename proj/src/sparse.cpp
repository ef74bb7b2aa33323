#include "dwr/sparse.hpp"

#include "dwr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dwr {

void SparsityPattern::add_block(std::span<const Index> rows, std::span<const Index> cols) {
  for (Index r : rows)
    for (Index c : cols)
      rows_[r].push_back(c);
}

SparseMatrix::SparseMatrix(SparsityPattern pattern) : cols_(pattern.cols_) {
  row_offsets_.reserve(pattern.rows_.size() + 1);
  row_offsets_.push_back(0);
  for (auto& row : pattern.rows_) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (Index c : row) {
      if (c >= cols_)
        throw UsageError("sparsity pattern column out of range");
      col_indices_.push_back(c);
    }
    row_offsets_.push_back(col_indices_.size());
    std::vector<Index>().swap(row);
  }
  values_.assign(col_indices_.size(), 0.0);
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         const std::vector<Triplet>& entries) {
  SparsityPattern p(rows, cols);
  for (const auto& t : entries)
    p.add(t.row, t.col);
  SparseMatrix m(std::move(p));
  for (const auto& t : entries)
    m.add(t.row, t.col, t.value);
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i)
    t.push_back({i, i, 1.0});
  return from_triplets(n, n, t);
}

SparseMatrix SparseMatrix::from_dense(const std::vector<std::vector<double>>& dense) {
  std::vector<Triplet> t;
  const std::size_t cols = dense.empty() ? 0 : dense.front().size();
  for (Index i = 0; i < dense.size(); ++i)
    for (Index j = 0; j < dense[i].size(); ++j)
      if (dense[i][j] != 0.0)
        t.push_back({i, j, dense[i][j]});
  return from_triplets(dense.size(), cols, t);
}

std::size_t SparseMatrix::find(Index i, Index j) const {
  const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j)
    return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - col_indices_.begin());
}

void SparseMatrix::add(Index i, Index j, double v) {
  const auto k = find(i, j);
  if (k == static_cast<std::size_t>(-1))
    throw UsageError("entry (" + std::to_string(i) + "," + std::to_string(j) +
                     ") not in sparsity pattern");
  values_[k] += v;
}

void SparseMatrix::set(Index i, Index j, double v) {
  const auto k = find(i, j);
  if (k == static_cast<std::size_t>(-1))
    throw UsageError("entry not in sparsity pattern");
  values_[k] = v;
}

double SparseMatrix::operator()(Index i, Index j) const {
  const auto k = find(i, j);
  return k == static_cast<std::size_t>(-1) ? 0.0 : values_[k];
}

bool SparseMatrix::has_entry(Index i, Index j) const {
  return find(i, j) != static_cast<std::size_t>(-1);
}

void SparseMatrix::vmult(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i + 1 < row_offsets_.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      s += values_[k] * x[col_indices_[k]];
    y[i] = s;
  }
}

void SparseMatrix::Tvmult(std::span<const double> x, std::span<double> y) const {
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i + 1 < row_offsets_.size(); ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      y[col_indices_[k]] += values_[k] * x[i];
}

Vector SparseMatrix::operator*(std::span<const double> x) const {
  Vector y(n_rows());
  vmult(x, y);
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  SparsityPattern p(cols_, n_rows());
  for (std::size_t i = 0; i + 1 < row_offsets_.size(); ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      p.add(col_indices_[k], i);
  SparseMatrix t(std::move(p));
  for (std::size_t i = 0; i + 1 < row_offsets_.size(); ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      t.add(col_indices_[k], i, values_[k]);
  return t;
}

Vector SparseMatrix::diagonal() const {
  Vector d(n_rows(), 0.0);
  for (Index i = 0; i < d.size(); ++i)
    d[i] = (*this)(i, i);
  return d;
}

SparseMatrix& SparseMatrix::operator*=(double s) {
  for (double& v : values_)
    v *= s;
  return *this;
}

SparseMatrix SparseMatrix::add_scaled(const SparseMatrix& other, double s) const {
  if (other.n_rows() != n_rows() || other.n_cols() != n_cols())
    throw UsageError("add_scaled: shape mismatch");
  SparsityPattern p(n_rows(), n_cols());
  for (std::size_t i = 0; i < n_rows(); ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      p.add(i, col_indices_[k]);
    for (std::size_t k = other.row_offsets_[i]; k < other.row_offsets_[i + 1]; ++k)
      p.add(i, other.col_indices_[k]);
  }
  SparseMatrix r(std::move(p));
  for (std::size_t i = 0; i < n_rows(); ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      r.add(i, col_indices_[k], values_[k]);
    for (std::size_t k = other.row_offsets_[i]; k < other.row_offsets_[i + 1]; ++k)
      r.add(i, other.col_indices_[k], s * other.values_[k]);
  }
  return r;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (n_rows() != n_cols())
    return false;
  double scale = 0.0;
  for (double v : values_)
    scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < n_rows(); ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      if (std::abs(values_[k] - (*this)(col_indices_[k], i)) > tol * std::max(scale, 1.0))
        return false;
  return true;
}

std::vector<std::vector<double>> SparseMatrix::to_dense() const {
  std::vector<std::vector<double>> d(n_rows(), std::vector<double>(n_cols(), 0.0));
  for (std::size_t i = 0; i < n_rows(); ++i)
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
      d[i][col_indices_[k]] = values_[k];
  return d;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += a * x[i];
}

} // namespace dwr
