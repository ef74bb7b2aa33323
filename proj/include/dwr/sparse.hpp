#pragma once

#include "dwr/mesh.hpp"

#include <span>
#include <vector>

namespace dwr {

using Vector = std::vector<double>;

/// Row-wise list of column indices used to build a SparseMatrix.
class SparsityPattern {
public:
  explicit SparsityPattern(std::size_t rows, std::size_t cols = 0)
      : rows_(rows), cols_(cols == 0 ? rows : cols) {}

  void add(Index row, Index col) { rows_[row].push_back(col); }
  void add_block(std::span<const Index> rows, std::span<const Index> cols);
  std::size_t n_rows() const { return rows_.size(); }
  std::size_t n_cols() const { return cols_; }

private:
  friend class SparseMatrix;
  std::vector<std::vector<Index>> rows_;
  std::size_t cols_;
};

/// Compressed sparse row matrix with sorted, unique column indices per row.
class SparseMatrix {
public:
  SparseMatrix() = default;
  explicit SparseMatrix(SparsityPattern pattern);

  struct Triplet {
    Index row;
    Index col;
    double value;
  };
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    const std::vector<Triplet>& entries);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const std::vector<std::vector<double>>& dense);

  std::size_t n_rows() const { return row_offsets_.empty() ? 0 : row_offsets_.size() - 1; }
  std::size_t n_cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& column_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Adds to an existing entry; throws if (i, j) is not in the pattern.
  void add(Index i, Index j, double v);
  void set(Index i, Index j, double v);
  /// Value at (i, j); 0 for entries outside the pattern.
  double operator()(Index i, Index j) const;
  bool has_entry(Index i, Index j) const;

  void vmult(std::span<const double> x, std::span<double> y) const;
  void Tvmult(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;

  SparseMatrix transpose() const;
  Vector diagonal() const;
  SparseMatrix& operator*=(double s);
  /// this + s * other on the union pattern.
  SparseMatrix add_scaled(const SparseMatrix& other, double s) const;
  bool is_symmetric(double tol) const;
  std::vector<std::vector<double>> to_dense() const;

private:
  std::size_t find(Index i, Index j) const;

  std::vector<std::size_t> row_offsets_;
  std::vector<Index> col_indices_;
  std::vector<double> values_;
  std::size_t cols_ = 0;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

} // namespace dwr
