#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pinvar {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  // Appends one row; the matrix must be empty or have matching columns.
  void append_row(std::span<const double> values);

  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double frobenius_norm(const Matrix& a);
Matrix multiply(const Matrix& a, const Matrix& b);

// out = a * x
void gemv(const Matrix& a, std::span<const double> x, std::span<double> out);

struct LeastSquaresSolution {
  Matrix x;                  // rhs_count x unknowns
  std::size_t rank = 0;
  bool rank_deficient = false;
};

// Solves min_X || X * A - C ||_F for X, where A is given by its rows
// (unknowns x samples) and C by its rows (rhs_count x samples).
//
// Equivalently each row of X solves the tall problem A^T x = c. A^T is
// factored with column-pivoted Householder QR (the Gram matrix is never
// formed). If the numerical rank is below the column count, where
// |R_jj| <= rank_tol * |R_00| marks the cut, the minimum-norm solution is
// returned through a complete orthogonal decomposition.
LeastSquaresSolution solve_least_squares_rows(const Matrix& a_rows, const Matrix& c_rows,
                                              double rank_tol = 1e-12);

}  // namespace pinvar
