#include "pinvar/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pinvar/simd.hpp"

namespace pinvar {

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) {
    throw std::invalid_argument("append_row: expected " + std::to_string(cols_) +
                                " columns, got " + std::to_string(values.size()));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double frobenius_norm(const Matrix& a) {
  auto v = a.flat();
  return std::sqrt(simd::dot(v, v));
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      simd::axpy(a(i, k), b.row(k), dst);
    }
  }
  return out;
}

void gemv(const Matrix& a, std::span<const double> x, std::span<double> out) {
  if (x.size() != a.cols() || out.size() != a.rows()) {
    throw std::invalid_argument("gemv: dimension mismatch");
  }
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = simd::dot(a.row(i), x);
}

namespace {

// Householder QR of a tall matrix stored column-by-column: column k of the
// tall matrix is cols.row(k). On return the strict upper triangle of R lives
// in cols(k, i) for i < k, the diagonal in rdiag, and reflector i in
// cols.row(i)[i:], applied as y -= tau_i * (v^T y) v.
struct Reflectors {
  std::vector<double> tau;
  std::vector<double> rdiag;
  std::vector<std::size_t> perm;
  std::size_t steps = 0;
};

Reflectors householder_qr(Matrix& cols, bool pivot, Matrix* rhs) {
  const std::size_t n = cols.rows();
  const std::size_t len = cols.cols();
  Reflectors q;
  q.steps = std::min(n, len);
  q.tau.assign(q.steps, 0.0);
  q.rdiag.assign(q.steps, 0.0);
  q.perm.resize(n);
  std::iota(q.perm.begin(), q.perm.end(), std::size_t{0});

  for (std::size_t j = 0; j < q.steps; ++j) {
    if (pivot) {
      std::size_t best = j;
      double best_norm = -1.0;
      for (std::size_t k = j; k < n; ++k) {
        auto sub = cols.row(k).subspan(j);
        double nk = simd::dot(sub, sub);
        if (nk > best_norm) {
          best_norm = nk;
          best = k;
        }
      }
      if (best != j) {
        std::swap_ranges(cols.row(j).begin(), cols.row(j).end(), cols.row(best).begin());
        std::swap(q.perm[j], q.perm[best]);
      }
    }

    auto v = cols.row(j).subspan(j);
    const double sigma = std::sqrt(simd::dot(v, v));
    if (sigma == 0.0) {
      q.rdiag[j] = 0.0;
      q.tau[j] = 0.0;
      continue;
    }
    const double alpha = v[0];
    const double beta = alpha >= 0.0 ? -sigma : sigma;
    v[0] = alpha - beta;
    const double vtv = simd::dot(v, v);
    const double tau = 2.0 / vtv;
    q.tau[j] = tau;
    q.rdiag[j] = beta;

    for (std::size_t k = j + 1; k < n; ++k) {
      auto col = cols.row(k).subspan(j);
      const double s = simd::dot(v, col);
      simd::axpy(-tau * s, v, col);
    }
    if (rhs != nullptr) {
      for (std::size_t r = 0; r < rhs->rows(); ++r) {
        auto col = rhs->row(r).subspan(j);
        const double s = simd::dot(v, col);
        simd::axpy(-tau * s, v, col);
      }
    }
  }
  return q;
}

}  // namespace

LeastSquaresSolution solve_least_squares_rows(const Matrix& a_rows, const Matrix& c_rows,
                                              double rank_tol) {
  if (a_rows.cols() != c_rows.cols()) {
    throw std::invalid_argument("solve_least_squares_rows: design has " +
                                std::to_string(a_rows.cols()) + " samples, targets have " +
                                std::to_string(c_rows.cols()));
  }
  const std::size_t n = a_rows.rows();
  const std::size_t nrhs = c_rows.rows();

  Matrix cols = a_rows;
  Matrix rhs = c_rows;
  Reflectors q = householder_qr(cols, /*pivot=*/true, &rhs);

  std::size_t rank = 0;
  const double lead = q.steps > 0 ? std::abs(q.rdiag[0]) : 0.0;
  while (rank < q.steps && lead > 0.0 && std::abs(q.rdiag[rank]) > rank_tol * lead) ++rank;

  LeastSquaresSolution out;
  out.rank = rank;
  out.rank_deficient = rank < n;
  out.x = Matrix(nrhs, n);

  auto r_entry = [&](std::size_t i, std::size_t k) { return i == k ? q.rdiag[i] : cols(k, i); };

  if (!out.rank_deficient) {
    std::vector<double> y(n);
    for (std::size_t r = 0; r < nrhs; ++r) {
      for (std::size_t ii = n; ii-- > 0;) {
        double acc = rhs(r, ii);
        for (std::size_t k = ii + 1; k < n; ++k) acc -= r_entry(ii, k) * y[k];
        y[ii] = acc / q.rdiag[ii];
      }
      for (std::size_t i = 0; i < n; ++i) out.x(r, q.perm[i]) = y[i];
    }
    return out;
  }

  // Minimum-norm path: R1 = [R11 R12] (rank x n). Factor R1^T = Q2 [S; 0],
  // so R1 = [S^T 0] Q2^T; solve S^T w = z then y = Q2 [w; 0].
  Matrix r1t_cols(rank, n, 0.0);
  for (std::size_t i = 0; i < rank; ++i)
    for (std::size_t k = i; k < n; ++k) r1t_cols(i, k) = r_entry(i, k);
  Reflectors q2 = householder_qr(r1t_cols, /*pivot=*/false, nullptr);

  std::vector<double> y(n);
  for (std::size_t r = 0; r < nrhs; ++r) {
    std::fill(y.begin(), y.end(), 0.0);
    // S(i, k) for i <= k is r1t_cols(k, i) (i < k) or q2.rdiag[i]; S^T is lower.
    for (std::size_t i = 0; i < rank; ++i) {
      double acc = rhs(r, i);
      for (std::size_t k = 0; k < i; ++k) acc -= r1t_cols(i, k) * y[k];
      y[i] = acc / q2.rdiag[i];
    }
    for (std::size_t i = q2.steps; i-- > 0;) {
      if (q2.tau[i] == 0.0) continue;
      auto v = r1t_cols.row(i).subspan(i);
      auto seg = std::span<double>(y).subspan(i);
      const double s = simd::dot(v, seg);
      simd::axpy(-q2.tau[i] * s, v, seg);
    }
    for (std::size_t i = 0; i < n; ++i) out.x(r, q.perm[i]) = y[i];
  }
  return out;
}

}  // namespace pinvar
