#include <gtest/gtest.h>

#include <random>

#include "pinvar/linalg.hpp"
#include "test_util.hpp"

using namespace pinvar;
using pinvar::testing::random_matrix;
using pinvar::testing::rel_diff;
using pinvar::testing::svd_oracle;

TEST(Matrix, BasicsAndTranspose) {
  Matrix m(2, 3);
  m(0, 1) = 4.0;
  m(1, 2) = -1.0;
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  Matrix t = m.transposed();
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t(1, 0), 4.0);
  EXPECT_EQ(t(2, 1), -1.0);
  EXPECT_EQ(t.transposed(), m);
  EXPECT_DOUBLE_EQ(frobenius_norm(m), std::sqrt(17.0));
}

TEST(Matrix, AppendRowChecksWidth) {
  Matrix m;
  std::vector<double> r{1, 2};
  m.append_row(r);
  m.append_row(r);
  EXPECT_EQ(m.rows(), 2u);
  std::vector<double> bad{1, 2, 3};
  EXPECT_THROW(m.append_row(bad), std::invalid_argument);
}

TEST(Matrix, MultiplyAndGemv) {
  std::mt19937_64 rng(1);
  auto a = random_matrix(rng, 4, 5);
  auto b = random_matrix(rng, 5, 3);
  Matrix c = multiply(a, b);
  Eigen::MatrixXd ce = pinvar::testing::to_eigen(a) * pinvar::testing::to_eigen(b);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(c(i, j), ce(i, j), 1e-14);
  std::vector<double> x{1, 2, 3, 4, 5}, y(4);
  gemv(a, x, y);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * x[j];
    EXPECT_NEAR(y[i], s, 1e-14);
  }
  EXPECT_THROW(multiply(a, a), std::invalid_argument);
}

TEST(LeastSquares, SquareSystemSolvesExactly) {
  std::mt19937_64 rng(2);
  auto a = random_matrix(rng, 6, 6);
  auto xs = random_matrix(rng, 2, 6);
  Matrix c = multiply(xs, a);
  auto sol = solve_least_squares_rows(a, c);
  EXPECT_FALSE(sol.rank_deficient);
  EXPECT_EQ(sol.rank, 6u);
  EXPECT_LT(rel_diff(sol.x, xs), 1e-12);
}

TEST(LeastSquares, OverdeterminedMatchesSvdOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const std::size_t k = n + 3 + trial * 2;
    auto a = random_matrix(rng, n, k);
    auto c = random_matrix(rng, 3, k);
    auto sol = solve_least_squares_rows(a, c);
    EXPECT_LT(rel_diff(sol.x, svd_oracle(a, c)), 1e-10) << "trial " << trial;
  }
}

TEST(LeastSquares, RankDeficientGivesMinimumNorm) {
  std::mt19937_64 rng(4);
  // Rows 3 and 4 repeat rows 0 and 1 combined, so the rank is 3.
  auto a = random_matrix(rng, 5, 20);
  for (std::size_t j = 0; j < 20; ++j) {
    a(3, j) = a(0, j) + a(1, j);
    a(4, j) = 2.0 * a(1, j) - a(2, j);
  }
  auto c = random_matrix(rng, 2, 20);
  auto sol = solve_least_squares_rows(a, c);
  EXPECT_TRUE(sol.rank_deficient);
  EXPECT_EQ(sol.rank, 3u);
  EXPECT_LT(rel_diff(sol.x, svd_oracle(a, c)), 1e-9);
}

TEST(LeastSquares, ZeroDesignGivesZero) {
  Matrix a(3, 5, 0.0);
  Matrix c(1, 5, 1.0);
  auto sol = solve_least_squares_rows(a, c);
  EXPECT_TRUE(sol.rank_deficient);
  EXPECT_EQ(sol.rank, 0u);
  for (double v : sol.x.flat()) EXPECT_EQ(v, 0.0);
}

TEST(LeastSquares, UnderdeterminedGivesMinimumNorm) {
  std::mt19937_64 rng(5);
  auto a = random_matrix(rng, 8, 5);  // 8 unknowns, 5 samples
  auto c = random_matrix(rng, 2, 5);
  auto sol = solve_least_squares_rows(a, c);
  EXPECT_TRUE(sol.rank_deficient);
  EXPECT_EQ(sol.rank, 5u);
  EXPECT_LT(rel_diff(sol.x, svd_oracle(a, c)), 1e-10);
}

TEST(LeastSquares, BadlyScaledColumnsStayAccurate) {
  // Ridge-stacked systems with r = 1e-12 against entries ~1e3: squaring the
  // conditioning through a Gram matrix would lose everything here.
  std::mt19937_64 rng(6);
  const std::size_t m = 10, t = 60;
  auto h = random_matrix(rng, m, t, -1e3, 1e3);
  for (std::size_t j = 0; j < t; ++j) h(m - 1, j) = h(0, j) + 1e-7 * h(1, j);
  Matrix a(m, t + m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < t; ++j) a(i, j) = h(i, j);
    a(i, t + i) = 1e-6;
  }
  auto c = random_matrix(rng, 2, t + m);
  for (std::size_t j = t; j < t + m; ++j) c(0, j) = c(1, j) = 0.0;
  auto sol = solve_least_squares_rows(a, c);
  EXPECT_FALSE(sol.rank_deficient);
  // Condition number ~6e9 with a large residual: the minimiser itself is
  // ill-determined, so compare attained objectives.
  auto objective = [&](const Matrix& x) {
    auto r = multiply(x, a);
    double acc = 0;
    for (std::size_t i = 0; i < r.flat().size(); ++i) acc += (r.flat()[i] - c.flat()[i]) * (r.flat()[i] - c.flat()[i]);
    return acc;
  };
  const double ours = objective(sol.x), oracle = objective(svd_oracle(a, c, 1e-15));
  EXPECT_LE(ours, oracle * (1 + 1e-10));
  // A Gram-matrix solve in double loses the ridge direction; QR keeps the
  // objective close to the oracle's.
  EXPECT_GE(ours, oracle * (1 - 1e-10));
}

TEST(LeastSquares, ShapeMismatchThrows) {
  Matrix a(3, 5), c(2, 4);
  EXPECT_THROW(solve_least_squares_rows(a, c), std::invalid_argument);
}
