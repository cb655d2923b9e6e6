#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pinvar/nvar.hpp"
#include "test_util.hpp"

using namespace pinvar;
using pinvar::testing::plain_monomial;
using pinvar::testing::random_matrix;
using pinvar::testing::random_vector;

namespace {

NvarModel scalar_model(double w0, double w1, double w2, double h = 0.1) {
  NvarModel m;
  m.spec = plain_monomial(1, 1, 1);
  m.W = Matrix(1, 3);
  m.W(0, 0) = w0;
  m.W(0, 1) = w1;
  m.W(0, 2) = w2;
  m.h = h;
  return m;
}

NvarModel random_model(std::mt19937_64& rng, Basis b, EmbeddingSpec e, double scale) {
  NvarModel m;
  std::vector<double> radii(e.d, 1.5);
  m.spec = make_state_function(b, e, radii);
  m.W = random_matrix(rng, e.d, m.spec.m(), -scale, scale);
  m.h = 0.01;
  return m;
}

}  // namespace

TEST(PredictNext, ZeroWeightsKeepState) {
  std::mt19937_64 rng(1);
  auto m = random_model(rng, Basis::h2, {3, 2, 2}, 0.0);
  std::vector<double> y{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  EXPECT_EQ(predict_next(m, y), (std::vector<double>{0.1, 0.2}));
}

TEST(PredictNext, ConstantDrift) {
  const double h = 0.25;
  auto m = scalar_model(h, 0.0, 0.0);
  EXPECT_EQ(predict_next(m, std::vector<double>{1.5}), (std::vector<double>{1.75}));
}

TEST(PredictNext, DimensionMismatch) {
  auto m = scalar_model(0, 0, 0);
  EXPECT_THROW(predict_next(m, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  m.W = Matrix(1, 4);
  EXPECT_THROW(predict_next(m, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(DerivativeUpdate, ZeroWeightsReturnF) {
  std::mt19937_64 rng(2);
  auto m = random_model(rng, Basis::h1, {2, 1, 3}, 0.0);
  auto y = random_vector(rng, 6);
  auto f = random_vector(rng, 6);
  EXPECT_EQ(derivative_update(m, y, f), (std::vector<double>{f[0], f[1], f[2]}));
}

TEST(DerivativeUpdate, ScalarChainRule) {
  const double w0 = 0.3, w1 = -0.7, w2 = 1.25, u = 0.4;
  auto m = scalar_model(w0, w1, w2);
  auto out = derivative_update(m, std::vector<double>{2.0}, std::vector<double>{u});
  EXPECT_DOUBLE_EQ(out[0], u + (w1 + 4 * w2) * u);
}

TEST(DerivativeUpdate, ConstantTrajectoryFit) {
  // Constant data gives Z = 0; the fitted W is zero and f passes through.
  NvarModel m;
  m.spec = plain_monomial(2, 1, 2);
  m.W = Matrix(2, m.spec.m());
  std::vector<double> x{0.5, -1.0};
  auto sys = OdeSystem::spring();
  auto fx = sys.eval(x);
  std::vector<double> y{x[0], x[1], x[0], x[1]};
  std::vector<double> fs{fx[0], fx[1], fx[0], fx[1]};
  EXPECT_EQ(derivative_update(m, y, fs), fx);
}

TEST(DerivativeUpdate, DimensionMismatch) {
  auto m = scalar_model(0, 0, 0);
  EXPECT_THROW(derivative_update(m, std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
               std::invalid_argument);
}

TEST(DerivativeUpdate, ChainRuleAlongPath) {
  std::mt19937_64 rng(7);
  for (auto b : {Basis::h1, Basis::h2, Basis::h3}) {
    auto m = random_model(rng, b, {3, 1, 2}, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
      auto y0 = pinvar::testing::interior_embedding(rng, m.spec, std::vector<double>(2, 1.5));
      auto v = random_vector(rng, y0.size());
      // Straight path y(t) = y0 + t v keeps every coordinate inside its
      // smooth piece for |t| <= 1e-5.
      auto wh = [&](double t) {
        std::vector<double> y(y0);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += t * v[i];
        auto next = predict_next(m, y);
        for (std::size_t i = 0; i < next.size(); ++i) next[i] -= y[i];
        return next;
      };
      const double dt = 1e-5;
      auto plus = wh(dt), minus = wh(-dt);
      auto upd = derivative_update(m, y0, v);
      for (std::size_t i = 0; i < 2; ++i) {
        const double fd = (plus[i] - minus[i]) / (2 * dt);
        const double analytic = upd[i] - v[i];
        EXPECT_NEAR(analytic, fd, 1e-5 * std::max(1.0, std::abs(fd))) << basis_name(b);
      }
    }
  }
}

TEST(PermutationEquivariance, ColumnPermutationPreservesOutputs) {
  std::mt19937_64 rng(17);
  auto m = random_model(rng, Basis::h2, {2, 1, 2}, 0.3);
  auto y = pinvar::testing::interior_embedding(rng, m.spec, std::vector<double>(2, 1.5));
  auto f = random_vector(rng, y.size());
  const auto h = eval_state(m.spec, y);
  const auto g = eval_gradient(m.spec, y);
  std::vector<std::size_t> perm(m.m());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  // Reference: W h and W (dh/dy) f in the natural order; permuted: with
  // both W's columns and the feature rows reordered.
  for (std::size_t i = 0; i < 2; ++i) {
    double natural = 0, permuted = 0, dnat = 0, dperm = 0;
    for (std::size_t q = 0; q < m.m(); ++q) {
      natural += m.W(i, q) * h[q];
      permuted += m.W(i, perm[q]) * h[perm[q]];
      double gq = 0, gp = 0;
      for (std::size_t j = 0; j < y.size(); ++j) {
        gq += g(q, j) * f[j];
        gp += g(perm[q], j) * f[j];
      }
      dnat += m.W(i, q) * gq;
      dperm += m.W(i, perm[q]) * gp;
    }
    const double next = predict_next(m, y)[i] - y[i];
    const double dnext = derivative_update(m, y, f)[i] - f[i];
    EXPECT_NEAR(next, natural, 1e-13);
    EXPECT_NEAR(permuted, natural, 1e-13);
    EXPECT_NEAR(dnext, dnat, 1e-12);
    EXPECT_NEAR(dperm, dnat, 1e-12);
  }
}

TEST(RecursivePredict, ZeroWeightsHoldLastSeedPoint) {
  std::mt19937_64 rng(3);
  auto m = random_model(rng, Basis::h3, {3, 2, 2}, 0.0);
  auto seed = random_matrix(rng, 5, 2);
  auto r = recursive_predict(m, seed, 20);
  ASSERT_EQ(r.trajectory.rows(), 20u);
  EXPECT_FALSE(r.diverged_at);
  for (std::size_t j = 0; j < 20; ++j) {
    EXPECT_EQ(r.trajectory(j, 0), seed(4, 0));
    EXPECT_EQ(r.trajectory(j, 1), seed(4, 1));
  }
}

TEST(RecursivePredict, SingleStepIsPredictNext) {
  std::mt19937_64 rng(4);
  auto m = random_model(rng, Basis::h1, {3, 2, 3}, 0.1);
  auto seed = random_matrix(rng, 5, 3);
  auto r = recursive_predict(m, seed, 1);
  auto y = build_embedding(seed, 5, m.spec.embedding);
  auto next = predict_next(m, y);
  ASSERT_EQ(r.trajectory.rows(), 1u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(r.trajectory(0, i), next[i]);
}

TEST(RecursivePredict, EmbeddingMixesSeedAndPredictions) {
  std::mt19937_64 rng(5);
  auto m = random_model(rng, Basis::h2, {3, 2, 2}, 0.05);
  auto seed = random_matrix(rng, 5, 2);
  auto r = recursive_predict(m, seed, 12);
  Matrix all = seed;
  for (std::size_t j = 0; j < r.trajectory.rows(); ++j) {
    auto y = build_embedding(all, all.rows(), m.spec.embedding);
    auto next = predict_next(m, y);
    EXPECT_EQ(next[0], r.trajectory(j, 0));
    EXPECT_EQ(next[1], r.trajectory(j, 1));
    all.append_row(next);
  }
}

TEST(RecursivePredict, StopsAtDivergence) {
  // A drift of 1e308 per step overflows on the second step.
  auto m = scalar_model(1e308, 0.0, 0.0);
  Matrix seed(1, 1);
  seed(0, 0) = 1.0;
  auto r = recursive_predict(m, seed, 100);
  ASSERT_TRUE(r.diverged_at.has_value());
  EXPECT_EQ(*r.diverged_at, 2u);
  EXPECT_EQ(r.trajectory.rows(), 1u);
  for (double v : r.trajectory.flat()) EXPECT_TRUE(std::isfinite(v));
}

TEST(RecursivePredict, Deterministic) {
  std::mt19937_64 rng(6);
  auto m = random_model(rng, Basis::h1, {10, 1, 3}, 0.01);
  auto seed = random_matrix(rng, 10, 3);
  auto a = recursive_predict(m, seed, 500);
  auto b = recursive_predict(m, seed, 500);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.diverged_at, b.diverged_at);
}

TEST(RecursivePredict, SeedShapeErrors) {
  std::mt19937_64 rng(6);
  auto m = random_model(rng, Basis::h1, {3, 1, 2}, 0.01);
  EXPECT_THROW(recursive_predict(m, Matrix(2, 2), 5), std::invalid_argument);
  EXPECT_THROW(recursive_predict(m, Matrix(3, 3), 5), std::invalid_argument);
}

TEST(StackRhs, FollowsEmbeddingLayout) {
  auto sys = OdeSystem::lorenz();
  std::mt19937_64 rng(9);
  auto window = random_matrix(rng, 7, 3, -5, 5);
  EmbeddingSpec e{3, 3, 3};
  std::vector<double> out(9);
  stack_rhs_into(sys, window, 7, e, out);
  for (std::size_t lag = 0; lag < 3; ++lag) {
    auto row = window.row(6 - 3 * lag);
    auto f = sys.eval(std::vector<double>(row.begin(), row.end()));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(out[lag * 3 + i], f[i]);
  }
  EXPECT_THROW(stack_rhs_into(sys, window, 6, e, out), std::out_of_range);
}
