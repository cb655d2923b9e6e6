#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pinvar/metrics.hpp"
#include "test_util.hpp"

using namespace pinvar;
using namespace pinvar::testing;

namespace {

Matrix column(std::vector<double> v) {
  Matrix m(v.size(), 1);
  for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
  return m;
}

std::size_t brute_valid_time(const Matrix& pred, const Matrix& ref, double M) {
  for (std::size_t j = 0; j < ref.rows(); ++j) {
    double e = 0, n = 0;
    for (std::size_t i = 0; i < ref.cols(); ++i) {
      e += (pred(j, i) - ref(j, i)) * (pred(j, i) - ref(j, i));
      n += ref(j, i) * ref(j, i);
    }
    if ((n > 0 ? e / n : e) >= M) return j + 1;
  }
  return ref.rows();
}

OdeSystem cubic_field() {
  return OdeSystem::custom("cubic", 1, {0.5}, [](std::span<const double> x, std::span<double> dx) {
    dx[0] = x[0] - x[0] * x[0] * x[0];
  });
}

NvarModel scalar_model(double w0, double w1, double w2) {
  NvarModel m;
  m.spec = plain_monomial(1, 1, 1);
  m.W = Matrix(1, 3);
  m.W(0, 0) = w0;
  m.W(0, 1) = w1;
  m.W(0, 2) = w2;
  return m;
}

}  // namespace

TEST(ValidTime, IdenticalTrajectoriesReachTheEnd) {
  std::mt19937_64 rng(1);
  auto ref = random_matrix(rng, 50, 3);
  EXPECT_EQ(valid_time(ref, ref, 1e-4), 50u);
}

TEST(ValidTime, WorkedExample) {
  EXPECT_EQ(valid_time(column({1, 1.001, 2}), column({1, 1, 1}), 1e-4), 3u);
}

TEST(ValidTime, BreachAtFirstStep) {
  EXPECT_EQ(valid_time(column({2, 1}), column({1, 1}), 1e-4), 1u);
}

TEST(ValidTime, ThresholdIsInclusive) {
  // Relative squared error of exactly 0.25 breaches M = 0.25.
  EXPECT_EQ(valid_time(column({1, 1.5, 1}), column({1, 1, 1}), 0.25), 2u);
  EXPECT_EQ(valid_time(column({1, 1.5, 1}), column({1, 1, 1}), 0.2500001), 3u);
}

TEST(ValidTime, ZeroReferenceUsesAbsoluteError) {
  EXPECT_EQ(valid_time(column({1e-3, 0.1}), column({0, 0}), 1e-4), 2u);
  EXPECT_EQ(valid_time(column({1e-3, 1e-3}), column({0, 0}), 1e-4), 2u);
  EXPECT_EQ(valid_time(column({1e-3, 1e-2}), column({0, 0}), 1e-4), 2u);
  EXPECT_EQ(valid_time(column({0, 0}), column({0, 0}), 1e-4), 2u);
}

TEST(ValidTime, NonFiniteIsABreach) {
  EXPECT_EQ(valid_time(column({1, NAN, 1}), column({1, 1, 1}), 1e-4), 2u);
  EXPECT_EQ(valid_time(column({1, INFINITY, 1}), column({1, 1, 1}), 1e-4), 2u);
}

TEST(ValidTime, Errors) {
  EXPECT_THROW(valid_time(column({1, 2}), column({1}), 1e-4), std::invalid_argument);
  EXPECT_THROW(valid_time(column({1}), column({1}), 0.0), std::invalid_argument);
}

TEST(ValidTime, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> len(1, 1000);
  std::uniform_real_distribution<double> noise(0, 1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = len(rng);
    auto ref = random_matrix(rng, n, 3);
    auto pred = ref;
    // Error growing with j so breaches land anywhere.
    const double growth = std::pow(10.0, -6 + 5 * noise(rng));
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < 3; ++i) pred(j, i) += growth * static_cast<double>(j) * (noise(rng) - 0.5) * 1e-2;
    if (t % 10 == 0) ref(n / 2, 0) = ref(n / 2, 1) = ref(n / 2, 2) = 0.0;
    EXPECT_EQ(valid_time(pred, ref, 1e-4), brute_valid_time(pred, ref, 1e-4));
  }
}

TEST(ValidTime, MonotoneInThreshold) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    auto ref = random_matrix(rng, 200, 2);
    auto pred = ref;
    for (std::size_t j = 0; j < 200; ++j) pred(j, 0) += 1e-4 * static_cast<double>(j) * static_cast<double>(t % 7);
    std::size_t prev = 0;
    for (double M : {1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
      const auto v = valid_time(pred, ref, M);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
}

TEST(Energy, ZeroWeightsGiveZero) {
  std::mt19937_64 rng(4);
  NvarModel m;
  m.spec = make_state_function(Basis::h2, {3, 1, 3}, std::vector<double>{20, 30, 50});
  m.W = Matrix(3, m.spec.m());
  auto sys = OdeSystem::lorenz();
  auto seed = random_matrix(rng, 3, 3, -10, 10);
  auto r = recursive_predict(m, seed, 100);
  auto e = discrete_energy(m, sys, r.trajectory, seed, 1e-3);
  EXPECT_EQ(e.energy, 0.0);
  EXPECT_EQ(e.steps, 100u);
}

TEST(Energy, SingleStepByHand) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  auto sys = cubic_field();
  auto f = [](double x) { return x - x * x * x; };
  for (int t = 0; t < 10; ++t) {
    const double w0 = u(rng), w1 = u(rng), w2 = u(rng), x0 = u(rng), x1 = u(rng), h = 0.01 * (t + 1);
    auto m = scalar_model(w0, w1, w2);
    const double defect = f(x1) - f(x0) - (w1 + 2 * w2 * x0) * f(x0);
    auto e = discrete_energy(m, sys, column({x1}), column({x0}), h);
    EXPECT_NEAR(e.energy, 0.5 * h * defect * defect, 1e-15 * (1 + defect * defect));
    EXPECT_EQ(e.steps, 1u);
  }
}

TEST(Energy, UsesLaggedEmbedding) {
  // p = 2: the second summand's embedding is [x_1, x_0].
  NvarModel m;
  m.spec = plain_monomial(2, 1, 1);
  m.W = Matrix(1, 6);
  m.W(0, 2) = 0.5;  // linear in the lagged coordinate
  auto sys = cubic_field();
  auto f = [](double x) { return x - x * x * x; };
  const double xm1 = 0.1, x0 = 0.2, x1 = 0.3, x2 = 0.25, h = 0.1;
  Matrix seed = column({xm1, x0});
  auto e = discrete_energy(m, sys, column({x1, x2}), seed, h);
  const double d1 = f(x1) - f(x0) - 0.5 * f(xm1);
  const double d2 = f(x2) - f(x1) - 0.5 * f(x0);
  EXPECT_NEAR(e.energy, 0.5 * h * (d1 * d1 + d2 * d2), 1e-16);
}

TEST(Energy, LinearInStep) {
  std::mt19937_64 rng(6);
  NvarModel m;
  m.spec = make_state_function(Basis::h1, {2, 1, 2}, std::vector<double>{2, 3});
  m.W = random_matrix(rng, 2, m.spec.m(), -1e-3, 1e-3);
  auto sys = OdeSystem::spring();
  auto seed = random_matrix(rng, 2, 2);
  auto pred = recursive_predict(m, seed, 300).trajectory;
  auto a = discrete_energy(m, sys, pred, seed, 0.01);
  auto b = discrete_energy(m, sys, pred, seed, 0.02);
  EXPECT_EQ(b.energy, 2 * a.energy);
}

TEST(Energy, StreamingEqualsBatch) {
  std::mt19937_64 rng(7);
  NvarModel m;
  m.spec = make_state_function(Basis::h3, {3, 2, 3}, std::vector<double>{20, 30, 50});
  m.W = random_matrix(rng, 3, m.spec.m(), -1e-2, 1e-2);
  auto sys = OdeSystem::lorenz();
  auto seed = random_matrix(rng, 5, 3, -10, 10);
  auto pred = recursive_predict(m, seed, 400).trajectory;
  EnergyAccumulator acc(m, sys, seed, 1e-3);
  for (std::size_t j = 0; j < pred.rows(); ++j) acc.push(pred.row(j));
  auto batch = discrete_energy(m, sys, pred, seed, 1e-3);
  EXPECT_EQ(acc.result().energy, batch.energy);
  EXPECT_EQ(acc.result().steps, batch.steps);
}

TEST(Energy, OverflowingDefectIsInfinite) {
  auto m = scalar_model(0, 0, 0);
  auto e = discrete_energy(m, cubic_field(), column({1e200, 1.0}), column({0.5}), 0.1);
  EXPECT_TRUE(std::isinf(e.energy));
  EXPECT_EQ(e.steps, 1u);
}

TEST(Energy, Errors) {
  auto m = scalar_model(0, 0, 0);
  EXPECT_THROW(discrete_energy(m, cubic_field(), column({1}), column({0.5}), 0.0), std::invalid_argument);
  EXPECT_THROW(discrete_energy(m, OdeSystem::spring(), column({1}), column({0.5}), 0.1), std::invalid_argument);
  EXPECT_THROW(discrete_energy(m, cubic_field(), column({1}), column({0.5, 0.2}), 0.1), std::invalid_argument);
}
