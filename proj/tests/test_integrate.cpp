#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pinvar/integrate.hpp"

using namespace pinvar;

namespace {

OdeSystem constant_field(std::vector<double> c) {
  const std::size_t d = c.size();
  return OdeSystem::custom("const", d, std::vector<double>(d, 0.0),
                           [c](std::span<const double>, std::span<double> dx) {
                             for (std::size_t i = 0; i < c.size(); ++i) dx[i] = c[i];
                           });
}

double one_step_error(double h) {
  auto sys = OdeSystem::spring();
  auto x = rk4_step(sys, exact_spring(0.0), h);
  auto e = exact_spring(h);
  return std::hypot(x[0] - e[0], x[1] - e[1]);
}

}  // namespace

TEST(Rk4, ZeroFieldLeavesStateUnchanged) {
  auto sys = constant_field({0.0, 0.0});
  std::vector<double> x{1.5, -2.0};
  EXPECT_EQ(rk4_step(sys, x, 0.3), x);
}

TEST(Rk4, ConstantFieldIsExact) {
  auto sys = constant_field({2.0, -1.0});
  auto x = rk4_step(sys, std::vector<double>{1.0, 1.0}, 0.25);
  EXPECT_DOUBLE_EQ(x[0], 1.5);
  EXPECT_DOUBLE_EQ(x[1], 0.75);
}

TEST(Rk4, SpringStepMatchesExactSolution) {
  auto sys = OdeSystem::spring();
  auto x = rk4_step(sys, std::vector<double>{0.0, std::sqrt(3.0)}, 0.01);
  auto e = exact_spring(0.01);
  EXPECT_LE(std::abs(x[0] - e[0]), 1e-9);
  EXPECT_LE(std::abs(x[1] - e[1]), 1e-9);
}

TEST(Rk4, FifthOrderLocalError) {
  // Local error is O(h^5), so halving h shrinks it ~32x; over a fixed span
  // (global error) the factor is ~16. Check the global factor.
  auto global_error = [](double h) {
    auto sys = OdeSystem::spring();
    std::vector<double> x = exact_spring(0.0);
    const int n = static_cast<int>(std::lround(0.4 / h));
    for (int i = 0; i < n; ++i) x = rk4_step(sys, x, h);
    auto e = exact_spring(0.4);
    return std::hypot(x[0] - e[0], x[1] - e[1]);
  };
  const double e1 = global_error(0.02), e2 = global_error(0.01), e3 = global_error(0.005);
  EXPECT_GE(e1 / e2, 14.0);
  EXPECT_LE(e1 / e2, 18.0);
  EXPECT_GE(e2 / e3, 14.0);
  EXPECT_LE(e2 / e3, 18.0);
  // One-step errors shrink at least as fast.
  EXPECT_GE(one_step_error(0.02) / one_step_error(0.01), 14.0);
}

TEST(Rk4, OverflowIsReported) {
  auto sys = OdeSystem::custom("blowup", 1, {1.0}, [](std::span<const double> x, std::span<double> dx) {
    dx[0] = x[0] * x[0];
  });
  EXPECT_THROW(rk4_step(sys, std::vector<double>{1e200}, 1.0), IntegrationOverflow);
  try {
    generate_dataset(sys, std::vector<double>{1.0}, 0.1, 3, 100);
    FAIL() << "expected overflow";
  } catch (const IntegrationOverflow& e) {
    EXPECT_GT(e.step(), 0u);
    EXPECT_NE(std::string(e.what()).find(std::to_string(e.step())), std::string::npos);
  }
}

TEST(GenerateDataset, LorenzShapeAndStep) {
  auto sys = OdeSystem::lorenz();
  auto ds = generate_dataset(sys, sys.x0(), 1e-5, 100, 50);
  EXPECT_EQ(ds.size(), 50u);
  EXPECT_EQ(ds.dim(), 3u);
  EXPECT_DOUBLE_EQ(ds.h, 1e-3);
  EXPECT_EQ(ds.system_name, "lorenz");
  auto x1 = ds.at(1);
  EXPECT_EQ(std::vector<double>(x1.begin(), x1.end()), sys.x0());
}

TEST(GenerateDataset, StoredStepIsFineStepTimesDownsample) {
  auto sys = OdeSystem::lotka_volterra();
  EXPECT_DOUBLE_EQ(generate_dataset(sys, sys.x0(), 1e-5, 1000, 2).h, 1e-2);
  EXPECT_DOUBLE_EQ(generate_dataset(sys, sys.x0(), 1e-5, 10000, 2).h, 1e-1);
}

TEST(GenerateDataset, DownsampleOneIsSingleSteps) {
  auto sys = OdeSystem::spring();
  auto ds = generate_dataset(sys, sys.x0(), 0.01, 1, 2);
  auto step = rk4_step(sys, sys.x0(), 0.01);
  auto x2 = ds.at(2);
  EXPECT_EQ(std::vector<double>(x2.begin(), x2.end()), step);
}

TEST(GenerateDataset, DownsamplingIsConsistent) {
  auto sys = OdeSystem::lorenz();
  const std::size_t m = 7, n = 20;
  auto coarse = generate_dataset(sys, sys.x0(), 1e-3, m, n);
  auto fine = generate_dataset(sys, sys.x0(), 1e-3, 1, (n - 1) * m + 1);
  for (std::size_t k = 1; k <= n; ++k) {
    auto a = coarse.at(k);
    auto b = fine.at((k - 1) * m + 1);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i], b[i]) << "k=" << k;
  }
}

TEST(GenerateDataset, RejectsBadArguments) {
  auto sys = OdeSystem::spring();
  EXPECT_THROW(generate_dataset(sys, sys.x0(), 0.01, 0, 10), std::invalid_argument);
  EXPECT_THROW(generate_dataset(sys, sys.x0(), 0.01, 1, 0), std::invalid_argument);
  EXPECT_THROW(generate_dataset(sys, sys.x0(), -0.01, 1, 10), std::invalid_argument);
  EXPECT_THROW(generate_dataset(sys, std::vector<double>{1.0}, 0.01, 1, 10), std::invalid_argument);
}

TEST(ExactSpringDataset, SinglePoint) {
  auto ds = generate_exact_spring_dataset(3.0, 0.01, 1);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.at(1)[0], 0.0);
  EXPECT_DOUBLE_EQ(ds.at(1)[1], std::sqrt(3.0));
}

TEST(ExactSpringDataset, RowsMatchClosedForm) {
  auto ds = generate_exact_spring_dataset(3.0, 0.01, 3);
  for (std::size_t k = 1; k <= 3; ++k) {
    auto e = exact_spring(0.01 * static_cast<double>(k - 1));
    EXPECT_EQ(ds.at(k)[0], e[0]);
    EXPECT_EQ(ds.at(k)[1], e[1]);
  }
}

TEST(ExactSpringDataset, StaysWithinAmplitudes) {
  auto ds = generate_exact_spring_dataset(3.0, 1e-2, 20000);
  for (std::size_t k = 1; k <= ds.size(); ++k) {
    EXPECT_LE(std::abs(ds.at(k)[0]), 1.0);
    EXPECT_LE(std::abs(ds.at(k)[1]), std::sqrt(3.0) * (1 + 1e-15));
  }
}

TEST(Dataset, TimesUseMultiplication) {
  auto ds = generate_exact_spring_dataset(3.0, 0.1, 5, 2.0);
  EXPECT_EQ(ds.time_at(1), 2.0);
  EXPECT_EQ(ds.time_at(5), 2.0 + 4.0 * 0.1);
  EXPECT_THROW(ds.at(0), std::out_of_range);
  EXPECT_THROW(ds.at(6), std::out_of_range);
}
