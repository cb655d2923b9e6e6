#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pinvar/linalg.hpp"
#include "pinvar/ode_systems.hpp"

namespace pinvar {

// Uniformly sampled trajectory. Point index k (1-based) sits at time
// t0 + (k - 1) * h; times are never accumulated by repeated addition.
struct Dataset {
  std::string system_name;
  double t0 = 0.0;
  double h = 0.0;
  Matrix points;  // N x d

  // Provenance written into the CSV metadata block.
  std::string generator;
  std::vector<std::pair<std::string, double>> generator_params;

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
  double time_at(std::size_t index) const { return t0 + static_cast<double>(index - 1) * h; }
  // 1-based access.
  std::span<const double> at(std::size_t index) const;
};

// Raised when integration produces a non-finite state.
class IntegrationOverflow : public std::overflow_error {
 public:
  IntegrationOverflow(std::size_t step, const std::string& what)
      : std::overflow_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

// One classical four-stage Runge-Kutta step.
std::vector<double> rk4_step(const OdeSystem& system, std::span<const double> x, double h_fine);

// Integrates with fixed step h_fine and keeps every `downsample`-th state, so
// the stored step is h_fine * downsample. points[1] = x0.
Dataset generate_dataset(const OdeSystem& system, std::span<const double> x0, double h_fine,
                         std::size_t downsample, std::size_t n_points);

// Samples the closed-form spring solution on t0 + (j - 1) h.
Dataset generate_exact_spring_dataset(double k, double h, std::size_t n_points, double t0 = 0.0);

}  // namespace pinvar
