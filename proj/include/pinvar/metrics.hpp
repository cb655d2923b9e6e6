#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pinvar/linalg.hpp"
#include "pinvar/nvar.hpp"
#include "pinvar/ode_systems.hpp"

namespace pinvar {

struct MetricReport {
  std::size_t valid_time = 0;
  double energy = 0.0;
  std::size_t steps_evaluated = 0;
  std::optional<std::size_t> diverged_at;
};

// Smallest 1-based j with ||pred_j - ref_j||^2 / ||ref_j||^2 >= M, or the
// trajectory length if no step breaches. A step with ||ref_j|| = 0 compares
// the absolute squared error against M.
std::size_t valid_time(const Matrix& pred, const Matrix& ref, double threshold);

struct EnergyResult {
  double energy = 0.0;
  std::size_t steps = 0;  // number of summands accumulated
};

// Streams the right-endpoint quadrature
//   E_h = (h/2) sum_k || f(x_{k+1}) - f(x_k) - W (dh/dy)(y_k) F(y_k) ||^2
// along a model's own rollout. Seed points fill the early lags.
class EnergyAccumulator {
 public:
  EnergyAccumulator(const NvarModel& model, const OdeSystem& system, const Matrix& seed, double h);

  // Appends prediction x_{k+1} and adds summand k. A non-finite summand
  // makes the energy +inf and ends accumulation (returns false).
  bool push(std::span<const double> next);

  EnergyResult result() const { return {0.5 * h_ * sum_, steps_}; }

 private:
  const NvarModel& model_;
  const OdeSystem& system_;
  double h_;
  Matrix window_;  // seed rows followed by pushed predictions
  double sum_ = 0.0;
  std::size_t steps_ = 0;
  bool stopped_ = false;
  std::vector<double> y_, f_stack_, df_, f_next_;
};

// Batch form over a finished rollout; identical summation order to the
// accumulator.
EnergyResult discrete_energy(const NvarModel& model, const OdeSystem& system, const Matrix& pred,
                             const Matrix& seed, double h);

}  // namespace pinvar
