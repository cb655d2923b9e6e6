#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "pinvar/linalg.hpp"
#include "pinvar/ode_systems.hpp"
#include "pinvar/state_function.hpp"

namespace pinvar {

struct NvarModel {
  Matrix W;  // d x m
  StateFunctionSpec spec;
  double h = 0.0;  // step the model was trained at

  std::size_t d() const { return spec.embedding.d; }
  std::size_t m() const { return spec.m(); }
  // Shape and finiteness of W against the spec.
  void validate() const;
};

// x_{k+1} = x_k + W h(y_k). The leading d entries of y are x_k.
std::vector<double> predict_next(const NvarModel& model, std::span<const double> y);

// f(x_{k+1}) = f(x_k) + W (dh/dy) F(y_k), where f_stack = F(y_k) =
// [f(x_k); f(x_{k-s}); ...]. Returns the propagated derivative.
std::vector<double> derivative_update(const NvarModel& model, std::span<const double> y,
                                      std::span<const double> f_stack);

struct Rollout {
  Matrix trajectory;                    // steps_completed x d; row j-1 is prediction j
  std::optional<std::size_t> diverged_at;  // 1-based step that went non-finite
};

// Iterates predict_next from a seed window. `seed` holds the (p-1)s+1 most
// recent reference points, oldest first; prediction j approximates the
// point j steps after the last seed row. Early embeddings mix seed points
// and predictions. Stops at the first non-finite prediction.
Rollout recursive_predict(const NvarModel& model, const Matrix& seed, std::size_t steps);

// Stacks f over the lags of the newest point of `window` (1-based index),
// matching the embedding layout.
void stack_rhs_into(const OdeSystem& system, const Matrix& window, std::size_t index,
                    const EmbeddingSpec& spec, std::span<double> out);

}  // namespace pinvar
