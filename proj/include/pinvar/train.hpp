#pragma once

#include <cstddef>

#include "pinvar/integrate.hpp"
#include "pinvar/linalg.hpp"
#include "pinvar/nvar.hpp"
#include "pinvar/ode_systems.hpp"
#include "pinvar/state_function.hpp"

namespace pinvar {

struct TrainingWeights {
  double w_d = 1.0;  // data fit
  double w_o = 0.0;  // ODE fit
  double r = 0.0;    // ridge
};

// Columns k = 0..T-1 correspond to embeddings at reference index a + k.
struct TrainingProblem {
  Matrix H;   // m x T, h(y_{a+k})
  Matrix Z;   // d x T, x_{a+k+1} - x_{a+k}
  Matrix dH;  // m x T, (dh/dy)(y_{a+k}) F(y_{a+k})
  Matrix dZ;  // d x T, f(x_{a+k+1}) - f(x_{a+k})
  TrainingWeights weights;

  void validate() const;
};

// `start` is the 1-based index a of the first input point; requires
// a > (p-1)s and a + T <= N.
TrainingProblem build_training_problem(const Dataset& data, const OdeSystem& system,
                                       const StateFunctionSpec& spec, std::size_t start,
                                       std::size_t count, const TrainingWeights& weights);

struct WeightFit {
  Matrix W;  // d x m
  std::size_t rank = 0;
  bool rank_deficient = false;
};

// Minimises || W [sqrt(w_d) H | sqrt(w_o) dH | sqrt(r) I] - [sqrt(w_d) Z | sqrt(w_o) dZ | 0] ||_F^2
// by orthogonal factorisation of the stacked system.
WeightFit solve_weights(const TrainingProblem& problem);

struct ObjectiveTerms {
  double g_d = 0.0;  // ||W H - Z||_F^2
  double g_o = 0.0;  // ||W dH - dZ||_F^2
  double g_r = 0.0;  // ||W||_F^2
  double total = 0.0;
};

ObjectiveTerms training_objective(const TrainingProblem& problem, const Matrix& W);

// Builds, solves and wraps the result as a model.
NvarModel train_model(const Dataset& data, const OdeSystem& system, const StateFunctionSpec& spec,
                      std::size_t start, std::size_t count, const TrainingWeights& weights,
                      WeightFit* fit_info = nullptr);

}  // namespace pinvar
