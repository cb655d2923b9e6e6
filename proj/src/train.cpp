#include "pinvar/train.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pinvar/simd.hpp"

namespace pinvar {

void TrainingProblem::validate() const {
  const std::size_t T = H.cols();
  if (Z.cols() != T || dH.cols() != T || dZ.cols() != T) {
    throw std::invalid_argument("training matrices disagree on column count");
  }
  if (dH.rows() != H.rows() || dZ.rows() != Z.rows()) {
    throw std::invalid_argument("training matrices disagree on row count");
  }
  const auto& w = weights;
  if (w.w_d < 0.0 || w.w_o < 0.0 || w.r < 0.0) throw std::invalid_argument("training weights must be nonnegative");
  if (!(w.w_d + w.w_o + w.r > 0.0)) throw std::invalid_argument("training weights are all zero");
}

TrainingProblem build_training_problem(const Dataset& data, const OdeSystem& system,
                                       const StateFunctionSpec& spec, std::size_t start,
                                       std::size_t count, const TrainingWeights& weights) {
  spec.validate();
  const EmbeddingSpec& emb = spec.embedding;
  if (data.dim() != emb.d || system.dim() != emb.d) {
    throw std::invalid_argument("training data, system and state function disagree on dimension");
  }
  if (count == 0) throw std::invalid_argument("training window is empty");
  if (start <= emb.span()) {
    throw std::out_of_range("training start index " + std::to_string(start) + " must exceed (p-1)s = " +
                            std::to_string(emb.span()));
  }
  if (start + count > data.size()) {
    throw std::out_of_range("training window " + std::to_string(start) + ".." +
                            std::to_string(start + count - 1) + " needs target index " +
                            std::to_string(start + count) + " but the dataset has " +
                            std::to_string(data.size()) + " points");
  }

  const std::size_t m = spec.m();
  const std::size_t d = emb.d;
  TrainingProblem prob;
  prob.weights = weights;
  prob.H = Matrix(m, count);
  prob.Z = Matrix(d, count);
  prob.dH = Matrix(m, count);
  prob.dZ = Matrix(d, count);

  std::vector<double> features(m), dfeatures(m), f_stack(emb.dim()), f_next(d), f_now(d);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t index = start + k;
    auto y = build_embedding(data.points, index, emb);
    eval_state_into(spec, y, features);
    stack_rhs_into(system, data.points, index, emb, f_stack);
    eval_directional_into(spec, y, f_stack, dfeatures);
    for (std::size_t i = 0; i < m; ++i) {
      prob.H(i, k) = features[i];
      prob.dH(i, k) = dfeatures[i];
    }
    auto x_now = data.at(index);
    auto x_next = data.at(index + 1);
    system.eval_into(x_next, f_next);
    std::copy(f_stack.begin(), f_stack.begin() + static_cast<std::ptrdiff_t>(d), f_now.begin());
    for (std::size_t i = 0; i < d; ++i) {
      prob.Z(i, k) = x_next[i] - x_now[i];
      prob.dZ(i, k) = f_next[i] - f_now[i];
    }
  }
  prob.validate();
  return prob;
}

WeightFit solve_weights(const TrainingProblem& problem) {
  problem.validate();
  const auto& w = problem.weights;
  const std::size_t m = problem.H.rows();
  const std::size_t d = problem.Z.rows();
  const std::size_t T = problem.H.cols();
  const bool use_data = w.w_d > 0.0;
  const bool use_ode = w.w_o > 0.0;
  const bool use_ridge = w.r > 0.0;
  const std::size_t K = (use_data ? T : 0) + (use_ode ? T : 0) + (use_ridge ? m : 0);

  // Row i of `design` is column i of the tall matrix [sqrt(w_d) H; ...]^T.
  Matrix design(m, K, 0.0);
  Matrix target(d, K, 0.0);
  const double sd = std::sqrt(w.w_d);
  const double so = std::sqrt(w.w_o);
  const double sr = std::sqrt(w.r);
  std::size_t off = 0;
  if (use_data) {
    for (std::size_t i = 0; i < m; ++i) simd::scale(sd, problem.H.row(i), design.row(i).subspan(off, T));
    for (std::size_t i = 0; i < d; ++i) simd::scale(sd, problem.Z.row(i), target.row(i).subspan(off, T));
    off += T;
  }
  if (use_ode) {
    for (std::size_t i = 0; i < m; ++i) simd::scale(so, problem.dH.row(i), design.row(i).subspan(off, T));
    for (std::size_t i = 0; i < d; ++i) simd::scale(so, problem.dZ.row(i), target.row(i).subspan(off, T));
    off += T;
  }
  if (use_ridge) {
    for (std::size_t i = 0; i < m; ++i) design(i, off + i) = sr;
  }

  auto sol = solve_least_squares_rows(design, target);
  WeightFit fit;
  fit.W = std::move(sol.x);
  fit.rank = sol.rank;
  fit.rank_deficient = sol.rank_deficient;
  return fit;
}

namespace {

double residual_sq(const Matrix& W, const Matrix& A, const Matrix& B) {
  Matrix R = multiply(W, A);
  double acc = 0.0;
  for (std::size_t i = 0; i < R.rows(); ++i)
    for (std::size_t j = 0; j < R.cols(); ++j) {
      const double e = R(i, j) - B(i, j);
      acc += e * e;
    }
  return acc;
}

}  // namespace

ObjectiveTerms training_objective(const TrainingProblem& problem, const Matrix& W) {
  problem.validate();
  if (W.rows() != problem.Z.rows() || W.cols() != problem.H.rows()) {
    throw std::invalid_argument("training_objective: weight shape mismatch");
  }
  ObjectiveTerms t;
  t.g_d = residual_sq(W, problem.H, problem.Z);
  t.g_o = residual_sq(W, problem.dH, problem.dZ);
  auto flat = W.flat();
  t.g_r = simd::dot(flat, flat);
  const auto& w = problem.weights;
  t.total = w.w_d * t.g_d + w.w_o * t.g_o + w.r * t.g_r;
  return t;
}

NvarModel train_model(const Dataset& data, const OdeSystem& system, const StateFunctionSpec& spec,
                      std::size_t start, std::size_t count, const TrainingWeights& weights,
                      WeightFit* fit_info) {
  auto problem = build_training_problem(data, system, spec, start, count, weights);
  auto fit = solve_weights(problem);
  NvarModel model;
  model.W = fit.W;
  model.spec = spec;
  model.h = data.h;
  if (fit_info != nullptr) *fit_info = std::move(fit);
  return model;
}

}  // namespace pinvar
