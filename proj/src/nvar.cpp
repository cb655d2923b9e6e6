#include "pinvar/nvar.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pinvar/simd.hpp"

namespace pinvar {

void NvarModel::validate() const {
  spec.validate();
  if (W.rows() != d() || W.cols() != m()) {
    throw std::invalid_argument("model weights are " + std::to_string(W.rows()) + "x" +
                                std::to_string(W.cols()) + ", spec needs " + std::to_string(d()) + "x" +
                                std::to_string(m()));
  }
  for (double w : W.flat())
    if (!std::isfinite(w)) throw std::invalid_argument("model weights contain non-finite entries");
}

namespace {

void check_dims(const NvarModel& model, std::span<const double> y) {
  if (model.W.rows() != model.d() || model.W.cols() != model.m()) {
    throw std::invalid_argument("model weight shape does not match its state function");
  }
  if (y.size() != model.spec.embedding.dim()) {
    throw std::invalid_argument("embedding length " + std::to_string(y.size()) + " differs from p*d = " +
                                std::to_string(model.spec.embedding.dim()));
  }
}

}  // namespace

std::vector<double> predict_next(const NvarModel& model, std::span<const double> y) {
  check_dims(model, y);
  std::vector<double> features(model.m());
  eval_state_into(model.spec, y, features);
  std::vector<double> next(model.d());
  gemv(model.W, features, next);
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += y[i];
  return next;
}

std::vector<double> derivative_update(const NvarModel& model, std::span<const double> y,
                                      std::span<const double> f_stack) {
  check_dims(model, y);
  if (f_stack.size() != y.size()) {
    throw std::invalid_argument("derivative_update: stacked rhs length differs from embedding length");
  }
  std::vector<double> dfeatures(model.m());
  eval_directional_into(model.spec, y, f_stack, dfeatures);
  std::vector<double> out(model.d());
  gemv(model.W, dfeatures, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += f_stack[i];
  return out;
}

Rollout recursive_predict(const NvarModel& model, const Matrix& seed, std::size_t steps) {
  const EmbeddingSpec& emb = model.spec.embedding;
  const std::size_t d = emb.d;
  if (seed.cols() != d) {
    throw std::invalid_argument("seed has " + std::to_string(seed.cols()) + " columns, model dimension is " +
                                std::to_string(d));
  }
  if (seed.rows() != emb.span() + 1) {
    throw std::invalid_argument("seed must hold exactly (p-1)s+1 = " + std::to_string(emb.span() + 1) +
                                " points, got " + std::to_string(seed.rows()));
  }
  if (model.W.rows() != d || model.W.cols() != model.m()) {
    throw std::invalid_argument("model weight shape does not match its state function");
  }

  // history rows: seed then predictions.
  const std::size_t base = seed.rows();
  std::vector<double> history(seed.flat().begin(), seed.flat().end());
  history.resize((base + steps) * d);

  std::vector<double> y(emb.dim());
  std::vector<double> features(model.m());
  std::vector<double> delta(d);

  Rollout out;
  std::size_t completed = 0;
  for (std::size_t j = 1; j <= steps; ++j) {
    const std::size_t newest = base + j - 2;  // 0-based row of x_k
    for (std::size_t lag = 0; lag < emb.p; ++lag) {
      const double* src = history.data() + (newest - lag * emb.s) * d;
      std::copy(src, src + d, y.begin() + static_cast<std::ptrdiff_t>(lag * d));
    }
    eval_state_into(model.spec, y, features);
    gemv(model.W, features, delta);
    double* dst = history.data() + (newest + 1) * d;
    bool finite = true;
    for (std::size_t i = 0; i < d; ++i) {
      dst[i] = y[i] + delta[i];
      finite = finite && std::isfinite(dst[i]);
    }
    if (!finite) {
      out.diverged_at = j;
      break;
    }
    completed = j;
  }

  out.trajectory = Matrix(completed, d);
  std::copy(history.begin() + static_cast<std::ptrdiff_t>(base * d),
            history.begin() + static_cast<std::ptrdiff_t>((base + completed) * d),
            out.trajectory.flat().begin());
  return out;
}

void stack_rhs_into(const OdeSystem& system, const Matrix& window, std::size_t index,
                    const EmbeddingSpec& spec, std::span<double> out) {
  if (index < 1 + spec.span() || index > window.rows()) {
    throw std::out_of_range("stack_rhs: index " + std::to_string(index) + " needs lookback " +
                            std::to_string(spec.span()));
  }
  for (std::size_t lag = 0; lag < spec.p; ++lag) {
    system.eval_into(window.row(index - 1 - lag * spec.s), out.subspan(lag * spec.d, spec.d));
  }
}

}  // namespace pinvar
