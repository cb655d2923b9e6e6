#include "pinvar/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pinvar/simd.hpp"

namespace pinvar {

std::size_t valid_time(const Matrix& pred, const Matrix& ref, double threshold) {
  if (pred.rows() != ref.rows() || pred.cols() != ref.cols()) {
    throw std::invalid_argument("valid_time: prediction is " + std::to_string(pred.rows()) + "x" +
                                std::to_string(pred.cols()) + ", reference is " + std::to_string(ref.rows()) +
                                "x" + std::to_string(ref.cols()));
  }
  if (!(threshold > 0.0)) throw std::invalid_argument("valid_time: threshold must be positive");
  for (std::size_t j = 0; j < pred.rows(); ++j) {
    double err = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < pred.cols(); ++i) {
      const double e = pred(j, i) - ref(j, i);
      err += e * e;
      norm += ref(j, i) * ref(j, i);
    }
    const double rel = norm > 0.0 ? err / norm : err;
    if (!(rel < threshold)) return j + 1;
  }
  return pred.rows();
}

EnergyAccumulator::EnergyAccumulator(const NvarModel& model, const OdeSystem& system, const Matrix& seed,
                                     double h)
    : model_(model), system_(system), h_(h), window_(seed) {
  const auto& emb = model.spec.embedding;
  if (!(h > 0.0)) throw std::invalid_argument("discrete_energy: step must be positive");
  if (system.dim() != emb.d || seed.cols() != emb.d) {
    throw std::invalid_argument("discrete_energy: model, system and seed disagree on dimension");
  }
  if (seed.rows() != emb.span() + 1) {
    throw std::invalid_argument("discrete_energy: seed must hold (p-1)s+1 points");
  }
  y_.resize(emb.dim());
  f_stack_.resize(emb.dim());
  df_.resize(model.m());
  f_next_.resize(emb.d);
}

bool EnergyAccumulator::push(std::span<const double> next) {
  if (stopped_) return false;
  const auto& emb = model_.spec.embedding;
  if (next.size() != emb.d) throw std::invalid_argument("discrete_energy: prediction has wrong dimension");
  const std::size_t k = window_.rows();  // 1-based index of x_k
  for (std::size_t lag = 0; lag < emb.p; ++lag) {
    auto x = window_.row(k - 1 - lag * emb.s);
    std::copy(x.begin(), x.end(), y_.begin() + static_cast<std::ptrdiff_t>(lag * emb.d));
  }
  stack_rhs_into(system_, window_, k, emb, f_stack_);
  eval_directional_into(model_.spec, y_, f_stack_, df_);
  system_.eval_into(next, f_next_);

  double summand = 0.0;
  for (std::size_t i = 0; i < emb.d; ++i) {
    const double propagated = simd::dot(model_.W.row(i), df_) + f_stack_[i];
    const double e = f_next_[i] - propagated;
    summand += e * e;
  }
  if (!std::isfinite(summand)) {
    // Finite states whose defect overflows: the functional itself diverged.
    sum_ = HUGE_VAL;
    ++steps_;
    stopped_ = true;
    return false;
  }
  sum_ += summand;
  ++steps_;
  window_.append_row(next);
  return true;
}

EnergyResult discrete_energy(const NvarModel& model, const OdeSystem& system, const Matrix& pred,
                             const Matrix& seed, double h) {
  EnergyAccumulator acc(model, system, seed, h);
  for (std::size_t j = 0; j < pred.rows(); ++j) {
    if (!acc.push(pred.row(j))) break;
  }
  return acc.result();
}

}  // namespace pinvar
