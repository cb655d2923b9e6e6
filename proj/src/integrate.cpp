#include "pinvar/integrate.hpp"

#include <cmath>

namespace pinvar {

std::span<const double> Dataset::at(std::size_t index) const {
  if (index < 1 || index > size()) {
    throw std::out_of_range("dataset index " + std::to_string(index) + " outside 1.." +
                            std::to_string(size()));
  }
  return points.row(index - 1);
}

namespace {

class Rk4Stepper {
 public:
  explicit Rk4Stepper(const OdeSystem& system)
      : sys_(system), n_(system.dim()), tmp_(n_), k1_(n_), k2_(n_), k3_(n_), k4_(n_) {}

  // Advances x in place; returns false if any component became non-finite.
  bool step(std::span<double> x, double h) {
    const double h2 = h / 2.0;
    const double h6 = h / 6.0;
    sys_.eval_into(x, k1_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h2 * k1_[i];
    sys_.eval_into(tmp_, k2_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h2 * k2_[i];
    sys_.eval_into(tmp_, k3_);
    for (std::size_t i = 0; i < n_; ++i) tmp_[i] = x[i] + h * k3_[i];
    sys_.eval_into(tmp_, k4_);
    bool finite = true;
    for (std::size_t i = 0; i < n_; ++i) {
      x[i] += h6 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
      finite = finite && std::isfinite(x[i]);
    }
    return finite;
  }

 private:
  const OdeSystem& sys_;
  std::size_t n_;
  std::vector<double> tmp_, k1_, k2_, k3_, k4_;
};

void check_state(const OdeSystem& system, std::span<const double> x) {
  if (x.size() != system.dim()) {
    throw std::invalid_argument("state length " + std::to_string(x.size()) +
                                " differs from system dimension " + std::to_string(system.dim()));
  }
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("initial state is not finite");
}

}  // namespace

std::vector<double> rk4_step(const OdeSystem& system, std::span<const double> x, double h_fine) {
  if (!(h_fine > 0.0)) throw std::invalid_argument("rk4_step: step must be positive");
  check_state(system, x);
  std::vector<double> out(x.begin(), x.end());
  Rk4Stepper stepper(system);
  if (!stepper.step(out, h_fine)) {
    throw IntegrationOverflow(1, "rk4_step: non-finite state at step 1");
  }
  return out;
}

Dataset generate_dataset(const OdeSystem& system, std::span<const double> x0, double h_fine,
                         std::size_t downsample, std::size_t n_points) {
  if (!(h_fine > 0.0)) throw std::invalid_argument("generate_dataset: fine step must be positive");
  if (downsample < 1) throw std::invalid_argument("generate_dataset: downsample must be >= 1");
  if (n_points < 1) throw std::invalid_argument("generate_dataset: n_points must be >= 1");
  check_state(system, x0);

  Dataset ds;
  ds.system_name = system.name();
  ds.t0 = 0.0;
  ds.h = h_fine * static_cast<double>(downsample);
  ds.points = Matrix(n_points, system.dim());
  ds.generator = "rk4";
  ds.generator_params = {{"fine_h", h_fine},
                         {"downsample", static_cast<double>(downsample)},
                         {"n_points", static_cast<double>(n_points)}};
  for (std::size_t i = 0; i < x0.size(); ++i) ds.generator_params.emplace_back("x0_" + std::to_string(i + 1), x0[i]);

  std::vector<double> x(x0.begin(), x0.end());
  std::copy(x.begin(), x.end(), ds.points.row(0).begin());
  Rk4Stepper stepper(system);
  std::size_t fine_step = 0;
  for (std::size_t k = 1; k < n_points; ++k) {
    for (std::size_t j = 0; j < downsample; ++j) {
      ++fine_step;
      if (!stepper.step(x, h_fine)) {
        throw IntegrationOverflow(fine_step, "generate_dataset: non-finite state at fine step " +
                                                 std::to_string(fine_step) + " (dataset index " +
                                                 std::to_string(k + 1) + ")");
      }
    }
    std::copy(x.begin(), x.end(), ds.points.row(k).begin());
  }
  return ds;
}

Dataset generate_exact_spring_dataset(double k, double h, std::size_t n_points, double t0) {
  if (!(k > 0.0)) throw std::invalid_argument("spring constant k must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("time step must be positive");
  if (n_points < 1) throw std::invalid_argument("n_points must be >= 1");
  Dataset ds;
  ds.system_name = "spring";
  ds.t0 = t0;
  ds.h = h;
  ds.points = Matrix(n_points, 2);
  ds.generator = "exact";
  ds.generator_params = {{"k", k}, {"h", h}, {"n_points", static_cast<double>(n_points)}};
  for (std::size_t j = 1; j <= n_points; ++j) {
    auto x = exact_spring(ds.time_at(j), k);
    ds.points(j - 1, 0) = x[0];
    ds.points(j - 1, 1) = x[1];
  }
  return ds;
}

}  // namespace pinvar
