#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pinvar {

// Autonomous first-order system x' = f(x).
//
// The three built-in systems evaluate their right-hand side inline; custom
// systems carry an arbitrary callable. Instances are immutable and safe to
// share across threads.
class OdeSystem {
 public:
  using Rhs = std::function<void(std::span<const double> x, std::span<double> dx)>;
  using Params = std::vector<std::pair<std::string, double>>;

  // x'' + k x = 0 written as x1' = x2, x2' = -k x1.
  static OdeSystem spring(double k = 3.0);
  static OdeSystem lotka_volterra(double a = 0.25, double b = 1.0, double c = 0.5,
                                  double d_rate = 0.125);
  static OdeSystem lorenz(double sigma = 10.0, double rho = 28.0, double beta = 8.0 / 3.0);
  static OdeSystem custom(std::string name, std::size_t dim, std::vector<double> x0, Rhs rhs,
                          Params params = {});

  // Registry lookup by "spring", "lotka_volterra" or "lorenz". Entries of
  // `overrides` replace the named default parameters; unknown names throw.
  static OdeSystem by_name(const std::string& name, const Params& overrides = {});
  static std::vector<std::string> registry_names();

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  const Params& params() const { return params_; }
  double param(const std::string& key) const;
  const std::vector<double>& x0() const { return x0_; }

  std::vector<double> eval(std::span<const double> x) const;
  // No dimension checks; out must hold dim() entries.
  void eval_into(std::span<const double> x, std::span<double> out) const;

 private:
  enum class Kind { spring, lotka_volterra, lorenz, custom };

  OdeSystem(Kind kind, std::string name, std::size_t dim, Params params, std::vector<double> x0);

  Kind kind_;
  std::string name_;
  std::size_t dim_;
  Params params_;
  std::vector<double> x0_;
  double c_[4] = {0, 0, 0, 0};
  Rhs rhs_;
};

// Closed-form spring state [sin(sqrt(k) t), sqrt(k) cos(sqrt(k) t)].
std::vector<double> exact_spring(double t, double k = 3.0);

}  // namespace pinvar
