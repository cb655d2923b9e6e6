#include "pinvar/ode_systems.hpp"

#include <cmath>
#include <stdexcept>

namespace pinvar {

OdeSystem::OdeSystem(Kind kind, std::string name, std::size_t dim, Params params,
                     std::vector<double> x0)
    : kind_(kind), name_(std::move(name)), dim_(dim), params_(std::move(params)), x0_(std::move(x0)) {
  for (std::size_t i = 0; i < params_.size() && i < 4; ++i) c_[i] = params_[i].second;
}

OdeSystem OdeSystem::spring(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("spring constant k must be positive");
  return OdeSystem(Kind::spring, "spring", 2, {{"k", k}}, {0.0, std::sqrt(k)});
}

OdeSystem OdeSystem::lotka_volterra(double a, double b, double c, double d_rate) {
  return OdeSystem(Kind::lotka_volterra, "lotka_volterra", 2,
                   {{"a", a}, {"b", b}, {"c", c}, {"d_rate", d_rate}}, {1.0, 0.25});
}

OdeSystem OdeSystem::lorenz(double sigma, double rho, double beta) {
  return OdeSystem(Kind::lorenz, "lorenz", 3, {{"sigma", sigma}, {"rho", rho}, {"beta", beta}},
                   {-3.0, -3.0, 28.0});
}

OdeSystem OdeSystem::custom(std::string name, std::size_t dim, std::vector<double> x0, Rhs rhs,
                            Params params) {
  if (dim == 0) throw std::invalid_argument("system dimension must be positive");
  if (x0.size() != dim) throw std::invalid_argument("initial state length differs from dimension");
  if (!rhs) throw std::invalid_argument("custom system needs a right-hand side");
  OdeSystem sys(Kind::custom, std::move(name), dim, std::move(params), std::move(x0));
  sys.rhs_ = std::move(rhs);
  return sys;
}

std::vector<std::string> OdeSystem::registry_names() {
  return {"spring", "lotka_volterra", "lorenz"};
}

OdeSystem OdeSystem::by_name(const std::string& name, const Params& overrides) {
  OdeSystem base = [&] {
    if (name == "spring") return spring();
    if (name == "lotka_volterra") return lotka_volterra();
    if (name == "lorenz") return lorenz();
    throw std::invalid_argument("unknown system '" + name +
                                "' (expected spring, lotka_volterra or lorenz)");
  }();
  if (overrides.empty()) return base;

  Params merged = base.params();
  for (const auto& [key, value] : overrides) {
    bool found = false;
    for (auto& entry : merged) {
      if (entry.first == key) {
        entry.second = value;
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("system '" + name + "' has no parameter '" + key + "'");
  }
  switch (base.kind_) {
    case Kind::spring: return spring(merged[0].second);
    case Kind::lotka_volterra:
      return lotka_volterra(merged[0].second, merged[1].second, merged[2].second, merged[3].second);
    case Kind::lorenz: return lorenz(merged[0].second, merged[1].second, merged[2].second);
    case Kind::custom: break;
  }
  return base;
}

double OdeSystem::param(const std::string& key) const {
  for (const auto& [k, v] : params_)
    if (k == key) return v;
  throw std::invalid_argument("system '" + name_ + "' has no parameter '" + key + "'");
}

std::vector<double> OdeSystem::eval(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw std::invalid_argument("eval_f: system '" + name_ + "' has dimension " +
                                std::to_string(dim_) + ", state has " + std::to_string(x.size()));
  }
  std::vector<double> out(dim_);
  eval_into(x, out);
  return out;
}

void OdeSystem::eval_into(std::span<const double> x, std::span<double> out) const {
  switch (kind_) {
    case Kind::spring:
      out[0] = x[1];
      out[1] = -c_[0] * x[0];
      return;
    case Kind::lotka_volterra: {
      const double xy = x[0] * x[1];
      out[0] = c_[0] * x[0] - c_[1] * xy;
      out[1] = c_[2] * xy - c_[3] * x[1];
      return;
    }
    case Kind::lorenz:
      out[0] = c_[0] * (x[1] - x[0]);
      out[1] = x[0] * (c_[1] - x[2]) - x[1];
      out[2] = x[0] * x[1] - c_[2] * x[2];
      return;
    case Kind::custom:
      rhs_(x, out);
      return;
  }
}

std::vector<double> exact_spring(double t, double k) {
  const double w = std::sqrt(k);
  return {std::sin(w * t), w * std::cos(w * t)};
}

}  // namespace pinvar
