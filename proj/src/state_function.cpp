#include "pinvar/state_function.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pinvar/simd.hpp"

namespace pinvar {

void EmbeddingSpec::validate() const {
  if (p < 1) throw std::invalid_argument("embedding lookback p must be >= 1");
  if (s < 1) throw std::invalid_argument("embedding stride s must be >= 1");
  if (d < 1) throw std::invalid_argument("embedding state dimension d must be >= 1");
}

std::vector<double> build_embedding(const Matrix& points, std::size_t index, const EmbeddingSpec& spec) {
  spec.validate();
  if (points.cols() != spec.d) {
    throw std::invalid_argument("build_embedding: points have " + std::to_string(points.cols()) +
                                " columns, embedding expects " + std::to_string(spec.d));
  }
  if (index < 1 + spec.span() || index > points.rows()) {
    throw std::out_of_range("build_embedding: index " + std::to_string(index) + " needs lookback " +
                            std::to_string(spec.span()) + " within 1.." + std::to_string(points.rows()));
  }
  std::vector<double> y(spec.dim());
  for (std::size_t j = 0; j < spec.p; ++j) {
    auto x = points.row(index - 1 - j * spec.s);
    std::copy(x.begin(), x.end(), y.begin() + static_cast<std::ptrdiff_t>(j * spec.d));
  }
  return y;
}

namespace {

struct Logistic {
  double value;       // 0.5 (1 + tanh z)
  double half_sech2;  // d value / dz
};

// Evaluated through exp(-2|z|) so neither tail cancels.
Logistic logistic_of(double z) {
  const double q = std::exp(-2.0 * std::abs(z));
  const double inv = 1.0 / (1.0 + q);
  Logistic out;
  out.value = z >= 0.0 ? inv : q * inv;
  out.half_sech2 = 2.0 * q * inv * inv;
  return out;
}

double bump_rate(const SmoothSupport& p) {
  return (static_cast<double>(p.sharpness) + 0.25) * std::numbers::pi;
}

}  // namespace

double smooth_support(double x, const SmoothSupport& p) {
  const double dx = x - p.center;
  return logistic_of(bump_rate(p) * (p.radius * p.radius - dx * dx)).value;
}

double smooth_support_derivative(double x, const SmoothSupport& p) {
  const double dx = x - p.center;
  const double c = bump_rate(p);
  return logistic_of(c * (p.radius * p.radius - dx * dx)).half_sech2 * c * (-2.0 * dx);
}

double piecewise_support(double x, const PiecewiseSupport& p) {
  if (x <= p.a) return 0.0;
  if (x <= p.b) return (x - p.a) / (p.b - p.a);
  if (x <= p.c) return 1.0;
  if (x <= p.d) return 1.0 - (x - p.c) / (p.d - p.c);
  return 0.0;
}

double piecewise_support_derivative(double x, const PiecewiseSupport& p) {
  if (x <= p.a) return 0.0;
  if (x <= p.b) return 1.0 / (p.b - p.a);
  if (x <= p.c) return 0.0;
  if (x <= p.d) return -1.0 / (p.d - p.c);
  return 0.0;
}

double lambda_ab(double x, const ChebyshevClamp& p) {
  if (x < p.a) return -1.0;
  if (x >= p.b) return 1.0;
  return (p.a + p.b - 2.0 * x) / (p.a - p.b);
}

double lambda_ab_derivative(double x, const ChebyshevClamp& p) {
  if (x < p.a || x >= p.b) return 0.0;
  return 2.0 / (p.b - p.a);
}

std::string basis_name(Basis b) {
  switch (b) {
    case Basis::h1: return "h1";
    case Basis::h2: return "h2";
    case Basis::h3: return "h3";
  }
  return "?";
}

Basis parse_basis(const std::string& name) {
  if (name == "h1") return Basis::h1;
  if (name == "h2") return Basis::h2;
  if (name == "h3") return Basis::h3;
  throw std::invalid_argument("unknown basis '" + name + "' (expected h1, h2 or h3)");
}

std::size_t StateFunctionSpec::m() const {
  const std::size_t n = embedding.dim();
  return 1 + n + n * (n + 1) / 2;
}

void StateFunctionSpec::validate() const {
  embedding.validate();
  const std::size_t d = embedding.d;
  auto count_check = [d](std::size_t count) {
    if (count != d) {
      throw std::invalid_argument("support has " + std::to_string(count) +
                                  " coordinate parameter sets, state dimension is " + std::to_string(d));
    }
  };
  switch (basis) {
    case Basis::h1: {
      const auto* v = std::get_if<std::vector<SmoothSupport>>(&support);
      if (v == nullptr) throw std::invalid_argument("basis h1 needs smooth support parameters");
      count_check(v->size());
      for (const auto& s : *v) {
        if (s.sharpness < 1) throw std::invalid_argument("smooth support sharpness must be >= 1");
        if (!(s.radius > 0.0)) throw std::invalid_argument("smooth support radius must be positive");
      }
      break;
    }
    case Basis::h2: {
      const auto* v = std::get_if<std::vector<PiecewiseSupport>>(&support);
      if (v == nullptr) throw std::invalid_argument("basis h2 needs piecewise support parameters");
      count_check(v->size());
      for (const auto& s : *v) {
        if (!(s.a < s.b && s.b <= s.c && s.c < s.d)) {
          throw std::invalid_argument("piecewise support needs a < b <= c < d");
        }
      }
      break;
    }
    case Basis::h3: {
      const auto* v = std::get_if<std::vector<ChebyshevClamp>>(&support);
      if (v == nullptr) throw std::invalid_argument("basis h3 needs clamp bounds");
      count_check(v->size());
      for (const auto& s : *v) {
        if (!(s.a < s.b)) throw std::invalid_argument("clamp bounds need a < b");
      }
      break;
    }
  }
}

StateFunctionSpec make_state_function(Basis basis, const EmbeddingSpec& embedding,
                                      std::span<const double> radii) {
  if (radii.size() != embedding.d) {
    throw std::invalid_argument("make_state_function: " + std::to_string(radii.size()) +
                                " radii for dimension " + std::to_string(embedding.d));
  }
  StateFunctionSpec spec;
  spec.basis = basis;
  spec.embedding = embedding;
  switch (basis) {
    case Basis::h1: {
      std::vector<SmoothSupport> v;
      for (double r : radii) v.push_back({5, r, 0.0});
      spec.support = v;
      break;
    }
    case Basis::h2: {
      std::vector<PiecewiseSupport> v;
      for (double r : radii) v.push_back({-r, -0.95 * r, 0.95 * r, r});
      spec.support = v;
      break;
    }
    case Basis::h3: {
      std::vector<ChebyshevClamp> v;
      for (double r : radii) v.push_back({-r, r});
      spec.support = v;
      break;
    }
  }
  spec.validate();
  return spec;
}

std::vector<double> compute_radii(const Dataset& data, std::size_t first, std::size_t last) {
  if (first < 1 || last < first || last > data.size()) {
    throw std::out_of_range("compute_radii: index range " + std::to_string(first) + ".." +
                            std::to_string(last) + " outside 1.." + std::to_string(data.size()));
  }
  std::vector<double> radii(data.dim(), 0.0);
  for (std::size_t k = first; k <= last; ++k) {
    auto x = data.at(k);
    for (std::size_t i = 0; i < radii.size(); ++i) radii[i] = std::max(radii[i], std::abs(x[i]));
  }
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] == 0.0) {
      throw std::invalid_argument("compute_radii: coordinate " + std::to_string(i + 1) +
                                  " is identically zero over the index range");
    }
    radii[i] *= 1.1;
  }
  return radii;
}

namespace {

// Per-coordinate transformed inputs u and their derivatives du/dy.
void transform_inputs(const StateFunctionSpec& spec, std::span<const double> y,
                      std::span<double> u, std::span<double> g) {
  const std::size_t d = spec.embedding.d;
  const std::size_t n = y.size();
  std::visit(
      [&](const auto& params) {
        using T = typename std::decay_t<decltype(params)>::value_type;
        for (std::size_t q = 0; q < n; ++q) {
          const T& lam = params[q % d];
          const double x = y[q];
          if constexpr (std::is_same_v<T, SmoothSupport>) {
            const double phi = smooth_support(x, lam);
            u[q] = phi * x;
            g[q] = phi + x * smooth_support_derivative(x, lam);
          } else if constexpr (std::is_same_v<T, PiecewiseSupport>) {
            const double phi = piecewise_support(x, lam);
            u[q] = phi * x;
            g[q] = phi + x * piecewise_support_derivative(x, lam);
          } else {
            u[q] = lambda_ab(x, lam);
            g[q] = lambda_ab_derivative(x, lam);
          }
        }
      },
      spec.support);
}

void check_embedding(const StateFunctionSpec& spec, std::span<const double> y) {
  if (y.size() != spec.embedding.dim()) {
    throw std::invalid_argument("state function expects an embedding of length " +
                                std::to_string(spec.embedding.dim()) + ", got " + std::to_string(y.size()));
  }
}

}  // namespace

void eval_state_into(const StateFunctionSpec& spec, std::span<const double> y, std::span<double> out) {
  check_embedding(spec, y);
  const std::size_t n = y.size();
  if (out.size() != spec.m()) throw std::invalid_argument("eval_state: output length differs from m");
  std::vector<double> u(n), g(n);
  transform_inputs(spec, y, u, g);

  out[0] = 1.0;
  std::copy(u.begin(), u.end(), out.begin() + 1);
  std::size_t offset = 1 + n;
  const bool chebyshev = spec.basis == Basis::h3;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = n - i;
    simd::scale(u[i], std::span<const double>(u).subspan(i), out.subspan(offset, len));
    if (chebyshev) out[offset] = 2.0 * out[offset] - 1.0;
    offset += len;
  }
}

std::vector<double> eval_state(const StateFunctionSpec& spec, std::span<const double> y) {
  std::vector<double> out(spec.m());
  eval_state_into(spec, y, out);
  return out;
}

Matrix eval_gradient(const StateFunctionSpec& spec, std::span<const double> y) {
  check_embedding(spec, y);
  const std::size_t n = y.size();
  std::vector<double> u(n), g(n);
  transform_inputs(spec, y, u, g);

  Matrix grad(spec.m(), n, 0.0);
  for (std::size_t q = 0; q < n; ++q) grad(1 + q, q) = g[q];
  const double diag_factor = spec.basis == Basis::h3 ? 4.0 : 2.0;
  std::size_t row = 1 + n;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j, ++row) {
      if (i == j) {
        grad(row, i) = diag_factor * u[i] * g[i];
      } else {
        grad(row, i) = u[j] * g[i];
        grad(row, j) = u[i] * g[j];
      }
    }
  }
  return grad;
}

void eval_directional_into(const StateFunctionSpec& spec, std::span<const double> y,
                           std::span<const double> v, std::span<double> out) {
  check_embedding(spec, y);
  const std::size_t n = y.size();
  if (v.size() != n) throw std::invalid_argument("eval_directional: direction length differs from embedding");
  if (out.size() != spec.m()) throw std::invalid_argument("eval_directional: output length differs from m");
  std::vector<double> u(n), w(n);
  transform_inputs(spec, y, u, w);
  for (std::size_t q = 0; q < n; ++q) w[q] *= v[q];

  out[0] = 0.0;
  std::copy(w.begin(), w.end(), out.begin() + 1);
  std::size_t offset = 1 + n;
  const bool chebyshev = spec.basis == Basis::h3;
  const std::span<const double> us(u), ws(w);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = n - i;
    // d(u_i u_j) = u_i w_j + w_i u_j; the i == j entry is 2 u_i w_i.
    simd::axpby(u[i], ws.subspan(i), w[i], us.subspan(i), out.subspan(offset, len));
    if (chebyshev) out[offset] = 2.0 * out[offset];
    offset += len;
  }
}

}  // namespace pinvar
