#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "pinvar/integrate.hpp"
#include "pinvar/linalg.hpp"

namespace pinvar {

// Delay embedding y_k = [x_k; x_{k-s}; ...; x_{k-(p-1)s}], newest first.
struct EmbeddingSpec {
  std::size_t p = 1;  // lookback
  std::size_t s = 1;  // stride
  std::size_t d = 1;  // state dimension

  std::size_t dim() const { return p * d; }
  // Number of steps reached back from the newest point.
  std::size_t span() const { return (p - 1) * s; }
  void validate() const;
};

// Builds y_index from 1-based rows of `points`. Throws std::out_of_range
// when index - (p-1)s < 1.
std::vector<double> build_embedding(const Matrix& points, std::size_t index, const EmbeddingSpec& spec);

// Hyperbolic-tangent bump 0.5 (1 + tanh((xi + 1/4) pi (r^2 - (x - t)^2))).
struct SmoothSupport {
  int sharpness = 5;
  double radius = 1.0;
  double center = 0.0;
};

// Piecewise-linear bump: 0 up to a, ramps to 1 on (a, b], flat on (b, c],
// ramps down on (c, d], 0 beyond d.
struct PiecewiseSupport {
  double a = -1.0, b = -0.95, c = 0.95, d = 1.0;
};

// Clamp to [a, b] then map affinely onto [-1, 1].
struct ChebyshevClamp {
  double a = -1.0, b = 1.0;
};

double smooth_support(double x, const SmoothSupport& p);
double smooth_support_derivative(double x, const SmoothSupport& p);
double piecewise_support(double x, const PiecewiseSupport& p);
double piecewise_support_derivative(double x, const PiecewiseSupport& p);
double lambda_ab(double x, const ChebyshevClamp& p);
double lambda_ab_derivative(double x, const ChebyshevClamp& p);

enum class Basis { h1, h2, h3 };

std::string basis_name(Basis b);
Basis parse_basis(const std::string& name);

// Per-coordinate parameters; the alternative must match the basis
// (h1: smooth, h2: piecewise, h3: clamp).
using SupportParams =
    std::variant<std::vector<SmoothSupport>, std::vector<PiecewiseSupport>, std::vector<ChebyshevClamp>>;

struct StateFunctionSpec {
  Basis basis = Basis::h2;
  EmbeddingSpec embedding;
  SupportParams support;

  // 1 + n + n(n+1)/2 with n = p d; for h3 this equals C(n+2, 2).
  std::size_t m() const;
  void validate() const;
};

// Default support parameters from per-coordinate radii:
// h1 -> (5, r_i, 0), h2 -> (-r_i, -0.95 r_i, 0.95 r_i, r_i), h3 -> (-r_i, r_i).
StateFunctionSpec make_state_function(Basis basis, const EmbeddingSpec& embedding,
                                      std::span<const double> radii);

// r_i = 1.1 max_k |x_{k,i}| over the 1-based index range [first, last].
std::vector<double> compute_radii(const Dataset& data, std::size_t first, std::size_t last);

// Feature vector h(y), length m. Layout for every basis:
//   [bias; u_1..u_n; quadratic terms q(i, j) for i <= j, row-major]
// with u = phi(y) * y (h1/h2) or u = Lambda(y) (h3). For h1/h2
// q(i, j) = u_i u_j; for h3 q(i, j) = u_i u_j (i < j) and T_2(u_i) = 2 u_i^2 - 1.
std::vector<double> eval_state(const StateFunctionSpec& spec, std::span<const double> y);
void eval_state_into(const StateFunctionSpec& spec, std::span<const double> y, std::span<double> out);

// Jacobian dh/dy, m x n.
Matrix eval_gradient(const StateFunctionSpec& spec, std::span<const double> y);

// (dh/dy) v without forming the Jacobian.
void eval_directional_into(const StateFunctionSpec& spec, std::span<const double> y,
                           std::span<const double> v, std::span<double> out);

}  // namespace pinvar
