#pragma once

// Runtime-dispatched double-precision vector kernels.
//
// Every kernel has a scalar reference implementation. Vector variants
// (AVX2+FMA on x86-64, NEON on aarch64) are selected once at first use from
// CPU capabilities, or forced with PINVAR_ISA=scalar|avx2|neon.
//
// Element-wise kernels (axpy, scale, axpby) are bit-identical across
// variants. Reductions (dot) differ only in summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace pinvar::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out = alpha * x
  void (*scale)(double alpha, const double* x, double* out, std::size_t n);
  // out = alpha * x + beta * y
  void (*axpby)(double alpha, const double* x, double beta, const double* y,
                double* out, std::size_t n);
};

std::string_view isa_name(Isa isa);
bool parse_isa(std::string_view name, Isa& out);

bool isa_supported(Isa isa);
const KernelTable& kernels_for(Isa isa);

Isa active_isa();
// Throws std::invalid_argument when the ISA is not available on this host.
void select_isa(Isa isa);

namespace detail {
extern const KernelTable scalar_table;
#if defined(PINVAR_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(PINVAR_HAVE_NEON)
extern const KernelTable neon_table;
#endif
const KernelTable& active_table();
}  // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
  return detail::active_table().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::active_table().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<const double> x, std::span<double> out) {
  detail::active_table().scale(alpha, x.data(), out.data(), x.size());
}

inline void axpby(double alpha, std::span<const double> x, double beta,
                  std::span<const double> y, std::span<double> out) {
  detail::active_table().axpby(alpha, x.data(), beta, y.data(), out.data(), x.size());
}

}  // namespace pinvar::simd
