#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "pinvar/simd.hpp"

namespace pinvar::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

bool parse_isa(std::string_view name, Isa& out) {
  if (name == "scalar") { out = Isa::scalar; return true; }
  if (name == "avx2") { out = Isa::avx2; return true; }
  if (name == "neon") { out = Isa::neon; return true; }
  return false;
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(PINVAR_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(PINVAR_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("ISA not available on this host: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(PINVAR_HAVE_AVX2)
    case Isa::avx2: return detail::avx2_table;
#endif
#if defined(PINVAR_HAVE_NEON)
    case Isa::neon: return detail::neon_table;
#endif
    default: return detail::scalar_table;
  }
}

namespace {

Isa detect_best() {
  if (const char* env = std::getenv("PINVAR_ISA"); env != nullptr && std::string_view(env) != "auto") {
    Isa forced{};
    if (parse_isa(env, forced) && isa_supported(forced)) return forced;
    return Isa::scalar;
  }
  if (isa_supported(Isa::avx2)) return Isa::avx2;
  if (isa_supported(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

struct ActiveState {
  std::atomic<const KernelTable*> table;
  std::atomic<Isa> isa;
  ActiveState() {
    Isa best = detect_best();
    isa.store(best);
    table.store(&kernels_for(best));
  }
};

ActiveState& state() {
  static ActiveState s;
  return s;
}

}  // namespace

Isa active_isa() { return state().isa.load(std::memory_order_relaxed); }

void select_isa(Isa isa) {
  const KernelTable& t = kernels_for(isa);
  state().isa.store(isa);
  state().table.store(&t);
}

const KernelTable& detail::active_table() {
  return *state().table.load(std::memory_order_relaxed);
}

}  // namespace pinvar::simd
