#include <cstdlib>
#include <stdexcept>
#include <string>

#include "fhmc/simd/kernels.hpp"

namespace fhmc::simd {

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(FHMC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::neon:
#if defined(FHMC_HAVE_NEON)
      return true;  // baseline on aarch64
#else
      return false;
#endif
  }
  return false;
}

Isa detect() {
  if (const char* env = std::getenv("FHMC_SIMD")) {
    std::string v(env);
    if (v == "scalar") return Isa::scalar;
    if (v == "avx2" && cpu_supports(Isa::avx2)) return Isa::avx2;
    if (v == "neon" && cpu_supports(Isa::neon)) return Isa::neon;
    return Isa::scalar;
  }
  if (cpu_supports(Isa::avx2)) return Isa::avx2;
  if (cpu_supports(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

Isa g_active = detect();

}  // namespace

const Kernels& table(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return detail::scalar_kernels;
    case Isa::avx2:
#if defined(FHMC_HAVE_AVX2)
      return detail::avx2_kernels;
#else
      break;
#endif
    case Isa::neon:
#if defined(FHMC_HAVE_NEON)
      return detail::neon_kernels;
#else
      break;
#endif
  }
  throw std::invalid_argument("simd: " + isa_name(isa) +
                              " kernels not built on this platform");
}

bool isa_available(Isa isa) { return cpu_supports(isa); }

Isa active_isa() { return g_active; }

void force_isa(Isa isa) {
  if (!cpu_supports(isa)) {
    throw std::invalid_argument("simd: " + isa_name(isa) +
                                " not supported on this cpu");
  }
  table(isa);  // throws if not built in
  g_active = isa;
}

const Kernels& active() { return table(g_active); }

std::string isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace fhmc::simd
