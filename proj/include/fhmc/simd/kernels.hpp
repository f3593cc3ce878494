#pragma once

#include <cstddef>
#include <string>

namespace fhmc::simd {

// Hot vector kernels used by the leapfrog integrator, momentum algebra and the
// streaming accumulators. A scalar reference implementation always exists;
// AVX2 (x86-64) and NEON (aarch64) variants are selected at runtime when the
// CPU supports them. The environment variable FHMC_SIMD=scalar|avx2|neon
// overrides the automatic choice.
//
// Elementwise kernels are bit-identical across implementations (no fused
// multiply-add, no reordering). Reductions (dot, dot3) fix their own lane
// order, so they are deterministic per implementation but may differ from the
// scalar reference by rounding of the final horizontal sum.
struct Kernels {
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out[i] = x[i] + a * y[i]
  void (*add_scaled)(const double* x, double a, const double* y, double* out,
                     std::size_t n);
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w[i] * x[i] * y[i]
  double (*dot3)(const double* w, const double* x, const double* y,
                 std::size_t n);
  // out[i] = x[i] * y[i]
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // out[i] = x[i] / y[i]
  void (*div)(const double* x, const double* y, double* out, std::size_t n);
  // one Welford update with a compensated (two-double) running mean:
  //   d  = (x - mean) - comp
  //   s  = mean + d * inv_n, capturing the rounding error into comp
  //   m2 += d * ((x - s) - comp')
  // The compensation keeps deviations accurate for means far from zero.
  void (*welford_step)(double* mean, double* comp, double* m2, const double* x,
                       double inv_n, std::size_t n);
  bool (*all_finite)(const double* x, std::size_t n);
};

enum class Isa { scalar, avx2, neon };

const Kernels& table(Isa isa);  // throws std::invalid_argument if not built in
bool isa_available(Isa isa);
Isa active_isa();
void force_isa(Isa isa);  // for tests and the FHMC_SIMD override
const Kernels& active();
std::string isa_name(Isa isa);

inline void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}
inline void add_scaled(const double* x, double a, const double* y, double* out,
                       std::size_t n) {
  active().add_scaled(x, a, y, out, n);
}
inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline double dot3(const double* w, const double* x, const double* y,
                   std::size_t n) {
  return active().dot3(w, x, y, n);
}
inline void mul(const double* x, const double* y, double* out, std::size_t n) {
  active().mul(x, y, out, n);
}
inline void div(const double* x, const double* y, double* out, std::size_t n) {
  active().div(x, y, out, n);
}
inline void welford_step(double* mean, double* comp, double* m2,
                         const double* x, double inv_n, std::size_t n) {
  active().welford_step(mean, comp, m2, x, inv_n, n);
}
inline bool all_finite(const double* x, std::size_t n) {
  return active().all_finite(x, n);
}

namespace detail {
extern const Kernels scalar_kernels;
#if defined(FHMC_HAVE_AVX2)
extern const Kernels avx2_kernels;
#endif
#if defined(FHMC_HAVE_NEON)
extern const Kernels neon_kernels;
#endif
}  // namespace detail

}  // namespace fhmc::simd
