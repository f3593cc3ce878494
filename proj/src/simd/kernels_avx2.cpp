#include "fhmc/simd/kernels.hpp"

#if defined(FHMC_HAVE_AVX2)

#include <immintrin.h>

namespace fhmc::simd::detail {

namespace {

// Elementwise kernels mirror the scalar op order exactly (mul then add, no
// fma), so they stay bit-identical to the reference. Reductions use four
// accumulator lanes and a fixed horizontal-sum order.

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  __m256d va = _mm256_set1_pd(a);
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_scaled_avx2(const double* x, double a, const double* y, double* out,
                     std::size_t n) {
  std::size_t i = 0;
  __m256d va = _mm256_set1_pd(a);
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(out + i, _mm256_add_pd(vx, _mm256_mul_pd(va, vy)));
  }
  for (; i < n; ++i) out[i] = x[i] + a * y[i];
}

inline double hsum(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return ((lane[0] + lane[1]) + lane[2]) + lane[3];
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(vx, vy));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += x[i] * y[i];
  return hsum(acc) + tail;
}

double dot3_avx2(const double* w, const double* x, const double* y,
                 std::size_t n) {
  std::size_t i = 0;
  __m256d acc = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d vw = _mm256_loadu_pd(w + i);
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vy = _mm256_loadu_pd(y + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_mul_pd(vw, vx), vy));
  }
  double tail = 0.0;
  for (; i < n; ++i) tail += w[i] * x[i] * y[i];
  return hsum(acc) + tail;
}

void mul_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void div_avx2(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_div_pd(_mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] / y[i];
}

void welford_step_avx2(double* mean, double* comp, double* m2, const double* x,
                       double inv_n, std::size_t n) {
  std::size_t i = 0;
  __m256d vinv = _mm256_set1_pd(inv_n);
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    __m256d vmean = _mm256_loadu_pd(mean + i);
    __m256d vcomp = _mm256_loadu_pd(comp + i);
    __m256d d = _mm256_sub_pd(_mm256_sub_pd(vx, vmean), vcomp);
    __m256d incr = _mm256_mul_pd(d, vinv);
    __m256d s = _mm256_add_pd(vmean, incr);
    __m256d bb = _mm256_sub_pd(s, vmean);
    __m256d err = _mm256_add_pd(_mm256_sub_pd(vmean, _mm256_sub_pd(s, bb)),
                                _mm256_sub_pd(incr, bb));
    vcomp = _mm256_add_pd(vcomp, err);
    _mm256_storeu_pd(comp + i, vcomp);
    _mm256_storeu_pd(mean + i, s);
    __m256d vm2 = _mm256_loadu_pd(m2 + i);
    __m256d d2 = _mm256_sub_pd(_mm256_sub_pd(vx, s), vcomp);
    vm2 = _mm256_add_pd(vm2, _mm256_mul_pd(d, d2));
    _mm256_storeu_pd(m2 + i, vm2);
  }
  for (; i < n; ++i) {
    double d = (x[i] - mean[i]) - comp[i];
    double incr = d * inv_n;
    double s = mean[i] + incr;
    double bb = s - mean[i];
    double err = (mean[i] - (s - bb)) + (incr - bb);
    comp[i] += err;
    mean[i] = s;
    m2[i] += d * ((x[i] - s) - comp[i]);
  }
}

bool all_finite_avx2(const double* x, std::size_t n) {
  std::size_t i = 0;
  __m256d zero = _mm256_setzero_pd();
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_loadu_pd(x + i);
    // x - x is 0 for finite values and NaN for inf/NaN
    __m256d d = _mm256_sub_pd(vx, vx);
    __m256d ok = _mm256_cmp_pd(d, zero, _CMP_EQ_OQ);
    if (_mm256_movemask_pd(ok) != 0xF) return false;
  }
  for (; i < n; ++i) {
    double d = x[i] - x[i];
    if (!(d == 0.0)) return false;
  }
  return true;
}

}  // namespace

const Kernels avx2_kernels = {
    axpy_avx2, add_scaled_avx2, dot_avx2,          dot3_avx2,
    mul_avx2,  div_avx2,        welford_step_avx2, all_finite_avx2,
};

}  // namespace fhmc::simd::detail

#endif  // FHMC_HAVE_AVX2
