#include "fhmc/simd/kernels.hpp"

#if defined(FHMC_HAVE_NEON)

#include <arm_neon.h>

namespace fhmc::simd::detail {

namespace {

// Same contract as the AVX2 file: elementwise kernels keep the scalar op
// order (separate mul and add), reductions fix their own lane order.

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  std::size_t i = 0;
  float64x2_t va = vdupq_n_f64(a);
  for (; i + 2 <= n; i += 2) {
    float64x2_t vx = vld1q_f64(x + i);
    float64x2_t vy = vld1q_f64(y + i);
    vst1q_f64(y + i, vaddq_f64(vy, vmulq_f64(va, vx)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void add_scaled_neon(const double* x, double a, const double* y, double* out,
                     std::size_t n) {
  std::size_t i = 0;
  float64x2_t va = vdupq_n_f64(a);
  for (; i + 2 <= n; i += 2) {
    float64x2_t vx = vld1q_f64(x + i);
    float64x2_t vy = vld1q_f64(y + i);
    vst1q_f64(out + i, vaddq_f64(vx, vmulq_f64(va, vy)));
  }
  for (; i < n; ++i) out[i] = x[i] + a * y[i];
}

double dot_neon(const double* x, const double* y, std::size_t n) {
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) total += x[i] * y[i];
  return total;
}

double dot3_neon(const double* w, const double* x, const double* y,
                 std::size_t n) {
  std::size_t i = 0;
  float64x2_t acc = vdupq_n_f64(0.0);
  for (; i + 2 <= n; i += 2) {
    float64x2_t p = vmulq_f64(vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i)),
                              vld1q_f64(y + i));
    acc = vaddq_f64(acc, p);
  }
  double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) total += w[i] * x[i] * y[i];
  return total;
}

void mul_neon(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void div_neon(const double* x, const double* y, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i, vdivq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] / y[i];
}

void welford_step_neon(double* mean, double* comp, double* m2, const double* x,
                       double inv_n, std::size_t n) {
  std::size_t i = 0;
  float64x2_t vinv = vdupq_n_f64(inv_n);
  for (; i + 2 <= n; i += 2) {
    float64x2_t vx = vld1q_f64(x + i);
    float64x2_t vmean = vld1q_f64(mean + i);
    float64x2_t vcomp = vld1q_f64(comp + i);
    float64x2_t d = vsubq_f64(vsubq_f64(vx, vmean), vcomp);
    float64x2_t incr = vmulq_f64(d, vinv);
    float64x2_t s = vaddq_f64(vmean, incr);
    float64x2_t bb = vsubq_f64(s, vmean);
    float64x2_t err = vaddq_f64(vsubq_f64(vmean, vsubq_f64(s, bb)),
                                vsubq_f64(incr, bb));
    vcomp = vaddq_f64(vcomp, err);
    vst1q_f64(comp + i, vcomp);
    vst1q_f64(mean + i, s);
    float64x2_t vm2 = vld1q_f64(m2 + i);
    float64x2_t d2 = vsubq_f64(vsubq_f64(vx, s), vcomp);
    vm2 = vaddq_f64(vm2, vmulq_f64(d, d2));
    vst1q_f64(m2 + i, vm2);
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

bool all_finite_neon(const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - x[i];
    if (!(d == 0.0)) return false;
  }
  return true;
}

}  // namespace

const Kernels neon_kernels = {
    axpy_neon, add_scaled_neon, dot_neon,          dot3_neon,
    mul_neon,  div_neon,        welford_step_neon, all_finite_neon,
};

}  // namespace fhmc::simd::detail

#endif  // FHMC_HAVE_NEON
