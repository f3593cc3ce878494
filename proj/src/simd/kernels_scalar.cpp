#include <cmath>

#include "fhmc/simd/kernels.hpp"

namespace fhmc::simd::detail {

namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void add_scaled_scalar(const double* x, double a, const double* y, double* out,
                       std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * y[i];
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double dot3_scalar(const double* w, const double* x, const double* y,
                   std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += w[i] * x[i] * y[i];
  return acc;
}

void mul_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

void div_scalar(const double* x, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] / y[i];
}

void welford_step_scalar(double* mean, double* comp, double* m2,
                         const double* x, double inv_n, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double d = (x[i] - mean[i]) - comp[i];
    double incr = d * inv_n;
    // TwoSum of (mean, incr): s plus the exact rounding error
    double s = mean[i] + incr;
    double bb = s - mean[i];
    double err = (mean[i] - (s - bb)) + (incr - bb);
    comp[i] += err;
    mean[i] = s;
    m2[i] += d * ((x[i] - s) - comp[i]);
  }
}

bool all_finite_scalar(const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i])) return false;
  }
  return true;
}

}  // namespace

const Kernels scalar_kernels = {
    axpy_scalar, add_scaled_scalar, dot_scalar,          dot3_scalar,
    mul_scalar,  div_scalar,        welford_step_scalar, all_finite_scalar,
};

}  // namespace fhmc::simd::detail
