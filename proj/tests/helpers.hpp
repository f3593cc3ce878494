#pragma once

// Test-only oracles: finite differences, batch statistics, matrix-log
// geodesics, numeric minimizers and distribution tests. Everything here is
// independent of the library code paths it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "fhmc/rng.hpp"
#include "fhmc/targets.hpp"

namespace oracle {

// central finite-difference gradient of logp
inline Eigen::VectorXd fd_gradient(const fhmc::TargetDensity& target,
                                   const Eigen::VectorXd& x,
                                   double step = 1e-6) {
  int d = target.dim();
  Eigen::VectorXd g(d), dump(d);
  std::vector<double> buf(d), grad(d);
  auto logp_at = [&](const Eigen::VectorXd& p) {
    for (int j = 0; j < d; ++j) buf[j] = p(j);
    return target.logp_grad(buf, grad);
  };
  for (int j = 0; j < d; ++j) {
    Eigen::VectorXd hi = x, lo = x;
    hi(j) += step;
    lo(j) -= step;
    g(j) = (logp_at(hi) - logp_at(lo)) / (2.0 * step);
  }
  return g;
}

struct BatchStats {
  std::vector<double> mean, variance;  // unbiased
};

// two-pass reference statistics with compensated sums
inline BatchStats batch_stats(const std::vector<std::vector<double>>& rows) {
  std::size_t n = rows.size(), d = rows[0].size();
  auto kahan = [](double& sum, double& comp, double v) {
    double y = v - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  BatchStats s;
  s.mean.assign(d, 0.0);
  s.variance.assign(d, 0.0);
  std::vector<double> comp(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) kahan(s.mean[j], comp[j], r[j]);
  }
  for (std::size_t j = 0; j < d; ++j) s.mean[j] /= static_cast<double>(n);
  comp.assign(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) {
      double dlt = r[j] - s.mean[j];
      kahan(s.variance[j], comp[j], dlt * dlt);
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    s.variance[j] /= static_cast<double>(n - 1);
  }
  return s;
}

// matrix log and exp of SPD matrices via their eigendecompositions
inline Eigen::MatrixXd spd_logm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors() *
         es.eigenvalues().array().log().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

inline Eigen::MatrixXd sym_expm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  return es.eigenvectors() *
         es.eigenvalues().array().exp().matrix().asDiagonal() *
         es.eigenvectors().transpose();
}

// geodesic point A^{1/2} expm(t logm(A^{-1/2} B A^{-1/2})) A^{1/2}
inline Eigen::MatrixXd airm_geodesic(const Eigen::MatrixXd& a,
                                     const Eigen::MatrixXd& b, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::MatrixXd a_half = es.eigenvectors() *
                           es.eigenvalues().array().sqrt().matrix().asDiagonal() *
                           es.eigenvectors().transpose();
  Eigen::MatrixXd a_mhalf =
      es.eigenvectors() *
      es.eigenvalues().array().rsqrt().matrix().asDiagonal() *
      es.eigenvectors().transpose();
  Eigen::MatrixXd w = a_mhalf * b * a_mhalf;
  return a_half * sym_expm(t * spd_logm(0.5 * (w + w.transpose()))) * a_half;
}

inline Eigen::MatrixXd random_spd(fhmc::Rng& rng, int d, double jitter = 0.5) {
  Eigen::MatrixXd z(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) z(i, j) = rng.normal();
  }
  return z * z.transpose() / d + jitter * Eigen::MatrixXd::Identity(d, d);
}

// gradient descent with numeric central-difference gradients and a
// backtracking line search; used to minimize divergence objectives without
// touching their closed forms
inline Eigen::VectorXd minimize_numeric(
    const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
    int iters = 4000, double fd_step = 1e-7) {
  int d = static_cast<int>(x.size());
  double step = 0.1;
  double fx = f(x);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd g(d);
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd hi = x, lo = x;
      hi(j) += fd_step;
      lo(j) -= fd_step;
      g(j) = (f(hi) - f(lo)) / (2.0 * fd_step);
    }
    double gn = g.norm();
    if (gn < 1e-13) break;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd cand = x - step * g;
      double fc = f(cand);
      if (fc < fx) {
        x = cand;
        fx = fc;
        step *= 1.3;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return x;
}

// one-sample Kolmogorov-Smirnov statistic against a CDF
inline double ks_statistic(std::vector<double> values,
                           const std::function<double(double)>& cdf) {
  std::sort(values.begin(), values.end());
  double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double c = cdf(values[i]);
    d = std::max(d, std::abs(c - static_cast<double>(i + 1) / n));
    d = std::max(d, std::abs(c - static_cast<double>(i) / n));
  }
  return d;
}

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// asymptotic KS critical value; c(0.01) = 1.628
inline double ks_critical(double n, double alpha = 0.01) {
  double c = alpha == 0.01 ? 1.62762 : 1.35810;
  return c / std::sqrt(n);
}

inline std::vector<double> ar1_series(fhmc::Rng& rng, std::size_t n,
                                      double rho) {
  std::vector<double> x(n);
  double s = rng.normal();
  double innov = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = s;
    s = rho * s + innov * rng.normal();
  }
  return x;
}

}  // namespace oracle
