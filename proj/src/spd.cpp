#include "fhmc/spd.hpp"

#include <cmath>

namespace fhmc::spd {

namespace {

constexpr double kEigenFloor = 1e-14;  // relative to lambda_max

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd apply_spectral(const EigenDecomposition& e,
                               const Eigen::VectorXd& f_lambda) {
  return symmetrize(e.u * f_lambda.asDiagonal() * e.u.transpose());
}

}  // namespace

EigenDecomposition spd_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("spd_eigen: matrix must be square, nonempty");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrize(a));
  if (solver.info() != Eigen::Success) {
    throw NotPositiveDefinite("not positive definite");
  }
  Eigen::VectorXd lam = solver.eigenvalues();  // ascending
  double lmax = lam(lam.size() - 1);
  if (!(lmax > 0) || lam(0) <= kEigenFloor * lmax) {
    throw NotPositiveDefinite("not positive definite");
  }
  EigenDecomposition out;
  out.lambda = lam.reverse();
  out.u = solver.eigenvectors().rowwise().reverse();
  return out;
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a) {
  auto e = spd_eigen(a);
  return apply_spectral(e, e.lambda.cwiseSqrt());
}

Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& a) {
  auto e = spd_eigen(a);
  return apply_spectral(e, e.lambda.cwiseSqrt().cwiseInverse());
}

Eigen::MatrixXd spd_solve_mean(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("spd_solve_mean: dimension mismatch");
  }
  auto ea = spd_eigen(a);
  Eigen::MatrixXd a_half = apply_spectral(ea, ea.lambda.cwiseSqrt());
  Eigen::MatrixXd a_half_inv =
      apply_spectral(ea, ea.lambda.cwiseSqrt().cwiseInverse());
  Eigen::MatrixXd inner = spd_sqrt(symmetrize(a_half * b * a_half));
  return symmetrize(a_half_inv * inner * a_half_inv);
}

Eigen::MatrixXd geometric_mean(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("geometric_mean: dimension mismatch");
  }
  auto ea = spd_eigen(a);
  Eigen::MatrixXd a_half = apply_spectral(ea, ea.lambda.cwiseSqrt());
  Eigen::MatrixXd a_half_inv =
      apply_spectral(ea, ea.lambda.cwiseSqrt().cwiseInverse());
  Eigen::MatrixXd inner = spd_sqrt(symmetrize(a_half_inv * b * a_half_inv));
  return symmetrize(a_half * inner * a_half);
}

double airm_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  auto ea = spd_eigen(a);
  Eigen::MatrixXd a_half_inv =
      apply_spectral(ea, ea.lambda.cwiseSqrt().cwiseInverse());
  auto ew = spd_eigen(symmetrize(a_half_inv * b * a_half_inv));
  return ew.lambda.array().log().matrix().norm();
}

double kappa_prime(const Eigen::VectorXd& hessian_spectrum) {
  if (hessian_spectrum.size() == 0 || (hessian_spectrum.array() <= 0).any()) {
    throw std::invalid_argument("kappa_prime: spectrum must be positive");
  }
  double lmax = hessian_spectrum.maxCoeff();
  double sum = (lmax / hessian_spectrum.array()).square().sum();
  return std::pow(sum, 0.25);
}

GaussianDivergences gaussian_divergences(
    const Eigen::VectorXd& sigma_spectrum) {
  if (sigma_spectrum.size() == 0 || (sigma_spectrum.array() <= 0).any()) {
    throw std::invalid_argument(
        "gaussian_divergences: spectrum must be positive");
  }
  auto lam = sigma_spectrum.array();
  GaussianDivergences d;
  d.fisher = (lam + lam.inverse() - 2.0).sum();
  d.kl_draws = 0.5 * (lam - lam.log() - 1.0).sum();
  d.kl_scores = 0.5 * (lam.inverse() + lam.log() - 1.0).sum();
  return d;
}

}  // namespace fhmc::spd
