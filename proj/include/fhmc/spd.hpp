#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace fhmc::spd {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Eigenpairs of a symmetric positive-definite matrix, eigenvalues descending.
// Throws NotPositiveDefinite if any eigenvalue falls below 1e-14 * lambda_max;
// callers are expected to regularize first.
struct EigenDecomposition {
  Eigen::MatrixXd u;
  Eigen::VectorXd lambda;
};

EigenDecomposition spd_eigen(const Eigen::MatrixXd& a);

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a);
Eigen::MatrixXd spd_inv_sqrt(const Eigen::MatrixXd& a);

// Unique SPD solution of Sigma * A * Sigma = B, computed as
// A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}. Equals geometric_mean(A^{-1}, B).
Eigen::MatrixXd spd_solve_mean(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b);

// Geodesic midpoint A # B = A^{1/2} (A^{-1/2} B A^{-1/2})^{1/2} A^{1/2} in the
// affine-invariant metric; symmetric in its arguments.
Eigen::MatrixXd geometric_mean(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b);

// || log(A^{-1/2} B A^{-1/2}) ||_F
double airm_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// (sum_i (max(lambda) / lambda_i)^2)^{1/4} over a Hessian spectrum. Lower
// bound is d^{1/4}, reached when the spectrum is flat.
double kappa_prime(const Eigen::VectorXd& hessian_spectrum);

// Divergences from N(0, diag(lambda)) to the standard normal.
struct GaussianDivergences {
  double fisher;     // sum lambda + 1/lambda - 2
  double kl_draws;   // 0.5 sum (lambda - log lambda - 1)
  double kl_scores;  // 0.5 sum (1/lambda + log lambda - 1)
};

GaussianDivergences gaussian_divergences(const Eigen::VectorXd& sigma_spectrum);

}  // namespace fhmc::spd
