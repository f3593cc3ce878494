#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "fhmc/accumulators.hpp"

namespace fhmc {

// Inverse mass M^{-1} = diag(sigma2) plus the location estimate.
struct DiagonalMass {
  std::vector<double> sigma2;
  std::vector<double> mu;
};

struct DenseMass {
  Eigen::MatrixXd inv_mass;  // M^{-1}
  Eigen::MatrixXd factor;    // lower-triangular B, B B^T = M^{-1}
  Eigen::VectorXd mu;
  double gamma = 0.0;
};

// M^{-1} = diag(sigma) (I + U (diag(lam) - I) U^T) diag(sigma), U orthonormal.
struct LowRankMass {
  std::vector<double> sigma;  // diagonal-stage scale; sigma^2 is the diagonal
                              // divergence minimizer
  Eigen::MatrixXd u;          // d x r
  Eigen::VectorXd lam;        // retained eigenvalues, every one >= cutoff or
                              // <= 1/cutoff
  Eigen::VectorXd mu1;
  std::vector<double> mu2;
  double cutoff = 2.0;
  double gamma = 1e-5;
};

// Per-coordinate first/second moments of a draw/score window.
struct DrawScoreMoments {
  long long count = 0;
  std::vector<double> draw_mean, draw_var, score_mean, score_var;

  static DrawScoreMoments from(const Welford& draws, const Welford& scores);
  static DrawScoreMoments from(const Eigen::MatrixXd& draws,
                               const Eigen::MatrixXd& scores);
};

inline constexpr double kSigma2Floor = 1e-20;
inline constexpr double kSigma2Ceil = 1e20;
inline constexpr double kVarFloor = 1e-20;
inline constexpr double kInitMassFloor = 1e-10;
inline constexpr double kInitMassCeil = 1e10;

// First mass matrix, from the score at the initial position alone:
// M^{-1} = diag(1 / score0^2), clamped, zero scores mapping to 1. The squared
// score keeps the whole adaptation exactly equivariant under coordinate
// rescaling (scores scale with c, so M^{-1} scales with c^{-2}, matching the
// rescaled covariance).
DiagonalMass init_mass(std::span<const double> score0);

// sigma2_j = sqrt(var(x_j) / var(score_j)), mu = mean(x) + sigma2 . mean(score).
// Coordinates with either variance below kVarFloor fall back to prev (or 1).
DiagonalMass estimate_diagonal(const DrawScoreMoments& moments,
                               const DiagonalMass* prev = nullptr);

// M^{-1} = spd_solve_mean(cov(score) + gamma I, cov(draw) + gamma I), i.e. the
// SPD solution of M^{-1} (cov(score) + gamma I) M^{-1} = cov(draw) + gamma I.
DenseMass estimate_dense(const Eigen::MatrixXd& draws,
                         const Eigen::MatrixXd& scores, double gamma);

// Two-stage transform: the diagonal scale above, then a low-rank correction on
// the jointly spanned subspace of whitened draws and scores, keeping only
// eigenvalues outside (1/cutoff, cutoff).
LowRankMass estimate_low_rank(const Eigen::MatrixXd& draws,
                              const Eigen::MatrixXd& scores, double cutoff,
                              double gamma,
                              const std::vector<double>* prev_sigma2 = nullptr);

// KL minimizers used as baselines: draw variance and reciprocal score variance.
DiagonalMass estimate_variance_baseline(const DrawScoreMoments& moments);
DiagonalMass estimate_score_baseline(const DrawScoreMoments& moments);

// Dense reconstruction of the low-rank inverse mass (diagnostics and tests).
Eigen::MatrixXd low_rank_dense_inv(const LowRankMass& m);

}  // namespace fhmc
