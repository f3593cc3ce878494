#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fhmc/adapt.hpp"
#include "fhmc/mass_matrix.hpp"

namespace fhmc {

// Bulk effective sample size per parameter: pooled autocovariances across
// chains, Geyer initial-monotone-sequence truncation, capped at
// N_total * log10(N_total). Constant input yields 0 (degenerate). Each chain
// matrix is draws x parameters; chains must agree in shape, >= 4 draws.
Eigen::VectorXd effective_sample_size(
    const std::vector<Eigen::MatrixXd>& chains);

// Split potential scale reduction: every chain is halved, R = sqrt(var+/W)
// over the resulting sequences. Constant input yields NaN (degenerate).
Eigen::VectorXd split_rhat(const std::vector<Eigen::MatrixXd>& chains);

struct RmsePoint {
  double n_grad = 0.0;
  double rmse = 0.0;
};

// Cumulative-mean RMSE against the known mean, indexed by the cumulative
// gradient-evaluation count and averaged across chains.
std::vector<RmsePoint> rmse_trace(
    const std::vector<Eigen::MatrixXd>& chains, const Eigen::VectorXd& true_mean,
    const std::vector<std::vector<long long>>& grad_cum);

// kappa' of the whitened Hessian spectrum eig(B^T Sigma^{-1} B), B B^T = M^{-1}.
double preconditioned_kappa(const Eigen::MatrixXd& sigma,
                            const MassMatrix& mass);

struct RunSummary {
  Eigen::VectorXd ess;
  Eigen::VectorXd rhat;
  long long n_grad_warmup = 0;
  long long n_grad_sampling = 0;
  long long n_grad_total = 0;
  int n_divergent = 0;  // sampling-phase divergences
  double min_ess = 0.0;
  double max_rhat = 0.0;
  double ess_per_grad = 0.0;  // min(ess) / n_grad_total
  double wall_time_s = 0.0;
  double step_size = 0.0;
  bool degenerate = false;
  bool converged = false;  // no sampling divergences and min(ess) > 200
};

RunSummary summarize_run(const std::vector<ChainResult>& chains,
                         double wall_time_s);

}  // namespace fhmc
