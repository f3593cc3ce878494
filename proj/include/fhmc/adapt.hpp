#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fhmc/accumulators.hpp"
#include "fhmc/estimators.hpp"
#include "fhmc/hmc.hpp"
#include "fhmc/mass_matrix.hpp"
#include "fhmc/targets.hpp"

namespace fhmc {

enum class EstimatorKind {
  diagonal,
  dense,
  low_rank,
  variance_baseline,
  score_baseline,
};

bool is_diagonal_family(EstimatorKind kind);

// Three warmup phases: mass + step size with L = l1, the same with L = l2 and
// a reinitialized step size, then step-size-only tuning with the symmetric
// acceptance statistic.
struct WarmupSchedule {
  int num_warmup = 0;
  int phase1_end = 0;  // floor(0.30 * num_warmup)
  int phase2_end = 0;  // floor(0.85 * num_warmup)
  int l1 = 10;
  int l2 = 80;
  EstimatorKind estimator = EstimatorKind::diagonal;

  static WarmupSchedule make(int num_warmup,
                             EstimatorKind kind = EstimatorKind::diagonal,
                             int l1 = 10, int l2 = 80);
  int phase_of(int iter) const;         // 1, 2 or 3
  long long interval_of(int phase) const;  // L for phases 1-2
};

// Nesterov dual averaging on log(eps) toward a target acceptance statistic.
struct DualAveraging {
  double target_accept = 0.8;
  double shrink_scale = 0.05;
  double stabilizer = 10.0;
  double decay = 0.75;

  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  long long m = 1;

  void init(double eps0);  // shrink target log(10 * eps0); resets m to 1
  void update(double accept_stat);
  double eps() const;
  double eps_bar() const;
};

// Coarse doubling/halving search from eps = 1 until the single-leapfrog
// acceptance lands inside (0.25, 0.95), capped at 50 adjustments. Throws
// "cannot initialize step size" when every probe diverged.
double init_step_size(ChainTarget& target, const MassMatrix& mass,
                      const ChainState& state, Rng& rng);

struct SamplerConfig {
  EstimatorKind estimator = EstimatorKind::diagonal;
  int num_warmup = 1000;
  int num_draws = 1000;
  int max_depth = 10;
  double target_accept = 0.8;
  double gamma = 1e-5;
  double cutoff = 2.0;
  int l1 = 10;
  int l2 = 80;

  // test instrumentation
  bool record_warmup_sigma2 = false;
  bool record_mass_updates = false;
  bool record_warmup_pairs = false;

  void validate() const;
};

struct ChainResult {
  int dim = 0;
  int num_warmup = 0;
  int num_draws = 0;
  WarmupSchedule schedule;
  Eigen::MatrixXd draws;                 // (num_warmup + num_draws) x dim
  std::vector<TransitionStats> stats;    // one per draw
  std::vector<long long> grad_cum;       // cumulative evals after each draw
  long long n_grad_warmup = 0;
  long long n_grad_total = 0;
  int n_divergent_sampling = 0;
  MassMatrix mass;
  double step_size = 0.0;

  // instrumentation (empty unless the matching config flag is set)
  Eigen::MatrixXd warmup_sigma2;  // num_warmup x dim; sigma2 used at each iter
  std::vector<std::pair<int, Eigen::MatrixXd>> mass_updates;  // iter, M^{-1}
  Eigen::MatrixXd warmup_pair_draws;   // d x pushes
  Eigen::MatrixXd warmup_pair_scores;  // d x pushes

  Eigen::MatrixXd sampling_draws() const {
    return draws.bottomRows(num_draws);
  }
};

// Full adaptive run of one chain: score-informed mass initialization, three
// warmup phases with foreground/background windows, then frozen sampling.
ChainResult warmup_and_sample(const TargetDensity& target,
                              const SamplerConfig& config,
                              std::span<const double> x0, std::uint64_t seed);

}  // namespace fhmc
