#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhmc/adapt.hpp"
#include "fhmc/diagnostics.hpp"
#include "fhmc/targets.hpp"

namespace fhmc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TargetSpec {
  std::string name;
  std::string kind = "standard_normal";  // standard_normal | gaussian_spectrum
                                         // | banana | gauss_gamma
  int dim = 2;
  std::uint64_t seed = 0;                    // gaussian_spectrum
  ScaleLaw eigval_law = LognormalLaw{1.0};   // gaussian_spectrum
  ScaleLaw diag_law = LognormalLaw{2.0};     // gaussian_spectrum
  double curvature = 0.5, scale1 = 2.0;      // banana
  double shape = 2.0, rate = 1.0;            // gauss_gamma
};

struct SamplerSpec {
  std::string name;
  EstimatorKind estimator = EstimatorKind::diagonal;
  int num_warmup = 1000;
  int num_draws = 1000;
  int chains = 4;
  int max_depth = 10;
  double target_accept = 0.8;
  double gamma = 1e-5;
  double cutoff = 2.0;
  int l1 = 10;
  int l2 = 80;

  SamplerConfig to_sampler_config() const;
};

struct ExperimentConfig {
  int schema_version = 1;
  std::uint64_t seed = 0;
  std::string output_dir;
  int replications = 1;
  std::vector<TargetSpec> targets;
  std::vector<SamplerSpec> samplers;
};

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// Throws ConfigError with a field-path message on invalid input.
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

std::unique_ptr<TargetDensity> build_target(const TargetSpec& spec);
// Mean of the target when known analytically (reporting aid).
std::optional<Eigen::VectorXd> target_mean(const TargetSpec& spec);

// Documented seed fan-out: s <- mix64(s + golden + word) over
// (target index, sampler index, replication, chain); word 0 then seeds the
// initial-position draw, word 1 the chain RNG.
std::uint64_t run_chain_seed(std::uint64_t master, int target_idx,
                             int sampler_idx, int replication, int chain);

struct RunRecord {
  std::string target, sampler;
  int target_idx = 0, sampler_idx = 0, replication = 0;
  int dim = 0, chains = 0, num_warmup = 0, num_draws = 0;
  RunSummary summary;
  bool failed = false;
  std::string error;
};

nlohmann::json to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

struct ExperimentResult {
  std::vector<RunRecord> records;
  int exit_code = 0;  // 0 all converged, 1 failures or non-convergence
};

// Runs every (target, sampler, replication) on a worker pool of `jobs`
// threads (chain granularity) and writes draws/stats/summary files under
// output_dir. Deterministic under a fixed master seed except wall_time.
ExperimentResult run_experiment(const ExperimentConfig& config, int jobs = 0,
                                bool write_files = true);

struct SummaryRow {
  std::string target, sampler;
  int replication = 0;
  double min_ess = 0, max_rhat = 0, ess_per_grad = 0, wall_time_s = 0;
  long long n_grad_total = 0;
  bool converged = false, failed = false;
};

std::vector<SummaryRow> load_summary_rows(
    const std::vector<std::string>& jsonl_paths);

struct EcdfPoint {
  double value = 0, cum_fraction = 0;
};

struct CompareReport {
  // diagnostic -> sampler -> sorted ECDF
  std::map<std::string, std::map<std::string, std::vector<EcdfPoint>>> ecdf;
  // diagnostic -> sampler -> target -> median ratio vs reference
  std::map<std::string, std::map<std::string, std::map<std::string, double>>>
      ratios;
  // diagnostic -> sampler -> median over targets of the per-target ratios
  std::map<std::string, std::map<std::string, double>> median_ratio;
};

// Diagnostics reported: grad_per_ess, ess_per_grad, ess_per_sec, wall_time_s.
// Throws std::invalid_argument when a sampler shares no target with the
// reference kind.
CompareReport compare_report(const std::vector<SummaryRow>& rows,
                             const std::string& reference);

void write_compare_report(const CompareReport& report,
                          const std::string& output_dir);

struct KappaSimRow {
  int recipe = 0;
  long long window = 0;
  double kappa_fisher = 0, kappa_variance = 0, kappa_identity = 0;
};

struct KappaSimResult {
  std::vector<KappaSimRow> rows;
  // window -> (median fisher, median variance)
  std::map<long long, std::pair<double, double>> medians;
};

// Condition-number simulation over random covariance recipes: i.i.d. draws
// plus analytic scores feed the diagonal estimators, kappa' is computed on
// the whitened Hessian for each.
KappaSimResult kappa_sim(int n_recipes, int dim,
                         const std::vector<long long>& windows,
                         double eig_sigma, double diag_sigma,
                         std::uint64_t seed);

void write_kappa_sim(const KappaSimResult& result, const std::string& path);

}  // namespace fhmc
