#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fhmc/experiment.hpp"

namespace {

int cmd_run(const std::string& config_path, int jobs,
            const std::string& output_override, long long seed_override,
            bool has_seed) {
  nlohmann::json doc;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file: " << config_path << "\n";
      return 2;
    }
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 2;
    }
  }
  fhmc::ExperimentConfig config;
  try {
    config = fhmc::parse_config(doc);
  } catch (const fhmc::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (!output_override.empty()) config.output_dir = output_override;
  if (has_seed) config.seed = static_cast<std::uint64_t>(seed_override);

  fhmc::ExperimentResult result = fhmc::run_experiment(config, jobs);
  int n_failed = 0, n_converged = 0;
  for (const auto& r : result.records) {
    if (r.failed) {
      ++n_failed;
      std::cerr << r.target << "/" << r.sampler << " rep " << r.replication
                << " failed: " << r.error << "\n";
    } else if (r.summary.converged) {
      ++n_converged;
    }
  }
  std::printf("%zu runs: %d converged, %d failed\n", result.records.size(),
              n_converged, n_failed);
  return result.exit_code;
}

int cmd_report(const std::vector<std::string>& summaries,
               const std::string& reference, const std::string& output_dir) {
  std::vector<fhmc::SummaryRow> rows;
  try {
    rows = fhmc::load_summary_rows(summaries);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  try {
    fhmc::CompareReport report = fhmc::compare_report(rows, reference);
    fhmc::write_compare_report(report, output_dir);
    for (const auto& [diag, samplers] : report.median_ratio) {
      for (const auto& [sampler, ratio] : samplers) {
        std::printf("median %s ratio, %s vs %s: %.4g\n", diag.c_str(),
                    sampler.c_str(), reference.c_str(), ratio);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int cmd_kappa_sim(int recipes, int dims, const std::string& windows_csv,
                  double eig_sigma, double diag_sigma, long long seed,
                  const std::string& output_dir) {
  std::vector<long long> windows;
  std::stringstream ss(windows_csv);
  for (std::string tok; std::getline(ss, tok, ',');) {
    windows.push_back(std::stoll(tok));
  }
  try {
    fhmc::KappaSimResult result = fhmc::kappa_sim(
        recipes, dims, windows, eig_sigma, diag_sigma,
        static_cast<std::uint64_t>(seed));
    std::filesystem::create_directories(output_dir);
    fhmc::write_kappa_sim(
        result,
        (std::filesystem::path(output_dir) / "kappa_sim.csv").string());
    for (const auto& [w, med] : result.medians) {
      std::printf("window %lld: median kappa' fisher %.4g, variance %.4g\n", w,
                  med.first, med.second);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

std::string default_output_dir() {
  const char* env = std::getenv("FHMC_OUTPUT_DIR");
  return env ? env : ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fhmc: No-U-Turn sampler with score-informed mass-matrix adaptation"};
  app.require_subcommand(1);

  std::string config_path, output_override, reference = "variance_baseline";
  std::vector<std::string> summaries;
  int jobs = 0;
  long long seed = 0;
  bool has_seed = false;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")
      ->required();
  run->add_option("--jobs", jobs, "worker threads (default: hardware)");
  run->add_option("--output", output_override, "output directory override");
  auto* seed_opt = run->add_option("--seed", seed, "master seed override");

  auto* report = app.add_subcommand("report", "compare sampler summaries");
  report->add_option("summaries", summaries, "summary.jsonl files")
      ->required()
      ->expected(-1);
  report->add_option("--reference", reference, "reference sampler kind")
      ->required();
  std::string report_out = default_output_dir();
  report->add_option("--output", report_out, "report output directory");

  auto* ks = app.add_subcommand("kappa-sim",
                                "condition-number simulation over random "
                                "covariance recipes");
  int recipes = 1000, dims = 50;
  std::string windows = "10,20,50";
  double eig_sigma = 1.0, diag_sigma = 2.0;
  long long ks_seed = 0;
  std::string ks_out = default_output_dir();
  ks->add_option("--recipes", recipes, "number of random recipes")->required();
  ks->add_option("--dims", dims, "dimension")->required();
  ks->add_option("--windows", windows, "comma-separated window sizes");
  ks->add_option("--eig-sigma", eig_sigma, "lognormal sd of eigenvalues");
  ks->add_option("--diag-sigma", diag_sigma, "lognormal sd of the diagonal");
  ks->add_option("--seed", ks_seed, "seed");
  ks->add_option("--output", ks_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  has_seed = seed_opt->count() > 0;

  if (run->parsed()) {
    return cmd_run(config_path, jobs, output_override, seed, has_seed);
  }
  if (report->parsed()) {
    return cmd_report(summaries, reference, report_out);
  }
  if (ks->parsed()) {
    return cmd_kappa_sim(recipes, dims, windows, eig_sigma, diag_sigma, ks_seed,
                         ks_out);
  }
  return 2;
}
