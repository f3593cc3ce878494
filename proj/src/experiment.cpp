#include "fhmc/experiment.hpp"

#include <algorithm>

#include "fhmc/spd.hpp"
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

namespace fhmc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json law_to_json(const ScaleLaw& law) {
  if (const auto* ln = std::get_if<LognormalLaw>(&law)) {
    return {{"type", "lognormal"}, {"sigma", ln->sigma}};
  }
  if (const auto* ex = std::get_if<ExponentialLaw>(&law)) {
    return {{"type", "exponential"}, {"rate", ex->rate}};
  }
  return {{"type", "fixed"}, {"value", std::get<FixedLaw>(law).value}};
}

ScaleLaw law_from_json(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("type")) {
    throw ConfigError(path + ": expected law object with a type field");
  }
  std::string type = j.at("type").get<std::string>();
  if (type == "lognormal") return LognormalLaw{j.value("sigma", 1.0)};
  if (type == "exponential") return ExponentialLaw{j.value("rate", 1.0)};
  if (type == "fixed") return FixedLaw{j.value("value", 1.0)};
  throw ConfigError(path + ".type: unknown law '" + type + "'");
}

template <typename T>
T require(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(path + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

template <typename T>
T optional_field(const json& j, const std::string& key, T fallback,
                 const std::string& path) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

void run_pool(std::vector<std::function<void()>>& tasks, int jobs) {
  if (jobs <= 0) {
    jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
  }
  jobs = std::min<int>(jobs, static_cast<int>(tasks.size()));
  if (jobs <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        tasks[i]();
      }
    });
  }
  for (auto& w : workers) w.join();
}

std::string run_basename(const RunRecord& r) {
  return r.target + "__" + r.sampler + "__rep" + std::to_string(r.replication);
}

std::string sanitize_csv(std::string s) {
  for (auto& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

void write_draws_csv(const std::string& path,
                     const std::vector<ChainResult>& chains) {
  std::ofstream out(path);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "chain,iteration,warmup";
  for (int j = 0; j < chains[0].dim; ++j) out << ",x" << j;
  out << "\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& r = chains[c];
    for (int t = 0; t < r.num_warmup + r.num_draws; ++t) {
      out << c << ',' << t << ',' << (t < r.num_warmup ? 1 : 0);
      for (int j = 0; j < r.dim; ++j) out << ',' << fmt_double(r.draws(t, j));
      out << '\n';
    }
  }
}

void write_stats_csv(const std::string& path,
                     const std::vector<ChainResult>& chains) {
  std::ofstream out(path);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "chain,iteration,warmup,tree_depth,n_leapfrog,divergent,accept_stat,"
         "delta_h,n_grad_cum\n";
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& r = chains[c];
    for (int t = 0; t < r.num_warmup + r.num_draws; ++t) {
      const auto& s = r.stats[t];
      out << c << ',' << t << ',' << (t < r.num_warmup ? 1 : 0) << ','
          << s.tree_depth << ',' << s.n_leapfrog << ',' << (s.divergent ? 1 : 0)
          << ',' << fmt_double(s.accept_stat) << ',' << fmt_double(s.delta_h)
          << ',' << r.grad_cum[t] << '\n';
    }
  }
}

const char* kSummaryHeader =
    "target,sampler,replication,dim,chains,num_warmup,num_draws,min_ess,"
    "max_rhat,ess_per_grad,n_grad_warmup,n_grad_sampling,n_grad_total,"
    "n_divergent,step_size,converged,degenerate,failed,error,wall_time_s";

void write_summary_csv_row(std::ofstream& out, const RunRecord& r) {
  out << r.target << ',' << r.sampler << ',' << r.replication << ',' << r.dim
      << ',' << r.chains << ',' << r.num_warmup << ',' << r.num_draws << ','
      << fmt_double(r.summary.min_ess) << ',' << fmt_double(r.summary.max_rhat)
      << ',' << fmt_double(r.summary.ess_per_grad) << ','
      << r.summary.n_grad_warmup << ',' << r.summary.n_grad_sampling << ','
      << r.summary.n_grad_total << ',' << r.summary.n_divergent << ','
      << fmt_double(r.summary.step_size) << ',' << (r.summary.converged ? 1 : 0)
      << ',' << (r.summary.degenerate ? 1 : 0) << ',' << (r.failed ? 1 : 0)
      << ',' << sanitize_csv(r.error) << ','
      << fmt_double(r.summary.wall_time_s) << '\n';
}

}  // namespace

SamplerConfig SamplerSpec::to_sampler_config() const {
  SamplerConfig c;
  c.estimator = estimator;
  c.num_warmup = num_warmup;
  c.num_draws = num_draws;
  c.max_depth = max_depth;
  c.target_accept = target_accept;
  c.gamma = gamma;
  c.cutoff = cutoff;
  c.l1 = l1;
  c.l2 = l2;
  return c;
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::diagonal:
      return "diagonal";
    case EstimatorKind::dense:
      return "dense";
    case EstimatorKind::low_rank:
      return "low_rank";
    case EstimatorKind::variance_baseline:
      return "variance_baseline";
    case EstimatorKind::score_baseline:
      return "score_baseline";
  }
  return "unknown";
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "diagonal") return EstimatorKind::diagonal;
  if (name == "dense") return EstimatorKind::dense;
  if (name == "low_rank") return EstimatorKind::low_rank;
  if (name == "variance_baseline") return EstimatorKind::variance_baseline;
  if (name == "score_baseline") return EstimatorKind::score_baseline;
  throw ConfigError("unknown estimator kind '" + name + "'");
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  c.schema_version = optional_field(doc, "schema_version", 1, "config");
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("config.schema_version: unsupported version");
  }
  c.seed = optional_field<std::uint64_t>(doc, "seed", 0, "config");
  c.output_dir = optional_field<std::string>(doc, "output_dir", "", "config");
  c.replications = optional_field(doc, "replications", 1, "config");
  if (c.replications < 1) throw ConfigError("config.replications: must be >= 1");

  const json& targets = doc.contains("targets") ? doc.at("targets") : json();
  if (!targets.is_array() || targets.empty()) {
    throw ConfigError("config.targets: expected a non-empty array");
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::string path = "config.targets[" + std::to_string(i) + "]";
    const json& t = targets[i];
    TargetSpec spec;
    spec.name = require<std::string>(t, "name", path);
    spec.kind = require<std::string>(t, "kind", path);
    spec.dim = require<int>(t, "dim", path);
    if (spec.dim < 1) throw ConfigError(path + ".dim: must be >= 1");
    spec.seed = optional_field<std::uint64_t>(t, "seed", 0, path);
    if (spec.kind == "gaussian_spectrum") {
      if (t.contains("eigval_law")) {
        spec.eigval_law = law_from_json(t.at("eigval_law"), path + ".eigval_law");
      }
      if (t.contains("diag_law")) {
        spec.diag_law = law_from_json(t.at("diag_law"), path + ".diag_law");
      }
    } else if (spec.kind == "banana") {
      spec.curvature = optional_field(t, "curvature", 0.5, path);
      spec.scale1 = optional_field(t, "scale1", 2.0, path);
    } else if (spec.kind == "gauss_gamma") {
      spec.shape = optional_field(t, "shape", 2.0, path);
      spec.rate = optional_field(t, "rate", 1.0, path);
    } else if (spec.kind != "standard_normal") {
      throw ConfigError(path + ".kind: unknown target kind '" + spec.kind + "'");
    }
    c.targets.push_back(std::move(spec));
  }

  const json& samplers = doc.contains("samplers") ? doc.at("samplers") : json();
  if (!samplers.is_array() || samplers.empty()) {
    throw ConfigError("config.samplers: expected a non-empty array");
  }
  for (std::size_t i = 0; i < samplers.size(); ++i) {
    std::string path = "config.samplers[" + std::to_string(i) + "]";
    const json& s = samplers[i];
    SamplerSpec spec;
    spec.estimator = estimator_from_name(require<std::string>(s, "estimator", path));
    spec.name = optional_field<std::string>(s, "name",
                                            estimator_name(spec.estimator), path);
    spec.num_warmup = optional_field(s, "num_warmup", 1000, path);
    spec.num_draws = optional_field(s, "num_draws", 1000, path);
    spec.chains = optional_field(s, "chains", 4, path);
    spec.max_depth = optional_field(s, "max_depth", 10, path);
    spec.target_accept = optional_field(s, "target_accept", 0.8, path);
    spec.gamma = optional_field(s, "gamma", 1e-5, path);
    spec.cutoff = optional_field(s, "cutoff", 2.0, path);
    spec.l1 = optional_field(s, "l1", 10, path);
    spec.l2 = optional_field(s, "l2", 80, path);
    if (spec.chains < 1) throw ConfigError(path + ".chains: must be >= 1");
    if (spec.num_warmup < 20) {
      throw ConfigError(path + ".num_warmup: must be >= 20");
    }
    if (spec.num_draws < 1) throw ConfigError(path + ".num_draws: must be >= 1");
    try {
      spec.to_sampler_config().validate();
    } catch (const std::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
    c.samplers.push_back(std::move(spec));
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json targets = json::array();
  for (const auto& t : c.targets) {
    json jt{{"name", t.name}, {"kind", t.kind}, {"dim", t.dim}, {"seed", t.seed}};
    if (t.kind == "gaussian_spectrum") {
      jt["eigval_law"] = law_to_json(t.eigval_law);
      jt["diag_law"] = law_to_json(t.diag_law);
    } else if (t.kind == "banana") {
      jt["curvature"] = t.curvature;
      jt["scale1"] = t.scale1;
    } else if (t.kind == "gauss_gamma") {
      jt["shape"] = t.shape;
      jt["rate"] = t.rate;
    }
    targets.push_back(std::move(jt));
  }
  json samplers = json::array();
  for (const auto& s : c.samplers) {
    samplers.push_back(json{{"name", s.name},
                            {"estimator", estimator_name(s.estimator)},
                            {"num_warmup", s.num_warmup},
                            {"num_draws", s.num_draws},
                            {"chains", s.chains},
                            {"max_depth", s.max_depth},
                            {"target_accept", s.target_accept},
                            {"gamma", s.gamma},
                            {"cutoff", s.cutoff},
                            {"l1", s.l1},
                            {"l2", s.l2}});
  }
  return json{{"schema_version", c.schema_version},
              {"seed", c.seed},
              {"output_dir", c.output_dir},
              {"replications", c.replications},
              {"targets", std::move(targets)},
              {"samplers", std::move(samplers)}};
}

std::unique_ptr<TargetDensity> build_target(const TargetSpec& spec) {
  if (spec.kind == "standard_normal") {
    return std::make_unique<GaussianTarget>(
        Eigen::VectorXd::Zero(spec.dim),
        Eigen::MatrixXd::Identity(spec.dim, spec.dim));
  }
  if (spec.kind == "gaussian_spectrum") {
    SpectrumRecipe recipe{spec.dim, spec.eigval_law, spec.diag_law, spec.seed};
    return std::make_unique<GaussianTarget>(Eigen::VectorXd::Zero(spec.dim),
                                            generate_spectrum_sigma(recipe));
  }
  if (spec.kind == "banana") {
    return std::make_unique<BananaTarget>(spec.dim, spec.curvature, spec.scale1);
  }
  if (spec.kind == "gauss_gamma") {
    return std::make_unique<GaussGammaTarget>(spec.dim, spec.shape, spec.rate);
  }
  throw ConfigError("unknown target kind '" + spec.kind + "'");
}

std::optional<Eigen::VectorXd> target_mean(const TargetSpec& spec) {
  if (spec.kind == "standard_normal" || spec.kind == "gaussian_spectrum") {
    return Eigen::VectorXd::Zero(spec.dim);
  }
  return std::nullopt;
}

std::uint64_t run_chain_seed(std::uint64_t master, int target_idx,
                             int sampler_idx, int replication, int chain) {
  std::uint64_t s = master;
  s = seed_chain(s, static_cast<std::uint64_t>(target_idx));
  s = seed_chain(s, static_cast<std::uint64_t>(sampler_idx));
  s = seed_chain(s, static_cast<std::uint64_t>(replication));
  s = seed_chain(s, static_cast<std::uint64_t>(chain));
  return s;
}

json to_json(const RunRecord& r) {
  json j{{"schema_version", kSchemaVersion},
         {"target", r.target},
         {"sampler", r.sampler},
         {"replication", r.replication},
         {"dim", r.dim},
         {"chains", r.chains},
         {"num_warmup", r.num_warmup},
         {"num_draws", r.num_draws},
         {"min_ess", r.summary.min_ess},
         {"max_rhat", r.summary.max_rhat},
         {"ess_per_grad", r.summary.ess_per_grad},
         {"n_grad_warmup", r.summary.n_grad_warmup},
         {"n_grad_sampling", r.summary.n_grad_sampling},
         {"n_grad_total", r.summary.n_grad_total},
         {"n_divergent", r.summary.n_divergent},
         {"step_size", r.summary.step_size},
         {"converged", r.summary.converged},
         {"degenerate", r.summary.degenerate},
         {"failed", r.failed},
         {"error", r.error},
         {"wall_time_s", r.summary.wall_time_s}};
  std::vector<double> ess(r.summary.ess.data(),
                          r.summary.ess.data() + r.summary.ess.size());
  std::vector<double> rhat(r.summary.rhat.data(),
                           r.summary.rhat.data() + r.summary.rhat.size());
  for (auto& v : rhat) {
    if (!std::isfinite(v)) v = -1.0;  // JSON has no NaN
  }
  j["ess"] = ess;
  j["rhat"] = rhat;
  return j;
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.target = j.at("target").get<std::string>();
  r.sampler = j.at("sampler").get<std::string>();
  r.replication = j.at("replication").get<int>();
  r.dim = j.value("dim", 0);
  r.chains = j.value("chains", 0);
  r.num_warmup = j.value("num_warmup", 0);
  r.num_draws = j.value("num_draws", 0);
  r.summary.min_ess = j.value("min_ess", 0.0);
  r.summary.max_rhat = j.value("max_rhat", 0.0);
  r.summary.ess_per_grad = j.value("ess_per_grad", 0.0);
  r.summary.n_grad_warmup = j.value("n_grad_warmup", 0LL);
  r.summary.n_grad_sampling = j.value("n_grad_sampling", 0LL);
  r.summary.n_grad_total = j.value("n_grad_total", 0LL);
  r.summary.n_divergent = j.value("n_divergent", 0);
  r.summary.step_size = j.value("step_size", 0.0);
  r.summary.converged = j.value("converged", false);
  r.summary.degenerate = j.value("degenerate", false);
  r.summary.wall_time_s = j.value("wall_time_s", 0.0);
  r.failed = j.value("failed", false);
  r.error = j.value("error", "");
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config, int jobs,
                                bool write_files) {
  std::string out_dir = config.output_dir;
  if (out_dir.empty()) {
    const char* env = std::getenv("FHMC_OUTPUT_DIR");
    out_dir = env ? env : ".";
  }
  if (write_files) fs::create_directories(out_dir);

  struct RunTask {
    RunRecord record;
    const TargetSpec* target_spec;
    const SamplerSpec* sampler_spec;
    std::shared_ptr<TargetDensity> target;
    std::vector<ChainResult> chains;
    std::vector<double> chain_seconds;
  };

  std::vector<RunTask> runs;
  for (std::size_t ti = 0; ti < config.targets.size(); ++ti) {
    std::shared_ptr<TargetDensity> target;
    std::string build_error;
    try {
      target = build_target(config.targets[ti]);
    } catch (const std::exception& e) {
      build_error = e.what();
    }
    for (std::size_t si = 0; si < config.samplers.size(); ++si) {
      for (int rep = 0; rep < config.replications; ++rep) {
        RunTask task;
        task.record.target = config.targets[ti].name;
        task.record.sampler = config.samplers[si].name;
        task.record.target_idx = static_cast<int>(ti);
        task.record.sampler_idx = static_cast<int>(si);
        task.record.replication = rep;
        task.record.dim = config.targets[ti].dim;
        task.record.chains = config.samplers[si].chains;
        task.record.num_warmup = config.samplers[si].num_warmup;
        task.record.num_draws = config.samplers[si].num_draws;
        task.target_spec = &config.targets[ti];
        task.sampler_spec = &config.samplers[si];
        task.target = target;
        if (!build_error.empty()) {
          task.record.failed = true;
          task.record.error = build_error;
        }
        task.chains.resize(config.samplers[si].chains);
        task.chain_seconds.assign(config.samplers[si].chains, 0.0);
        runs.push_back(std::move(task));
      }
    }
  }

  std::vector<std::vector<std::string>> chain_errors(runs.size());
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    chain_errors[ri].resize(runs[ri].record.chains);
  }
  std::vector<std::function<void()>> tasks;
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    RunTask& run = runs[ri];
    if (run.record.failed) continue;
    for (int chain = 0; chain < run.record.chains; ++chain) {
      tasks.push_back([&run, &chain_errors, ri, chain, &config] {
        try {
          std::uint64_t cs =
              run_chain_seed(config.seed, run.record.target_idx,
                             run.record.sampler_idx, run.record.replication,
                             chain);
          Rng init_rng(seed_chain(cs, 0));
          std::vector<double> x0(run.record.dim);
          for (auto& v : x0) v = init_rng.uniform_range(-2.0, 2.0);
          auto t0 = std::chrono::steady_clock::now();
          run.chains[chain] =
              warmup_and_sample(*run.target, run.sampler_spec->to_sampler_config(),
                                x0, seed_chain(cs, 1));
          run.chain_seconds[chain] =
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
        } catch (const std::exception& e) {
          chain_errors[ri][chain] = e.what();
        }
      });
    }
  }
  run_pool(tasks, jobs);

  ExperimentResult result;
  bool any_failed = false, all_converged = true;
  for (std::size_t ri = 0; ri < runs.size(); ++ri) {
    RunTask& run = runs[ri];
    if (!run.record.failed) {
      for (const auto& err : chain_errors[ri]) {
        if (!err.empty()) {
          run.record.failed = true;
          run.record.error = err;
          break;
        }
      }
    }
    if (!run.record.failed) {
      double wall = 0.0;
      for (double s : run.chain_seconds) wall += s;
      try {
        run.record.summary = summarize_run(run.chains, wall);
      } catch (const std::exception& e) {
        run.record.failed = true;
        run.record.error = e.what();
      }
    }
    if (run.record.failed) {
      any_failed = true;
    } else {
      all_converged &= run.record.summary.converged;
      if (write_files) {
        std::string base = run_basename(run.record);
        write_draws_csv((fs::path(out_dir) / ("draws_" + base + ".csv")).string(),
                        run.chains);
        write_stats_csv((fs::path(out_dir) / ("stats_" + base + ".csv")).string(),
                        run.chains);
      }
    }
    result.records.push_back(run.record);
  }

  if (write_files) {
    std::ofstream csv((fs::path(out_dir) / "summary.csv").string());
    csv << "# schema_version=" << kSchemaVersion << "\n" << kSummaryHeader << "\n";
    std::ofstream jsonl((fs::path(out_dir) / "summary.jsonl").string());
    for (const auto& r : result.records) {
      write_summary_csv_row(csv, r);
      jsonl << to_json(r).dump() << "\n";
    }
  }
  result.exit_code = (any_failed || !all_converged) ? 1 : 0;
  return result;
}

std::vector<SummaryRow> load_summary_rows(
    const std::vector<std::string>& jsonl_paths) {
  std::vector<SummaryRow> rows;
  for (const auto& path : jsonl_paths) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open summary file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      RunRecord r = run_record_from_json(json::parse(line));
      SummaryRow row;
      row.target = r.target;
      row.sampler = r.sampler;
      row.replication = r.replication;
      row.min_ess = r.summary.min_ess;
      row.max_rhat = r.summary.max_rhat;
      row.ess_per_grad = r.summary.ess_per_grad;
      row.wall_time_s = r.summary.wall_time_s;
      row.n_grad_total = r.summary.n_grad_total;
      row.converged = r.summary.converged;
      row.failed = r.failed;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

CompareReport compare_report(const std::vector<SummaryRow>& rows,
                             const std::string& reference) {
  auto diag_value = [](const SummaryRow& r,
                       const std::string& diag) -> std::optional<double> {
    if (r.failed || r.min_ess <= 0) return std::nullopt;
    if (diag == "grad_per_ess") {
      return static_cast<double>(r.n_grad_total) / r.min_ess;
    }
    if (diag == "ess_per_grad") return r.ess_per_grad;
    if (diag == "ess_per_sec") {
      return r.wall_time_s > 0 ? std::optional<double>(r.min_ess / r.wall_time_s)
                               : std::nullopt;
    }
    if (diag == "wall_time_s") return r.wall_time_s;
    return std::nullopt;
  };
  const std::vector<std::string> diagnostics{"grad_per_ess", "ess_per_grad",
                                             "ess_per_sec", "wall_time_s"};

  // sampler -> target -> diagnostic -> values over replications
  std::map<std::string, std::map<std::string, std::map<std::string,
                                                       std::vector<double>>>>
      values;
  for (const auto& r : rows) {
    for (const auto& d : diagnostics) {
      if (auto v = diag_value(r, d)) values[r.sampler][r.target][d].push_back(*v);
    }
  }
  if (!values.count(reference)) {
    throw std::invalid_argument("reference kind '" + reference +
                                "' not present in summaries");
  }
  const auto& ref_targets = values.at(reference);

  CompareReport report;
  for (const auto& [sampler, targets] : values) {
    for (const auto& d : diagnostics) {
      std::vector<EcdfPoint> ecdf;
      std::vector<double> all;
      for (const auto& [target, diags] : targets) {
        auto it = diags.find(d);
        if (it != diags.end()) {
          all.insert(all.end(), it->second.begin(), it->second.end());
        }
      }
      std::sort(all.begin(), all.end());
      for (std::size_t i = 0; i < all.size(); ++i) {
        ecdf.push_back({all[i], static_cast<double>(i + 1) /
                                    static_cast<double>(all.size())});
      }
      report.ecdf[d][sampler] = std::move(ecdf);
    }
    if (sampler == reference) continue;
    bool shared = false;
    for (const auto& [target, diags] : targets) {
      if (ref_targets.count(target)) shared = true;
    }
    if (!shared) {
      throw std::invalid_argument("sampler '" + sampler +
                                  "' shares no target with the reference");
    }
    for (const auto& d : diagnostics) {
      std::vector<double> target_ratios;
      for (const auto& [target, diags] : targets) {
        auto it = diags.find(d);
        auto ref_it = ref_targets.find(target);
        if (it == diags.end() || ref_it == ref_targets.end()) continue;
        auto ref_vals = ref_it->second.find(d);
        if (ref_vals == ref_it->second.end()) continue;
        const auto& mine = it->second;
        const auto& ref = ref_vals->second;
        std::vector<double> ratios;
        if (mine.size() == ref.size()) {
          for (std::size_t i = 0; i < mine.size(); ++i) {
            if (ref[i] != 0) ratios.push_back(mine[i] / ref[i]);
          }
        } else {
          double rm = median(ref);
          if (rm != 0) {
            for (double v : mine) ratios.push_back(v / rm);
          }
        }
        if (!ratios.empty()) {
          double m = median(ratios);
          report.ratios[d][sampler][target] = m;
          target_ratios.push_back(m);
        }
      }
      if (!target_ratios.empty()) {
        report.median_ratio[d][sampler] = median(target_ratios);
      }
    }
  }
  return report;
}

void write_compare_report(const CompareReport& report,
                          const std::string& output_dir) {
  fs::create_directories(output_dir);
  {
    std::ofstream out((fs::path(output_dir) / "ecdf.csv").string());
    out << "# schema_version=" << kSchemaVersion << "\n";
    out << "diagnostic,sampler,value,cum_fraction\n";
    for (const auto& [diag, samplers] : report.ecdf) {
      for (const auto& [sampler, points] : samplers) {
        for (const auto& p : points) {
          out << diag << ',' << sampler << ',' << fmt_double(p.value) << ','
              << fmt_double(p.cum_fraction) << '\n';
        }
      }
    }
  }
  {
    std::ofstream out((fs::path(output_dir) / "ratios.csv").string());
    out << "# schema_version=" << kSchemaVersion << "\n";
    out << "diagnostic,sampler,target,median_ratio\n";
    for (const auto& [diag, samplers] : report.ratios) {
      for (const auto& [sampler, targets] : samplers) {
        for (const auto& [target, ratio] : targets) {
          out << diag << ',' << sampler << ',' << target << ','
              << fmt_double(ratio) << '\n';
        }
      }
    }
  }
}

KappaSimResult kappa_sim(int n_recipes, int dim,
                         const std::vector<long long>& windows,
                         double eig_sigma, double diag_sigma,
                         std::uint64_t seed) {
  if (n_recipes < 1 || dim < 1 || windows.empty()) {
    throw std::invalid_argument("kappa_sim: need recipes >= 1, dim >= 1, windows");
  }
  long long max_window = *std::max_element(windows.begin(), windows.end());
  KappaSimResult result;
  std::map<long long, std::pair<std::vector<double>, std::vector<double>>> acc;

  for (int r = 0; r < n_recipes; ++r) {
    SpectrumRecipe recipe{dim, LognormalLaw{eig_sigma}, LognormalLaw{diag_sigma},
                          seed_chain(seed, static_cast<std::uint64_t>(r))};
    GaussianTarget target(Eigen::VectorXd::Zero(dim),
                          generate_spectrum_sigma(recipe));
    double kappa_id = spd::kappa_prime(
        spd::spd_eigen(target.precision()).lambda);

    Rng rng(seed_chain(recipe.seed, 0x5a11));
    Eigen::MatrixXd draws(dim, max_window), scores(dim, max_window);
    Eigen::VectorXd x, s;
    for (long long k = 0; k < max_window; ++k) {
      target.sample_with_score(rng, x, s);
      draws.col(k) = x;
      scores.col(k) = s;
    }
    for (long long w : windows) {
      auto moments = DrawScoreMoments::from(draws.leftCols(w), scores.leftCols(w));
      MassMatrix fisher{MassMatrix(estimate_diagonal(moments))};
      MassMatrix variance{MassMatrix(estimate_variance_baseline(moments))};
      KappaSimRow row;
      row.recipe = r;
      row.window = w;
      row.kappa_fisher = preconditioned_kappa(target.sigma(), fisher);
      row.kappa_variance = preconditioned_kappa(target.sigma(), variance);
      row.kappa_identity = kappa_id;
      acc[w].first.push_back(row.kappa_fisher);
      acc[w].second.push_back(row.kappa_variance);
      result.rows.push_back(row);
    }
  }
  for (auto& [w, vals] : acc) {
    result.medians[w] = {median(vals.first), median(vals.second)};
  }
  return result;
}

void write_kappa_sim(const KappaSimResult& result, const std::string& path) {
  std::ofstream out(path);
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "recipe,window,kappa_fisher,kappa_variance,kappa_identity\n";
  for (const auto& r : result.rows) {
    out << r.recipe << ',' << r.window << ',' << fmt_double(r.kappa_fisher)
        << ',' << fmt_double(r.kappa_variance) << ','
        << fmt_double(r.kappa_identity) << '\n';
  }
}

}  // namespace fhmc
