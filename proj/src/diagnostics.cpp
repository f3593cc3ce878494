#include "fhmc/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fhmc/spd.hpp"

namespace fhmc {

namespace {

void check_shapes(const std::vector<Eigen::MatrixXd>& chains,
                  long long min_draws) {
  if (chains.empty()) throw std::invalid_argument("diagnostics: no chains");
  for (const auto& c : chains) {
    if (c.rows() != chains[0].rows() || c.cols() != chains[0].cols()) {
      throw std::invalid_argument("diagnostics: chain shape mismatch");
    }
  }
  if (chains[0].rows() < min_draws) {
    throw std::invalid_argument("diagnostics: too few draws");
  }
}

// autocovariance at lag t of a centered series, 1/N normalization
double acov(const Eigen::VectorXd& y, long long t) {
  long long n = y.size();
  double s = 0.0;
  for (long long i = 0; i + t < n; ++i) s += y(i) * y(i + t);
  return s / static_cast<double>(n);
}

}  // namespace

Eigen::VectorXd effective_sample_size(
    const std::vector<Eigen::MatrixXd>& chains) {
  check_shapes(chains, 4);
  const long long m = static_cast<long long>(chains.size());
  const long long n = chains[0].rows();
  const long long d = chains[0].cols();
  const double total = static_cast<double>(m * n);
  const double cap = total * std::log10(total);

  Eigen::VectorXd ess(d);
  std::vector<Eigen::VectorXd> centered(m);
  for (long long j = 0; j < d; ++j) {
    Eigen::VectorXd means(m), s2(m);
    for (long long c = 0; c < m; ++c) {
      centered[c] = chains[c].col(j);
      means(c) = centered[c].mean();
      centered[c].array() -= means(c);
    }
    double w = 0.0;
    for (long long c = 0; c < m; ++c) {
      w += acov(centered[c], 0) * static_cast<double>(n) /
           static_cast<double>(n - 1);
    }
    w /= static_cast<double>(m);
    double var_plus = w * static_cast<double>(n - 1) / static_cast<double>(n);
    if (m > 1) {
      double mean_of_means = means.mean();
      var_plus += (means.array() - mean_of_means).square().sum() /
                  static_cast<double>(m - 1);
    }
    if (!(var_plus > 0) || !std::isfinite(var_plus)) {
      ess(j) = 0.0;  // degenerate: constant chains
      continue;
    }
    auto rho = [&](long long t) {
      double a = 0.0;
      for (long long c = 0; c < m; ++c) a += acov(centered[c], t);
      a /= static_cast<double>(m);
      return 1.0 - (w - a) / var_plus;
    };
    double sum_pairs = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (long long k = 0; 2 * k + 1 < n; ++k) {
      double p = rho(2 * k) + rho(2 * k + 1);
      if (p < 0) break;
      p = std::min(p, prev);
      sum_pairs += p;
      prev = p;
    }
    double tau = 2.0 * sum_pairs - 1.0;
    ess(j) = tau > total / cap ? std::min(total / tau, cap) : cap;
  }
  return ess;
}

Eigen::VectorXd split_rhat(const std::vector<Eigen::MatrixXd>& chains) {
  check_shapes(chains, 4);
  const long long m = static_cast<long long>(chains.size());
  const long long half = chains[0].rows() / 2;
  const long long d = chains[0].cols();
  const long long seqs = 2 * m;

  Eigen::VectorXd rhat(d);
  for (long long j = 0; j < d; ++j) {
    Eigen::VectorXd means(seqs), vars(seqs);
    for (long long c = 0; c < m; ++c) {
      for (int part = 0; part < 2; ++part) {
        Eigen::VectorXd seq = chains[c].col(j).segment(part * half, half);
        double mu = seq.mean();
        means(2 * c + part) = mu;
        vars(2 * c + part) =
            (seq.array() - mu).square().sum() / static_cast<double>(half - 1);
      }
    }
    double w = vars.mean();
    double b = static_cast<double>(half) *
               (means.array() - means.mean()).square().sum() /
               static_cast<double>(seqs - 1);
    if (!(w > 0) || !std::isfinite(w)) {
      rhat(j) = std::numeric_limits<double>::quiet_NaN();  // degenerate
      continue;
    }
    double var_plus = (static_cast<double>(half - 1) * w + b) /
                      static_cast<double>(half);
    rhat(j) = std::sqrt(var_plus / w);
  }
  return rhat;
}

std::vector<RmsePoint> rmse_trace(
    const std::vector<Eigen::MatrixXd>& chains, const Eigen::VectorXd& true_mean,
    const std::vector<std::vector<long long>>& grad_cum) {
  check_shapes(chains, 1);
  if (grad_cum.size() != chains.size()) {
    throw std::invalid_argument("rmse_trace: grad counter mismatch");
  }
  const long long n = chains[0].rows();
  const long long d = chains[0].cols();
  const long long m = static_cast<long long>(chains.size());
  std::vector<RmsePoint> out(n);
  for (long long c = 0; c < m; ++c) {
    if (static_cast<long long>(grad_cum[c].size()) != n) {
      throw std::invalid_argument("rmse_trace: grad counter length mismatch");
    }
    Eigen::VectorXd cum = Eigen::VectorXd::Zero(d);
    for (long long i = 0; i < n; ++i) {
      cum += chains[c].row(i).transpose();
      Eigen::VectorXd est = cum / static_cast<double>(i + 1);
      double rmse = std::sqrt((est - true_mean).squaredNorm() /
                              static_cast<double>(d));
      out[i].rmse += rmse;
      out[i].n_grad += static_cast<double>(grad_cum[c][i]);
    }
  }
  for (auto& p : out) {
    p.rmse /= static_cast<double>(m);
    p.n_grad /= static_cast<double>(m);
  }
  return out;
}

double preconditioned_kappa(const Eigen::MatrixXd& sigma,
                            const MassMatrix& mass) {
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw spd::NotPositiveDefinite("not positive definite");
  }
  Eigen::MatrixXd b = mass.dense_factor();
  Eigen::MatrixXd w = b.transpose() * llt.solve(b);
  auto eig = spd::spd_eigen(0.5 * (w + w.transpose()));
  return spd::kappa_prime(eig.lambda);
}

RunSummary summarize_run(const std::vector<ChainResult>& chains,
                         double wall_time_s) {
  if (chains.empty()) throw std::invalid_argument("summarize_run: no chains");
  std::vector<Eigen::MatrixXd> draws;
  RunSummary s;
  for (const auto& c : chains) {
    draws.push_back(c.sampling_draws());
    s.n_grad_warmup += c.n_grad_warmup;
    s.n_grad_total += c.n_grad_total;
    s.n_divergent += c.n_divergent_sampling;
  }
  s.n_grad_sampling = s.n_grad_total - s.n_grad_warmup;
  s.ess = effective_sample_size(draws);
  s.rhat = split_rhat(draws);
  s.min_ess = s.ess.minCoeff();
  s.max_rhat = s.rhat.maxCoeff();
  s.degenerate = (s.ess.array() == 0.0).any() || s.rhat.hasNaN();
  s.ess_per_grad = s.min_ess / static_cast<double>(s.n_grad_total);
  s.wall_time_s = wall_time_s;
  s.step_size = chains[0].step_size;
  s.converged = s.n_divergent == 0 && s.min_ess > 200.0;
  return s;
}

}  // namespace fhmc
