#include "fhmc/adapt.hpp"

#include "fhmc/spd.hpp"

#include <cmath>
#include <stdexcept>

namespace fhmc {

bool is_diagonal_family(EstimatorKind kind) {
  return kind == EstimatorKind::diagonal ||
         kind == EstimatorKind::variance_baseline ||
         kind == EstimatorKind::score_baseline;
}

WarmupSchedule WarmupSchedule::make(int num_warmup, EstimatorKind kind, int l1,
                                    int l2) {
  WarmupSchedule s;
  s.num_warmup = num_warmup;
  s.phase1_end = static_cast<int>(0.30 * num_warmup);
  s.phase2_end = static_cast<int>(0.85 * num_warmup);
  s.l1 = l1;
  s.l2 = l2;
  s.estimator = kind;
  if (!(0 < s.phase1_end && s.phase1_end < s.phase2_end &&
        s.phase2_end < num_warmup) ||
      l1 < 1 || l2 < 1) {
    throw std::invalid_argument("warmup schedule: invalid phase arithmetic");
  }
  return s;
}

int WarmupSchedule::phase_of(int iter) const {
  if (iter < phase1_end) return 1;
  if (iter < phase2_end) return 2;
  return 3;
}

long long WarmupSchedule::interval_of(int phase) const {
  return phase == 1 ? l1 : l2;
}

void DualAveraging::init(double eps0) {
  if (!(eps0 > 0)) throw std::invalid_argument("dual averaging: eps0 <= 0");
  mu = std::log(10.0 * eps0);
  log_eps = std::log(eps0);
  log_eps_bar = std::log(eps0);
  h_bar = 0.0;
  m = 1;
}

void DualAveraging::update(double accept_stat) {
  double md = static_cast<double>(m);
  double frac = 1.0 / (md + stabilizer);
  h_bar = (1.0 - frac) * h_bar + frac * (target_accept - accept_stat);
  log_eps = mu - std::sqrt(md) / shrink_scale * h_bar;
  double eta = std::pow(md, -decay);
  log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
  ++m;
}

double DualAveraging::eps() const { return std::exp(log_eps); }
double DualAveraging::eps_bar() const { return std::exp(log_eps_bar); }

double init_step_size(ChainTarget& target, const MassMatrix& mass,
                      const ChainState& state, Rng& rng) {
  const std::size_t d = state.x.size();
  PhasePoint z0;
  z0.x = state.x;
  z0.score = state.grad;
  z0.logp = state.logp;
  z0.rho.resize(d);
  mass.sample_momentum(rng, z0.rho);
  z0.velocity.resize(d);
  mass.velocity(z0.rho, z0.velocity);
  z0.energy = -z0.logp + mass.kinetic(z0.rho, z0.velocity);

  double eps = 1.0;
  bool any_finite = false;
  for (int it = 0; it < 50; ++it) {
    PhasePoint z1 = leapfrog(target, mass, z0, eps, 1);
    double a =
        z1.divergent ? 0.0 : std::exp(std::min(0.0, z0.energy - z1.energy));
    any_finite |= !z1.divergent;
    if (a >= 0.95) {
      eps *= 2.0;
    } else if (a <= 0.25) {
      eps *= 0.5;
    } else {
      return eps;
    }
  }
  if (!any_finite) throw std::runtime_error("cannot initialize step size");
  return eps;
}

void SamplerConfig::validate() const {
  if (num_warmup < 20) throw std::invalid_argument("config: num_warmup < 20");
  if (num_draws < 1) throw std::invalid_argument("config: num_draws < 1");
  if (max_depth < 0) throw std::invalid_argument("config: max_depth < 0");
  if (!(target_accept > 0 && target_accept < 1)) {
    throw std::invalid_argument("config: target_accept outside (0, 1)");
  }
  if (gamma < 0) throw std::invalid_argument("config: gamma < 0");
  if (estimator == EstimatorKind::low_rank && !(gamma > 0)) {
    throw std::invalid_argument("config: low_rank requires gamma > 0");
  }
  if (cutoff < 1) throw std::invalid_argument("config: cutoff < 1");
  if (l1 < 1 || l2 < 1) throw std::invalid_argument("config: L < 1");
}

namespace {

struct MassUpdater {
  EstimatorKind kind;
  double gamma;
  double cutoff;
  DiagonalMass prev_diag;         // diagonal-family fallback
  std::vector<double> prev_sigma2;  // low-rank diagonal-stage fallback

  // Returns true and replaces `mass` when the window has enough pairs. A
  // window whose regularized covariances fall outside the representable
  // spectrum keeps the previous mass; the next window gets another try.
  bool refresh(const DrawScoreWindow& window, MassMatrix& mass) {
    if (window.count() < 2) return false;
    try {
      return refresh_impl(window, mass);
    } catch (const spd::NotPositiveDefinite&) {
      return false;
    }
  }

  bool refresh_impl(const DrawScoreWindow& window, MassMatrix& mass) {
    switch (kind) {
      case EstimatorKind::diagonal: {
        auto m = DrawScoreMoments::from(window.draw_moments(),
                                        window.score_moments());
        prev_diag = estimate_diagonal(m, &prev_diag);
        mass = MassMatrix(prev_diag);
        return true;
      }
      case EstimatorKind::variance_baseline: {
        auto m = DrawScoreMoments::from(window.draw_moments(),
                                        window.score_moments());
        mass = MassMatrix(estimate_variance_baseline(m));
        return true;
      }
      case EstimatorKind::score_baseline: {
        auto m = DrawScoreMoments::from(window.draw_moments(),
                                        window.score_moments());
        mass = MassMatrix(estimate_score_baseline(m));
        return true;
      }
      case EstimatorKind::dense: {
        mass = MassMatrix(
            estimate_dense(window.draw_matrix(), window.score_matrix(), gamma));
        return true;
      }
      case EstimatorKind::low_rank: {
        LowRankMass lr =
            estimate_low_rank(window.draw_matrix(), window.score_matrix(),
                              cutoff, gamma, &prev_sigma2);
        for (std::size_t j = 0; j < prev_sigma2.size(); ++j) {
          prev_sigma2[j] = lr.sigma[j] * lr.sigma[j];
        }
        mass = MassMatrix(std::move(lr));
        return true;
      }
    }
    return false;
  }
};

}  // namespace

ChainResult warmup_and_sample(const TargetDensity& base,
                              const SamplerConfig& config,
                              std::span<const double> x0, std::uint64_t seed) {
  config.validate();
  const int d = base.dim();
  if (x0.size() != static_cast<std::size_t>(d)) {
    throw std::invalid_argument("warmup: initial point dimension mismatch");
  }
  WarmupSchedule schedule = WarmupSchedule::make(config.num_warmup,
                                                 config.estimator, config.l1,
                                                 config.l2);
  ChainTarget target(base);
  Rng rng(seed);

  ChainState state = make_chain_state(target, x0);

  DiagonalMass init = init_mass(state.grad);
  MassMatrix mass(init);

  MassUpdater updater{config.estimator, config.gamma, config.cutoff, init,
                      init.sigma2};

  WindowMode mode = is_diagonal_family(config.estimator)
                        ? WindowMode::moments
                        : WindowMode::buffered;
  DrawScoreWindow window(d, schedule.l1, mode);
  window.push(state.x, state.grad);

  double eps0 = init_step_size(target, mass, state, rng);
  DualAveraging da;
  da.target_accept = config.target_accept;
  da.init(eps0);

  const int total = config.num_warmup + config.num_draws;
  ChainResult result;
  result.dim = d;
  result.num_warmup = config.num_warmup;
  result.num_draws = config.num_draws;
  result.schedule = schedule;
  result.draws.resize(total, d);
  result.stats.resize(total);
  result.grad_cum.resize(total);
  if (config.record_warmup_sigma2) {
    result.warmup_sigma2.resize(config.num_warmup, d);
  }
  std::vector<double> pair_draws, pair_scores;
  auto record_pair = [&](std::span<const double> x, std::span<const double> g) {
    if (!config.record_warmup_pairs) return;
    pair_draws.insert(pair_draws.end(), x.begin(), x.end());
    pair_scores.insert(pair_scores.end(), g.begin(), g.end());
  };
  record_pair(state.x, state.grad);

  bool any_valid_draw = false;
  for (int t = 0; t < config.num_warmup; ++t) {
    int phase = schedule.phase_of(t);
    if (t == schedule.phase1_end) {
      // phase 2: larger window, fresh accumulators, step size research
      window = DrawScoreWindow(d, schedule.l2, mode);
      eps0 = init_step_size(target, mass, state, rng);
      da.init(eps0);
    }
    if (config.record_warmup_sigma2) {
      if (const DiagonalMass* dm = mass.diagonal()) {
        for (int j = 0; j < d; ++j) result.warmup_sigma2(t, j) = dm->sigma2[j];
      }
    }
    AcceptStatForm form = phase == 3 ? AcceptStatForm::symmetric
                                     : AcceptStatForm::metropolis;
    TransitionStats stats =
        nuts_transition(target, mass, state, da.eps(), config.max_depth, rng,
                        form);
    da.update(stats.accept_stat);
    any_valid_draw |= !stats.divergent;

    if (phase < 3) {
      bool pushed = window.push(state.x, state.grad);
      if (pushed) {
        record_pair(state.x, state.grad);
        bool refresh = is_diagonal_family(config.estimator)
                           ? true
                           : window.just_switched();
        if (refresh && updater.refresh(window, mass)) {
          if (config.record_mass_updates) {
            result.mass_updates.emplace_back(t, mass.dense_inv());
          }
        }
      }
    }
    for (int j = 0; j < d; ++j) result.draws(t, j) = state.x[j];
    result.stats[t] = stats;
    result.grad_cum[t] = target.grad_count();
  }
  if (!any_valid_draw) throw std::runtime_error("warmup failed");

  result.n_grad_warmup = target.grad_count();
  result.step_size = da.eps_bar();

  for (int t = config.num_warmup; t < total; ++t) {
    TransitionStats stats =
        nuts_transition(target, mass, state, result.step_size,
                        config.max_depth, rng, AcceptStatForm::metropolis);
    for (int j = 0; j < d; ++j) result.draws(t, j) = state.x[j];
    result.stats[t] = stats;
    result.grad_cum[t] = target.grad_count();
    result.n_divergent_sampling += stats.divergent ? 1 : 0;
  }
  result.n_grad_total = target.grad_count();
  result.mass = mass;

  if (config.record_warmup_pairs) {
    long long k = static_cast<long long>(pair_draws.size()) / d;
    result.warmup_pair_draws =
        Eigen::Map<const Eigen::MatrixXd>(pair_draws.data(), d, k);
    result.warmup_pair_scores =
        Eigen::Map<const Eigen::MatrixXd>(pair_scores.data(), d, k);
  }
  return result;
}

}  // namespace fhmc
