#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fhmc/adapt.hpp"
#include "fhmc/diagnostics.hpp"
#include "fhmc/spd.hpp"
#include "fhmc/targets.hpp"
#include "helpers.hpp"

using namespace fhmc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("phase boundaries split warmup 30/55/15") {
  WarmupSchedule s = WarmupSchedule::make(1000);
  CHECK(s.phase1_end == 300);
  CHECK(s.phase2_end == 850);
  CHECK(s.phase_of(0) == 1);
  CHECK(s.phase_of(299) == 1);
  CHECK(s.phase_of(300) == 2);
  CHECK(s.phase_of(849) == 2);
  CHECK(s.phase_of(850) == 3);
  CHECK(s.phase_of(999) == 3);
  for (int w = 20; w <= 5000; w += 7) {
    WarmupSchedule t = WarmupSchedule::make(w);
    REQUIRE(0 < t.phase1_end);
    REQUIRE(t.phase1_end < t.phase2_end);
    REQUIRE(t.phase2_end < w);
    REQUIRE(t.phase1_end == static_cast<int>(0.30 * w));
    REQUIRE(t.phase2_end == static_cast<int>(0.85 * w));
  }
}

TEST_CASE("dual averaging: fixed point, collapse and growth") {
  DualAveraging da;
  da.target_accept = 0.8;
  da.init(1.0);
  // constant on-target statistic freezes the averaged step size
  double prev = da.log_eps_bar;
  for (int i = 0; i < 1000; ++i) {
    da.update(0.8);
    if (i > 900) REQUIRE(std::abs(da.log_eps_bar - prev) < 1e-6);
    prev = da.log_eps_bar;
  }

  da.init(1.0);
  CHECK(da.m == 1);
  for (int i = 0; i < 100; ++i) da.update(0.0);
  CHECK(da.eps() < 0.01);

  da.init(1.0);
  for (int i = 0; i < 100; ++i) da.update(1.0);
  CHECK(da.eps() > 10.0);
}

TEST_CASE("init_step_size lands in sensible ranges") {
  Rng rng(3);
  // standard normal from the mode
  {
    GaussianTarget target(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    ChainTarget chain(target);
    std::vector<double> x0{0.0};
    ChainState state = make_chain_state(chain, x0);
    double eps = init_step_size(chain, MassMatrix::identity(1), state, rng);
    CHECK(eps >= 0.5);
    CHECK(eps <= 4.0);
  }
  // stiff target: the stability limit 2/sqrt(1e6) forces a tiny step
  {
    MatrixXd tiny(1, 1);
    tiny << 1e-6;
    GaussianTarget target(VectorXd::Zero(1), tiny);
    ChainTarget chain(target);
    std::vector<double> x0{0.0};
    ChainState state = make_chain_state(chain, x0);
    double eps = init_step_size(chain, MassMatrix::identity(1), state, rng);
    CHECK(eps < 0.01);
  }
}

TEST_CASE("warmup adapts unit scales on a standard normal") {
  int d = 10;
  GaussianTarget target(VectorXd::Zero(d), MatrixXd::Identity(d, d));
  SamplerConfig config;
  config.num_warmup = 1000;
  config.num_draws = 1000;
  std::vector<double> x0(d, 0.5);
  ChainResult result = warmup_and_sample(target, config, x0, 99);
  const DiagonalMass* dm = result.mass.diagonal();
  REQUIRE(dm != nullptr);
  for (int j = 0; j < d; ++j) {
    REQUIRE(dm->sigma2[j] > 0.5);
    REQUIRE(dm->sigma2[j] < 2.0);
  }
  CHECK(result.step_size > 0.0);
  CHECK(result.n_grad_total > result.n_grad_warmup);
  // grad counters are cumulative and consistent with per-draw stats
  long long prev = 0;
  for (int t = 0; t < result.num_warmup + result.num_draws; ++t) {
    REQUIRE(result.grad_cum[t] >= prev + result.stats[t].n_leapfrog);
    prev = result.grad_cum[t];
  }
}

TEST_CASE("coordinate rescaling leaves trajectory statistics identical") {
  // powers of two spanning roughly 1e-3..1e3 keep every floating-point
  // operation exactly equivariant, so the two runs must match bit for bit
  int d = 6;
  Rng maker(5);
  MatrixXd corr = MatrixXd::Identity(d, d);
  corr += 0.3 * oracle::random_spd(maker, d);
  GaussianTarget base(VectorXd::Zero(d), corr);
  std::vector<double> c{512.0, 0.001953125, 8.0, 1.0, 0.03125, 64.0};
  ScaledTarget scaled(base, c);

  SamplerConfig config;
  config.num_warmup = 300;
  config.num_draws = 200;
  std::vector<double> x0(d, 1.0);
  std::vector<double> theta0(d);
  for (int j = 0; j < d; ++j) theta0[j] = x0[j] / c[j];

  ChainResult a = warmup_and_sample(base, config, x0, 12345);
  ChainResult b = warmup_and_sample(scaled, config, theta0, 12345);
  for (int t = 0; t < config.num_warmup + config.num_draws; ++t) {
    REQUIRE(a.stats[t].tree_depth == b.stats[t].tree_depth);
    REQUIRE(a.stats[t].n_leapfrog == b.stats[t].n_leapfrog);
    REQUIRE(a.stats[t].divergent == b.stats[t].divergent);
    REQUIRE(a.stats[t].accept_stat == b.stats[t].accept_stat);  // bitwise
  }
  CHECK(a.step_size == b.step_size);
  // the draws themselves correspond through the rescaling
  for (int j = 0; j < d; ++j) {
    REQUIRE(a.draws(config.num_warmup + 10, j) ==
            c[j] * b.draws(config.num_warmup + 10, j));
  }
}

TEST_CASE("the mass serving draw n uses exactly the pairs in [a_n, n)") {
  int d = 3;
  Rng maker(7);
  GaussianTarget target(VectorXd::Zero(d), oracle::random_spd(maker, d));
  SamplerConfig config;
  config.num_warmup = 240;
  config.num_draws = 5;
  config.record_warmup_sigma2 = true;
  config.record_warmup_pairs = true;
  std::vector<double> x0(d, 0.4);
  ChainResult r = warmup_and_sample(target, config, x0, 77);
  // pairs: the initial position plus one per phase-1/2 iteration
  REQUIRE(r.warmup_pair_draws.cols() == 1 + r.schedule.phase2_end);

  const WarmupSchedule& s = r.schedule;
  DiagonalMass prev = init_mass(
      std::span<const double>(r.warmup_pair_scores.col(0).data(), d));
  // replay phase 1 and the boundary: the mass used at iteration t is the
  // refresh after iteration t-1's push, i.e. n = t + 1 pushed pairs (pair 0
  // is the initial position), window [a_n, n)
  for (int t = 0; t <= s.phase1_end; ++t) {
    long long n = t + 1;
    long long a = window_start(n, s.l1);
    DiagonalMass expect = prev;
    if (n - a >= 2) {
      MatrixXd dw = r.warmup_pair_draws.middleCols(a, n - a);
      MatrixXd sw = r.warmup_pair_scores.middleCols(a, n - a);
      expect = estimate_diagonal(DrawScoreMoments::from(dw, sw), &prev);
    }
    for (int j = 0; j < d; ++j) {
      REQUIRE(r.warmup_sigma2(t, j) ==
              doctest::Approx(expect.sigma2[j]).epsilon(1e-12));
    }
    prev = expect;
  }
  // replay a stretch of phase 2: pairs restart at the phase boundary
  long long base = s.phase1_end + 1;  // pairs pushed before phase 2 began
  for (int t = s.phase1_end + 1; t < s.phase1_end + 100; ++t) {
    long long n = t - s.phase1_end;  // pairs pushed within phase 2
    long long a = window_start(n, s.l2);
    DiagonalMass expect = prev;
    if (n - a >= 2) {
      MatrixXd dw = r.warmup_pair_draws.middleCols(base + a, n - a);
      MatrixXd sw = r.warmup_pair_scores.middleCols(base + a, n - a);
      expect = estimate_diagonal(DrawScoreMoments::from(dw, sw), &prev);
    }
    for (int j = 0; j < d; ++j) {
      REQUIRE(r.warmup_sigma2(t, j) ==
              doctest::Approx(expect.sigma2[j]).epsilon(1e-12));
    }
    prev = expect;
  }
}

TEST_CASE("dense adaptation walks toward the target covariance") {
  // Once the window estimates reach their noise floor, any fixed-length
  // run of strictly decreasing distances is a coin flip, so the convergence
  // check compares the late updates against the early ones instead.
  // d exceeds the phase-1 window size, so the early estimates are genuinely
  // under-determined while the final phase-2 window pins the covariance
  int d = 12;
  Rng maker(9);
  MatrixXd sigma = oracle::random_spd(maker, d);
  GaussianTarget target(VectorXd::Zero(d), sigma);
  SamplerConfig config;
  config.estimator = EstimatorKind::dense;
  config.num_warmup = 200;
  config.num_draws = 2;
  config.record_mass_updates = true;
  int improved = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<double> x0(d, 6.0);
    ChainResult r = warmup_and_sample(target, config, x0, 1000 + seed);
    if (r.mass_updates.size() < 4) continue;
    ++total;
    std::size_t m = r.mass_updates.size();
    double first = spd::airm_distance(r.mass_updates[0].second, sigma);
    double last = spd::airm_distance(r.mass_updates[m - 1].second, sigma);
    double mid = spd::airm_distance(r.mass_updates[m - 2].second, sigma);
    improved += (last < first && mid < first) ? 1 : 0;
  }
  REQUIRE(total == 50);
  CHECK(improved >= 40);
}

TEST_CASE("a fully non-finite start errors out") {
  GaussGammaTarget target(2, 2.0, 1.0);
  SamplerConfig config;
  config.num_warmup = 30;
  config.num_draws = 1;
  std::vector<double> x0{0.0, 800.0};  // exp overflows: bad initial point
  CHECK_THROWS_AS(warmup_and_sample(target, config, x0, 3),
                  std::invalid_argument);
}

TEST_CASE("config validation rejects bad shapes") {
  SamplerConfig config;
  config.num_warmup = 10;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.num_warmup = 100;
  config.num_draws = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.num_draws = 10;
  config.cutoff = 0.5;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  config.cutoff = 2.0;
  config.estimator = EstimatorKind::low_rank;
  config.gamma = 0.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}
