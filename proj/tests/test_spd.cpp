#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "fhmc/spd.hpp"
#include "helpers.hpp"

using namespace fhmc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("spd_eigen orders eigenvalues descending and reconstructs") {
  Rng rng(2);
  MatrixXd a = oracle::random_spd(rng, 7);
  auto e = spd::spd_eigen(a);
  for (int i = 1; i < e.lambda.size(); ++i) REQUIRE(e.lambda(i - 1) >= e.lambda(i));
  CHECK((e.u.transpose() * e.u - MatrixXd::Identity(7, 7)).norm() < 1e-10);
  MatrixXd back = e.u * e.lambda.asDiagonal() * e.u.transpose();
  CHECK((back - a).norm() / a.norm() < 1e-9);
  MatrixXd indef = a;
  indef(0, 0) = -10.0;
  indef = 0.5 * (indef + indef.transpose()).eval();
  CHECK_THROWS_AS(spd::spd_solve_mean(indef, a), spd::NotPositiveDefinite);
}

TEST_CASE("spd_solve_mean solves Sigma A Sigma = B") {
  Rng rng(3);

  // identity and scalar cases
  MatrixXd a = oracle::random_spd(rng, 5);
  CHECK((spd::spd_solve_mean(a, a) - MatrixXd::Identity(5, 5)).norm() < 1e-10);
  MatrixXd qa(1, 1), qb(1, 1);
  qa << 0.25;
  qb << 9.0;
  CHECK(spd::spd_solve_mean(qa, qb)(0, 0) == doctest::Approx(6.0).epsilon(1e-12));

  // the Riccati residual over random pairs and sizes
  for (int rep = 0; rep < 200; ++rep) {
    int d = 2 + static_cast<int>(rng.uniform() * 19);  // 2..20
    MatrixXd pa = oracle::random_spd(rng, d);
    MatrixXd pb = oracle::random_spd(rng, d);
    MatrixXd s = spd::spd_solve_mean(pa, pb);
    double resid = (s * pa * s - pb).norm() / pb.norm();
    REQUIRE(resid < 1e-9);
  }
}

TEST_CASE("spd_solve_mean equals the geodesic midpoint of (A^-1, B)") {
  Rng rng(11);
  MatrixXd a = oracle::random_spd(rng, 8);
  MatrixXd b = oracle::random_spd(rng, 8);
  MatrixXd s = spd::spd_solve_mean(a, b);
  // matrix-logarithm oracle for the AIRM midpoint
  MatrixXd mid = oracle::airm_geodesic(a.inverse(), b, 0.5);
  CHECK((s - mid).norm() / mid.norm() < 1e-9);
  // and the library's own geometric mean agrees
  MatrixXd gm = spd::geometric_mean(a.inverse(), b);
  CHECK((s - gm).norm() / gm.norm() < 1e-9);
}

TEST_CASE("geometric mean: identity, diagonal closed form, symmetry") {
  Rng rng(5);
  MatrixXd b = oracle::random_spd(rng, 6);
  MatrixXd gm = spd::geometric_mean(MatrixXd::Identity(6, 6), b);
  MatrixXd sqrtb = spd::spd_sqrt(b);
  CHECK((gm - sqrtb).norm() / sqrtb.norm() < 1e-10);

  VectorXd av(4), bv(4);
  av << 1.0, 4.0, 9.0, 0.25;
  bv << 16.0, 1.0, 4.0, 1.0;
  MatrixXd gd = spd::geometric_mean(MatrixXd(av.asDiagonal()),
                                    MatrixXd(bv.asDiagonal()));
  for (int i = 0; i < 4; ++i) {
    CHECK(gd(i, i) == doctest::Approx(std::sqrt(av(i) * bv(i))).epsilon(1e-12));
  }

  MatrixXd p = oracle::random_spd(rng, 6);
  MatrixXd ab = spd::geometric_mean(p, b);
  MatrixXd ba = spd::geometric_mean(b, p);
  CHECK((ab - ba).norm() / ab.norm() < 1e-9);
  CHECK((ab * p.inverse() * ab - b).norm() / b.norm() < 1e-9);
}

TEST_CASE("airm distance: zero, scalar case, congruence invariance") {
  Rng rng(7);
  MatrixXd a = oracle::random_spd(rng, 5);
  CHECK(spd::airm_distance(a, a) < 1e-9);

  MatrixXd one(1, 1), e2(1, 1);
  one << 1.0;
  e2 << std::exp(2.0);
  CHECK(spd::airm_distance(one, e2) == doctest::Approx(2.0).epsilon(1e-12));

  MatrixXd b = oracle::random_spd(rng, 5);
  double d0 = spd::airm_distance(a, b);
  for (int rep = 0; rep < 5; ++rep) {
    MatrixXd x(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) x(i, j) = rng.normal();
    x += 5.0 * MatrixXd::Identity(5, 5);  // keep it invertible
    double d1 = spd::airm_distance(x.transpose() * a * x, x.transpose() * b * x);
    REQUIRE(std::abs(d1 - d0) < 1e-8 * std::max(1.0, d0));
  }
}

TEST_CASE("kappa_prime: flat spectrum, direct values, scale invariance") {
  VectorXd flat = VectorXd::Ones(16);
  CHECK(spd::kappa_prime(flat) == doctest::Approx(2.0).epsilon(1e-12));

  VectorXd two(2);
  two << 4.0, 1.0;
  CHECK(spd::kappa_prime(two) ==
        doctest::Approx(std::pow(17.0, 0.25)).epsilon(1e-12));

  Rng rng(9);
  VectorXd lam(10);
  for (int i = 0; i < 10; ++i) lam(i) = std::exp(rng.normal());
  double k0 = spd::kappa_prime(lam);
  CHECK(spd::kappa_prime((1e6 * lam.array()).matrix()) ==
        doctest::Approx(k0).epsilon(1e-12));
  CHECK(spd::kappa_prime((1e-6 * lam.array()).matrix()) ==
        doctest::Approx(k0).epsilon(1e-12));

  VectorXd bad(2);
  bad << 1.0, -1.0;
  CHECK_THROWS_AS(spd::kappa_prime(bad), std::invalid_argument);
}

TEST_CASE("whitening by the exact covariance reaches the d^{1/4} floor") {
  Rng rng(13);
  int d = 12;
  MatrixXd sigma = oracle::random_spd(rng, d);
  // Hessian of the preconditioned target with M^{-1} = Sigma:
  // B^T Sigma^{-1} B = I when B B^T = Sigma
  Eigen::LLT<MatrixXd> llt(sigma);
  MatrixXd b = llt.matrixL();
  MatrixXd w = b.transpose() * sigma.llt().solve(b);
  auto e = spd::spd_eigen(0.5 * (w + w.transpose()));
  double kappa = spd::kappa_prime(e.lambda);
  CHECK(kappa == doctest::Approx(std::pow(d, 0.25)).epsilon(1e-9));
}

TEST_CASE("gaussian divergences: zeros, direct values, fisher symmetry") {
  VectorXd ones = VectorXd::Ones(3);
  auto z = spd::gaussian_divergences(ones);
  CHECK(z.fisher == doctest::Approx(0.0));
  CHECK(z.kl_draws == doctest::Approx(0.0));
  CHECK(z.kl_scores == doctest::Approx(0.0));

  VectorXd two(1);
  two << 2.0;
  CHECK(spd::gaussian_divergences(two).fisher ==
        doctest::Approx(0.5).epsilon(1e-12));

  VectorXd lam(2), rec(2);
  lam << 4.0, 0.25;
  rec << 0.25, 4.0;
  auto a = spd::gaussian_divergences(lam);
  auto b = spd::gaussian_divergences(rec);
  CHECK(a.fisher == doctest::Approx(b.fisher).epsilon(1e-12));
  // a reciprocal-symmetric spectrum has equal KLs; an asymmetric one does not
  CHECK(a.kl_draws == doctest::Approx(a.kl_scores).epsilon(1e-12));
  VectorXd skew(2);
  skew << 4.0, 1.0;
  auto c = spd::gaussian_divergences(skew);
  CHECK(c.kl_draws != doctest::Approx(c.kl_scores));

  Rng rng(21);
  VectorXd r(6);
  for (int i = 0; i < 6; ++i) r(i) = std::exp(rng.normal());
  auto fwd = spd::gaussian_divergences(r);
  auto rev = spd::gaussian_divergences(r.cwiseInverse());
  CHECK(fwd.fisher == doctest::Approx(rev.fisher).epsilon(1e-12));
  // all three are nonnegative
  CHECK(fwd.fisher >= 0.0);
  CHECK(fwd.kl_draws >= 0.0);
  CHECK(fwd.kl_scores >= 0.0);
}
