#include "fhmc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fhmc/simd/kernels.hpp"
#include "fhmc/spd.hpp"

namespace fhmc {

namespace {

void require_pairs(long long k) {
  if (k < 2) throw std::invalid_argument("insufficient draws");
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

// Centered columns and unbiased covariance of a d x k sample matrix.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& cols) {
  Eigen::MatrixXd centered = cols.colwise() - cols.rowwise().mean();
  return (centered * centered.transpose()) /
         static_cast<double>(cols.cols() - 1);
}

}  // namespace

DrawScoreMoments DrawScoreMoments::from(const Welford& draws,
                                        const Welford& scores) {
  DrawScoreMoments m;
  m.count = draws.count();
  require_pairs(m.count);
  m.draw_mean.assign(draws.mean().begin(), draws.mean().end());
  m.draw_var = draws.variance();
  m.score_mean.assign(scores.mean().begin(), scores.mean().end());
  m.score_var = scores.variance();
  return m;
}

DrawScoreMoments DrawScoreMoments::from(const Eigen::MatrixXd& draws,
                                        const Eigen::MatrixXd& scores) {
  require_pairs(draws.cols());
  if (scores.rows() != draws.rows() || scores.cols() != draws.cols()) {
    throw std::invalid_argument("estimator input: shape mismatch");
  }
  DrawScoreMoments m;
  m.count = draws.cols();
  double inv = 1.0 / static_cast<double>(draws.cols() - 1);
  Eigen::VectorXd mean_x = draws.rowwise().mean();
  Eigen::VectorXd mean_s = scores.rowwise().mean();
  Eigen::VectorXd var_x =
      (draws.colwise() - mean_x).rowwise().squaredNorm() * inv;
  Eigen::VectorXd var_s =
      (scores.colwise() - mean_s).rowwise().squaredNorm() * inv;
  m.draw_mean = to_vec(mean_x);
  m.draw_var = to_vec(var_x);
  m.score_mean = to_vec(mean_s);
  m.score_var = to_vec(var_s);
  return m;
}

DiagonalMass init_mass(std::span<const double> score0) {
  if (!simd::all_finite(score0.data(), score0.size())) {
    throw std::invalid_argument("init_mass: non-finite score");
  }
  DiagonalMass out;
  out.sigma2.resize(score0.size());
  out.mu.assign(score0.size(), 0.0);
  for (std::size_t j = 0; j < score0.size(); ++j) {
    double a = score0[j];
    double v = (a == 0.0) ? 1.0 : 1.0 / (a * a);
    out.sigma2[j] = std::clamp(v, kInitMassFloor, kInitMassCeil);
  }
  return out;
}

DiagonalMass estimate_diagonal(const DrawScoreMoments& m,
                               const DiagonalMass* prev) {
  require_pairs(m.count);
  std::size_t d = m.draw_var.size();
  DiagonalMass out;
  out.sigma2.resize(d);
  out.mu.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    double vx = m.draw_var[j];
    double va = m.score_var[j];
    double s2;
    if (!(vx > kVarFloor) || !(va > kVarFloor)) {
      s2 = prev ? prev->sigma2[j] : 1.0;
    } else {
      s2 = std::sqrt(vx / va);
    }
    out.sigma2[j] = std::clamp(s2, kSigma2Floor, kSigma2Ceil);
    out.mu[j] = m.draw_mean[j] + out.sigma2[j] * m.score_mean[j];
  }
  return out;
}

DenseMass estimate_dense(const Eigen::MatrixXd& draws,
                         const Eigen::MatrixXd& scores, double gamma) {
  require_pairs(draws.cols());
  if (scores.rows() != draws.rows() || scores.cols() != draws.cols()) {
    throw std::invalid_argument("estimate_dense: shape mismatch");
  }
  if (gamma < 0) throw std::invalid_argument("estimate_dense: gamma < 0");
  long long d = draws.rows();
  Eigen::MatrixXd reg = gamma * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd cov_x = covariance(draws) + reg;
  Eigen::MatrixXd cov_s = covariance(scores) + reg;

  DenseMass out;
  out.gamma = gamma;
  out.inv_mass = spd::spd_solve_mean(cov_s, cov_x);
  Eigen::LLT<Eigen::MatrixXd> llt(out.inv_mass);
  if (llt.info() != Eigen::Success) {
    throw spd::NotPositiveDefinite("not positive definite");
  }
  out.factor = llt.matrixL();
  Eigen::VectorXd mean_x = draws.rowwise().mean();
  Eigen::VectorXd mean_s = scores.rowwise().mean();
  out.mu = mean_x + out.inv_mass * mean_s;
  return out;
}

LowRankMass estimate_low_rank(const Eigen::MatrixXd& draws,
                              const Eigen::MatrixXd& scores, double cutoff,
                              double gamma,
                              const std::vector<double>* prev_sigma2) {
  long long k = draws.cols();
  require_pairs(k);
  if (scores.rows() != draws.rows() || scores.cols() != draws.cols()) {
    throw std::invalid_argument("estimate_low_rank: shape mismatch");
  }
  if (cutoff < 1.0) throw std::invalid_argument("estimate_low_rank: cutoff < 1");
  if (!(gamma > 0)) throw std::invalid_argument("estimate_low_rank: gamma <= 0");
  long long d = draws.rows();

  DrawScoreMoments m = DrawScoreMoments::from(draws, scores);
  Eigen::VectorXd sigma2(d), sigma(d);
  for (long long j = 0; j < d; ++j) {
    double vx = m.draw_var[j];
    double va = m.score_var[j];
    double s2;
    if (!(vx > kVarFloor) || !(va > kVarFloor)) {
      s2 = prev_sigma2 ? (*prev_sigma2)[j] : 1.0;
    } else {
      s2 = std::sqrt(vx / va);
    }
    sigma2(j) = std::clamp(s2, kSigma2Floor, kSigma2Ceil);
    sigma(j) = std::sqrt(sigma2(j));
  }
  Eigen::Map<const Eigen::VectorXd> mean_x(m.draw_mean.data(), d);
  Eigen::Map<const Eigen::VectorXd> mean_s(m.score_mean.data(), d);

  // Pull both data sets into the diagonal-stage space: draws shrink by sigma,
  // scores grow by it.
  Eigen::MatrixXd wdraws =
      sigma.cwiseInverse().asDiagonal() * (draws.colwise() - mean_x);
  Eigen::MatrixXd wscores = sigma.asDiagonal() * (scores.colwise() - mean_s);

  // thin bases of the two column spans; directions with negligible singular
  // values (centering drops one) are not part of the span and get cut
  auto span_basis = [](const Eigen::MatrixXd& cols) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeThinU);
    double tol = std::max(cols.rows(), cols.cols()) *
                 std::numeric_limits<double>::epsilon() *
                 svd.singularValues().maxCoeff();
    long long rank = 0;
    while (rank < svd.singularValues().size() &&
           svd.singularValues()(rank) > tol) {
      ++rank;
    }
    return Eigen::MatrixXd(svd.matrixU().leftCols(rank));
  };
  Eigen::MatrixXd ux = span_basis(wdraws);
  Eigen::MatrixXd us = span_basis(wscores);
  Eigen::MatrixXd joint(d, ux.cols() + us.cols());
  joint << ux, us;
  // pivoted QR so overlap between the two spans cannot smuggle in junk
  // directions; Q's leading rank columns span the joint space
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(joint);
  long long r0 = std::min<long long>(qr.rank(), d);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, r0);

  Eigen::MatrixXd px = q.transpose() * wdraws;
  Eigen::MatrixXd ps = q.transpose() * wscores;
  double inv = 1.0 / static_cast<double>(k - 1);
  Eigen::MatrixXd reg = gamma * Eigen::MatrixXd::Identity(r0, r0);
  Eigen::MatrixXd cov_x = px * px.transpose() * inv + reg;
  Eigen::MatrixXd cov_s = ps * ps.transpose() * inv + reg;

  Eigen::MatrixXd proj = spd::spd_solve_mean(cov_s, cov_x);
  auto eig = spd::spd_eigen(proj);

  std::vector<long long> keep;
  for (long long i = 0; i < eig.lambda.size(); ++i) {
    double lam = eig.lambda(i);
    if (lam >= cutoff || lam <= 1.0 / cutoff) keep.push_back(i);
  }

  LowRankMass out;
  out.cutoff = cutoff;
  out.gamma = gamma;
  out.sigma = to_vec(sigma);
  out.lam.resize(keep.size());
  out.u.resize(d, keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.lam(i) = eig.lambda(keep[i]);
    out.u.col(i) = q * eig.u.col(keep[i]);
  }
  Eigen::VectorXd scaled_score_mean = sigma.cwiseProduct(mean_s);
  out.mu1 = out.u * (out.lam.array() - 1.0)
                        .matrix()
                        .cwiseProduct(out.u.transpose() * scaled_score_mean);
  out.mu2.resize(d);
  for (long long j = 0; j < d; ++j) {
    out.mu2[j] = mean_x(j) + sigma2(j) * mean_s(j);
  }
  return out;
}

DiagonalMass estimate_variance_baseline(const DrawScoreMoments& m) {
  require_pairs(m.count);
  DiagonalMass out;
  out.sigma2.resize(m.draw_var.size());
  out.mu = m.draw_mean;
  for (std::size_t j = 0; j < out.sigma2.size(); ++j) {
    out.sigma2[j] = std::clamp(m.draw_var[j], kSigma2Floor, kSigma2Ceil);
  }
  return out;
}

DiagonalMass estimate_score_baseline(const DrawScoreMoments& m) {
  require_pairs(m.count);
  DiagonalMass out;
  out.sigma2.resize(m.score_var.size());
  out.mu = m.draw_mean;
  for (std::size_t j = 0; j < out.sigma2.size(); ++j) {
    double va = m.score_var[j];
    double s2 = va > kVarFloor ? 1.0 / va : 1.0;
    out.sigma2[j] = std::clamp(s2, kSigma2Floor, kSigma2Ceil);
  }
  return out;
}

Eigen::MatrixXd low_rank_dense_inv(const LowRankMass& m) {
  long long d = m.u.rows();
  Eigen::Map<const Eigen::VectorXd> sigma(m.sigma.data(), d);
  Eigen::MatrixXd core = Eigen::MatrixXd::Identity(d, d);
  if (m.lam.size() > 0) {
    core += m.u * (m.lam.array() - 1.0).matrix().asDiagonal() *
            m.u.transpose();
  }
  Eigen::MatrixXd out =
      sigma.asDiagonal() * core * sigma.asDiagonal();
  return 0.5 * (out + out.transpose()).eval();
}

}  // namespace fhmc
