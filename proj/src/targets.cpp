#include "fhmc/targets.hpp"

#include <cmath>
#include <stdexcept>

#include "fhmc/simd/kernels.hpp"

namespace fhmc {

double ChainTarget::eval(std::span<const double> x, std::span<double> grad) {
  if (x.size() != static_cast<std::size_t>(target_->dim()) ||
      grad.size() != x.size()) {
    throw std::invalid_argument("eval: dimension mismatch");
  }
  if (!simd::all_finite(x.data(), x.size())) {
    throw std::invalid_argument("invalid position");
  }
  ++count_;
  return target_->logp_grad(x, grad);
}

GaussianTarget::GaussianTarget(Eigen::VectorXd mu, Eigen::MatrixXd sigma)
    : TargetDensity(static_cast<int>(mu.size())),
      mu_(std::move(mu)),
      sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() != mu_.size()) {
    throw std::invalid_argument("gaussian target: shape mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian target: sigma not positive definite");
  }
  chol_ = llt.matrixL();
  prec_ = llt.solve(Eigen::MatrixXd::Identity(sigma_.rows(), sigma_.rows()));
  prec_ = 0.5 * (prec_ + prec_.transpose()).eval();
}

double GaussianTarget::logp_grad(std::span<const double> x,
                                 std::span<double> grad) const {
  Eigen::Map<const Eigen::VectorXd> xv(x.data(), x.size());
  Eigen::Map<Eigen::VectorXd> g(grad.data(), grad.size());
  Eigen::VectorXd d = xv - mu_;
  g.noalias() = -(prec_ * d);
  return 0.5 * d.dot(g);
}

Eigen::VectorXd GaussianTarget::sample(Rng& rng) const {
  Eigen::VectorXd z(dim());
  rng.normal_fill({z.data(), static_cast<std::size_t>(z.size())});
  return mu_ + chol_ * z;
}

void GaussianTarget::sample_with_score(Rng& rng, Eigen::VectorXd& x,
                                       Eigen::VectorXd& score) const {
  x = sample(rng);
  score.noalias() = -(prec_ * (x - mu_));
}

double draw_scale(const ScaleLaw& law, Rng& rng) {
  if (const auto* ln = std::get_if<LognormalLaw>(&law)) {
    return std::exp(ln->sigma * rng.normal());
  }
  if (const auto* ex = std::get_if<ExponentialLaw>(&law)) {
    return -std::log(rng.uniform_pos()) / ex->rate;
  }
  return std::get<FixedLaw>(law).value;
}

Eigen::MatrixXd haar_orthogonal(int dim, Rng& rng) {
  Eigen::MatrixXd z(dim, dim);
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < dim; ++i) z(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd rdiag = qr.matrixQR().diagonal();
  for (int j = 0; j < dim; ++j) {
    if (rdiag(j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

Eigen::MatrixXd generate_spectrum_sigma(const SpectrumRecipe& recipe) {
  if (recipe.dim < 1) {
    throw std::invalid_argument("spectrum recipe: dimension must be positive");
  }
  auto positive = [](const ScaleLaw& law) {
    if (const auto* ln = std::get_if<LognormalLaw>(&law)) return ln->sigma > 0;
    if (const auto* ex = std::get_if<ExponentialLaw>(&law)) return ex->rate > 0;
    return std::get<FixedLaw>(law).value > 0;
  };
  if (!positive(recipe.eigval_law) || !positive(recipe.diag_law)) {
    throw std::invalid_argument("spectrum recipe: law scale must be positive");
  }
  Rng rng(recipe.seed);
  int d = recipe.dim;
  Eigen::MatrixXd u = haar_orthogonal(d, rng);
  Eigen::VectorXd lam2(d), dsqrt(d);
  // The exponential law describes the squared eigenvalues (the spectrum of
  // the core) directly; the lognormal and fixed laws describe lambda itself.
  bool law_on_square = std::holds_alternative<ExponentialLaw>(recipe.eigval_law);
  for (int i = 0; i < d; ++i) {
    double lam = draw_scale(recipe.eigval_law, rng);
    lam2(i) = law_on_square ? lam : lam * lam;
  }
  for (int i = 0; i < d; ++i) {
    dsqrt(i) = std::sqrt(draw_scale(recipe.diag_law, rng));
  }
  Eigen::MatrixXd core = u * lam2.asDiagonal() * u.transpose();
  Eigen::MatrixXd sigma = dsqrt.asDiagonal() * core * dsqrt.asDiagonal();
  return 0.5 * (sigma + sigma.transpose()).eval();
}

BananaTarget::BananaTarget(int dim, double curvature, double scale1)
    : TargetDensity(dim), b_(curvature), s1sq_(scale1 * scale1) {
  if (dim < 2) throw std::invalid_argument("banana target: dim must be >= 2");
}

double BananaTarget::logp_grad(std::span<const double> x,
                               std::span<double> grad) const {
  double x0 = x[0];
  double r = x[1] - b_ * (x0 * x0 - s1sq_);
  double logp = -0.5 * x0 * x0 / s1sq_ - 0.5 * r * r;
  grad[0] = -x0 / s1sq_ + r * 2.0 * b_ * x0;
  grad[1] = -r;
  for (std::size_t j = 2; j < x.size(); ++j) {
    logp -= 0.5 * x[j] * x[j];
    grad[j] = -x[j];
  }
  return logp;
}

GaussGammaTarget::GaussGammaTarget(int dim, double shape, double rate)
    : TargetDensity(dim), shape_(shape), rate_(rate) {
  if (dim < 1) throw std::invalid_argument("gauss-gamma target: dim must be >= 1");
  if (shape <= 0 || rate <= 0) {
    throw std::invalid_argument("gauss-gamma target: shape/rate must be positive");
  }
}

double GaussGammaTarget::logp_grad(std::span<const double> x,
                                   std::span<double> grad) const {
  double logp = 0.0;
  std::size_t last = x.size() - 1;
  for (std::size_t j = 0; j < last; ++j) {
    logp -= 0.5 * x[j] * x[j];
    grad[j] = -x[j];
  }
  double t = x[last];
  double et = std::exp(t);  // overflows to inf for large t; caller flags it
  logp += shape_ * t - rate_ * et;
  grad[last] = shape_ - rate_ * et;
  return logp;
}

ScaledTarget::ScaledTarget(const TargetDensity& base, std::vector<double> scale)
    : TargetDensity(base.dim()), base_(&base), scale_(std::move(scale)) {
  if (scale_.size() != static_cast<std::size_t>(base.dim())) {
    throw std::invalid_argument("scaled target: scale dimension mismatch");
  }
}

double ScaledTarget::logp_grad(std::span<const double> x,
                               std::span<double> grad) const {
  std::vector<double> u(x.size());
  simd::mul(x.data(), scale_.data(), u.data(), x.size());
  double logp = base_->logp_grad(u, grad);
  simd::mul(grad.data(), scale_.data(), grad.data(), grad.size());
  return logp;
}

}  // namespace fhmc
