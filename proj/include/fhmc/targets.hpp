#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "fhmc/rng.hpp"

namespace fhmc {

// A differentiable unnormalized log density on R^d. Implementations must be
// const and safe to evaluate concurrently from several chains; per-chain
// gradient counting lives in ChainTarget.
class TargetDensity {
 public:
  explicit TargetDensity(int dim) : dim_(dim) {}
  virtual ~TargetDensity() = default;

  int dim() const { return dim_; }

  // Returns log p(x) up to a constant and writes the score into grad.
  virtual double logp_grad(std::span<const double> x,
                           std::span<double> grad) const = 0;

 private:
  int dim_;
};

// Per-chain evaluation handle. Owns the monotone gradient-evaluation counter;
// every eval() counts exactly once.
class ChainTarget {
 public:
  explicit ChainTarget(const TargetDensity& target) : target_(&target) {}

  int dim() const { return target_->dim(); }
  const TargetDensity& density() const { return *target_; }

  // Throws std::invalid_argument("invalid position") on non-finite input.
  // Non-finite output is returned as-is; the sampler treats it as divergence.
  double eval(std::span<const double> x, std::span<double> grad);

  long long grad_count() const { return count_; }

 private:
  const TargetDensity* target_;
  long long count_ = 0;
};

class GaussianTarget : public TargetDensity {
 public:
  // Throws std::invalid_argument if sigma is not symmetric positive definite.
  GaussianTarget(Eigen::VectorXd mu, Eigen::MatrixXd sigma);

  double logp_grad(std::span<const double> x,
                   std::span<double> grad) const override;

  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& chol() const { return chol_; }
  const Eigen::MatrixXd& precision() const { return prec_; }

  // Exact draw x ~ N(mu, sigma); used by the condition-number and estimator
  // simulations, not by the sampler.
  Eigen::VectorXd sample(Rng& rng) const;
  // Draw plus its analytic score -Sigma^{-1}(x - mu).
  void sample_with_score(Rng& rng, Eigen::VectorXd& x,
                         Eigen::VectorXd& score) const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_, chol_, prec_;
};

struct LognormalLaw {
  double sigma = 1.0;  // log value ~ N(0, sigma^2)
};
struct ExponentialLaw {
  double rate = 1.0;
};
struct FixedLaw {
  double value = 1.0;
};
using ScaleLaw = std::variant<LognormalLaw, ExponentialLaw, FixedLaw>;

double draw_scale(const ScaleLaw& law, Rng& rng);

// Random covariance recipe: Sigma = D^{1/2} U diag(lambda^2) U^T D^{1/2} with
// U Haar-orthogonal, lambda_i from eigval_law and D_ii from diag_law.
struct SpectrumRecipe {
  int dim = 0;
  ScaleLaw eigval_law = LognormalLaw{1.0};
  ScaleLaw diag_law = LognormalLaw{2.0};
  std::uint64_t seed = 0;
};

Eigen::MatrixXd haar_orthogonal(int dim, Rng& rng);
Eigen::MatrixXd generate_spectrum_sigma(const SpectrumRecipe& recipe);

// Warped Gaussian; the second coordinate rides on the first one's square.
// Stress target for divergence handling.
class BananaTarget : public TargetDensity {
 public:
  BananaTarget(int dim, double curvature = 0.5, double scale1 = 2.0);
  double logp_grad(std::span<const double> x,
                   std::span<double> grad) const override;

 private:
  double b_, s1sq_;
};

// Independent standard normals with a log-transformed gamma last coordinate:
// logp += shape * t - rate * exp(t). Stress target, exercises overflow paths.
class GaussGammaTarget : public TargetDensity {
 public:
  GaussGammaTarget(int dim, double shape = 2.0, double rate = 1.0);
  double logp_grad(std::span<const double> x,
                   std::span<double> grad) const override;

 private:
  double shape_, rate_;
};

// q(theta) = p(c . theta). Multiplications are exact when the entries of c
// are powers of two, which the rescaling-invariance tests rely on.
class ScaledTarget : public TargetDensity {
 public:
  ScaledTarget(const TargetDensity& base, std::vector<double> scale);
  double logp_grad(std::span<const double> x,
                   std::span<double> grad) const override;

 private:
  const TargetDensity* base_;
  std::vector<double> scale_;
};

}  // namespace fhmc
