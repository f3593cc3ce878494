#pragma once

#include <Eigen/Dense>
#include <span>
#include <variant>
#include <vector>

#include "fhmc/estimators.hpp"
#include "fhmc/rng.hpp"

namespace fhmc {

// Momentum algebra over the three mass-matrix families. Sampling draws
// rho ~ N(0, M) through a factor B with B B^T = M^{-1}; velocity is M^{-1}rho.
// Diagonal and low-rank paths run in O(d) and O(r d).
class MassMatrix {
 public:
  enum class Kind { diagonal, dense, low_rank };

  MassMatrix() : MassMatrix(DiagonalMass{{1.0}, {0.0}}) {}
  explicit MassMatrix(DiagonalMass m);
  explicit MassMatrix(DenseMass m);
  explicit MassMatrix(LowRankMass m);

  static MassMatrix identity(int dim);

  int dim() const { return dim_; }
  Kind kind() const;

  void sample_momentum(Rng& rng, std::span<double> rho) const;
  void velocity(std::span<const double> rho, std::span<double> v) const;
  // 0.5 * rho' M^{-1} rho, given the matching velocity
  double kinetic(std::span<const double> rho, std::span<const double> v) const;

  Eigen::MatrixXd dense_inv() const;
  // B with B B^T = M^{-1}: diag(sigma), the Cholesky factor, or
  // diag(sigma)(I + U (diag(lam)^{1/2} - I) U^T)
  Eigen::MatrixXd dense_factor() const;

  const DiagonalMass* diagonal() const;
  const DenseMass* dense() const;
  const LowRankMass* low_rank() const;

 private:
  struct Diag {
    DiagonalMass m;
    std::vector<double> sqrt_sigma2;
  };
  struct Dense {
    DenseMass m;
  };
  struct LowRank {
    LowRankMass m;
    Eigen::VectorXd lam_m1;        // lam - 1
    Eigen::VectorXd lam_rsqrt_m1;  // lam^{-1/2} - 1
    Eigen::VectorXd lam_sqrt_m1;   // lam^{1/2} - 1
  };

  int dim_;
  std::variant<Diag, Dense, LowRank> rep_;
};

}  // namespace fhmc
