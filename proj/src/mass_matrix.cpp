#include "fhmc/mass_matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "fhmc/simd/kernels.hpp"

namespace fhmc {

MassMatrix::MassMatrix(DiagonalMass m)
    : dim_(static_cast<int>(m.sigma2.size())) {
  Diag d{std::move(m), {}};
  d.sqrt_sigma2.resize(dim_);
  for (int j = 0; j < dim_; ++j) {
    if (!(d.m.sigma2[j] > 0)) {
      throw std::invalid_argument("mass matrix: sigma2 must be positive");
    }
    d.sqrt_sigma2[j] = std::sqrt(d.m.sigma2[j]);
  }
  rep_ = std::move(d);
}

MassMatrix::MassMatrix(DenseMass m) : dim_(static_cast<int>(m.inv_mass.rows())) {
  if (m.inv_mass.rows() != m.inv_mass.cols() ||
      m.factor.rows() != m.inv_mass.rows() ||
      m.factor.cols() != m.inv_mass.cols()) {
    throw std::invalid_argument("mass matrix: dense shape mismatch");
  }
  rep_ = Dense{std::move(m)};
}

MassMatrix::MassMatrix(LowRankMass m) : dim_(static_cast<int>(m.u.rows())) {
  LowRank lr{std::move(m), {}, {}, {}};
  for (double s : lr.m.sigma) {
    if (!(s > 0)) throw std::invalid_argument("mass matrix: sigma must be positive");
  }
  lr.lam_m1 = lr.m.lam.array() - 1.0;
  lr.lam_rsqrt_m1 = lr.m.lam.array().rsqrt() - 1.0;
  lr.lam_sqrt_m1 = lr.m.lam.array().sqrt() - 1.0;
  rep_ = std::move(lr);
}

MassMatrix MassMatrix::identity(int dim) {
  DiagonalMass m;
  m.sigma2.assign(dim, 1.0);
  m.mu.assign(dim, 0.0);
  return MassMatrix(std::move(m));
}

MassMatrix::Kind MassMatrix::kind() const {
  if (std::holds_alternative<Diag>(rep_)) return Kind::diagonal;
  if (std::holds_alternative<Dense>(rep_)) return Kind::dense;
  return Kind::low_rank;
}

void MassMatrix::sample_momentum(Rng& rng, std::span<double> rho) const {
  std::size_t n = rho.size();
  rng.normal_fill(rho);
  if (const auto* d = std::get_if<Diag>(&rep_)) {
    // rho = z / sqrt(sigma2): N(0, diag(1/sigma2))
    simd::div(rho.data(), d->sqrt_sigma2.data(), rho.data(), n);
  } else if (const auto* dn = std::get_if<Dense>(&rep_)) {
    // rho = B^{-T} z with the triangular factor
    Eigen::Map<Eigen::VectorXd> r(rho.data(), n);
    dn->m.factor.triangularView<Eigen::Lower>().transpose().solveInPlace(r);
  } else {
    const auto& lr = std::get<LowRank>(rep_);
    Eigen::Map<Eigen::VectorXd> r(rho.data(), n);
    if (lr.m.lam.size() > 0) {
      Eigen::VectorXd t = lr.m.u.transpose() * r;
      r.noalias() += lr.m.u * lr.lam_rsqrt_m1.cwiseProduct(t);
    }
    simd::div(rho.data(), lr.m.sigma.data(), rho.data(), n);
  }
}

void MassMatrix::velocity(std::span<const double> rho,
                          std::span<double> v) const {
  std::size_t n = rho.size();
  if (const auto* d = std::get_if<Diag>(&rep_)) {
    simd::mul(rho.data(), d->m.sigma2.data(), v.data(), n);
  } else if (const auto* dn = std::get_if<Dense>(&rep_)) {
    Eigen::Map<const Eigen::VectorXd> r(rho.data(), n);
    Eigen::Map<Eigen::VectorXd> out(v.data(), n);
    out.noalias() = dn->m.inv_mass * r;
  } else {
    const auto& lr = std::get<LowRank>(rep_);
    simd::mul(rho.data(), lr.m.sigma.data(), v.data(), n);
    Eigen::Map<Eigen::VectorXd> out(v.data(), n);
    if (lr.m.lam.size() > 0) {
      Eigen::VectorXd t = lr.m.u.transpose() * out;
      out.noalias() += lr.m.u * lr.lam_m1.cwiseProduct(t);
    }
    simd::mul(v.data(), lr.m.sigma.data(), v.data(), n);
  }
}

double MassMatrix::kinetic(std::span<const double> rho,
                           std::span<const double> v) const {
  return 0.5 * simd::dot(rho.data(), v.data(), rho.size());
}

Eigen::MatrixXd MassMatrix::dense_inv() const {
  if (const auto* d = std::get_if<Diag>(&rep_)) {
    return Eigen::Map<const Eigen::VectorXd>(d->m.sigma2.data(), dim_)
        .asDiagonal();
  }
  if (const auto* dn = std::get_if<Dense>(&rep_)) return dn->m.inv_mass;
  return low_rank_dense_inv(std::get<LowRank>(rep_).m);
}

Eigen::MatrixXd MassMatrix::dense_factor() const {
  if (const auto* d = std::get_if<Diag>(&rep_)) {
    return Eigen::Map<const Eigen::VectorXd>(d->sqrt_sigma2.data(), dim_)
        .asDiagonal();
  }
  if (const auto* dn = std::get_if<Dense>(&rep_)) return dn->m.factor;
  const auto& lr = std::get<LowRank>(rep_);
  Eigen::MatrixXd core = Eigen::MatrixXd::Identity(dim_, dim_);
  if (lr.m.lam.size() > 0) {
    core += lr.m.u * lr.lam_sqrt_m1.asDiagonal() * lr.m.u.transpose();
  }
  return Eigen::Map<const Eigen::VectorXd>(lr.m.sigma.data(), dim_)
             .asDiagonal() *
         core;
}

const DiagonalMass* MassMatrix::diagonal() const {
  const auto* d = std::get_if<Diag>(&rep_);
  return d ? &d->m : nullptr;
}

const DenseMass* MassMatrix::dense() const {
  const auto* d = std::get_if<Dense>(&rep_);
  return d ? &d->m : nullptr;
}

const LowRankMass* MassMatrix::low_rank() const {
  const auto* d = std::get_if<LowRank>(&rep_);
  return d ? &d->m : nullptr;
}

}  // namespace fhmc
