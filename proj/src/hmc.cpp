#include "fhmc/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fhmc/simd/kernels.hpp"

namespace fhmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  double m = std::max(a, b);
  if (m == -kInf) return -kInf;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

PhasePoint make_phase_point(ChainTarget& target, const MassMatrix& mass,
                            std::span<const double> x,
                            std::span<const double> rho) {
  PhasePoint z;
  z.x.assign(x.begin(), x.end());
  z.rho.assign(rho.begin(), rho.end());
  z.score.resize(x.size());
  z.velocity.resize(x.size());
  z.logp = target.eval(z.x, z.score);
  mass.velocity(z.rho, z.velocity);
  if (!std::isfinite(z.logp) ||
      !simd::all_finite(z.score.data(), z.score.size())) {
    z.divergent = true;
    z.energy = kInf;
  } else {
    z.energy = -z.logp + mass.kinetic(z.rho, z.velocity);
  }
  return z;
}

PhasePoint leapfrog(ChainTarget& target, const MassMatrix& mass,
                    const PhasePoint& z, double eps, int n) {
  if (n < 1 || eps == 0.0) {
    throw std::invalid_argument("leapfrog: need eps != 0, n >= 1");
  }
  PhasePoint out = z;
  const std::size_t d = out.x.size();
  double half = 0.5 * eps;
  for (int step = 0; step < n; ++step) {
    simd::axpy(half, out.score.data(), out.rho.data(), d);
    mass.velocity(out.rho, out.velocity);
    simd::axpy(eps, out.velocity.data(), out.x.data(), d);
    if (!simd::all_finite(out.x.data(), d)) {
      out.divergent = true;
      out.energy = kInf;
      return out;
    }
    out.logp = target.eval(out.x, out.score);
    if (!std::isfinite(out.logp) ||
        !simd::all_finite(out.score.data(), d)) {
      out.divergent = true;
      out.energy = kInf;
      return out;
    }
    simd::axpy(half, out.score.data(), out.rho.data(), d);
  }
  mass.velocity(out.rho, out.velocity);
  out.energy = -out.logp + mass.kinetic(out.rho, out.velocity);
  out.divergent = false;
  return out;
}

double acceptance_statistic(double delta_h, AcceptStatForm form) {
  double metro = std::exp(std::min(0.0, delta_h));
  if (form == AcceptStatForm::metropolis) return metro;
  return 2.0 * metro / (1.0 + std::exp(delta_h));
}

double acceptance_statistic(double delta_h, int phase) {
  if (phase < 1 || phase > 3) {
    throw std::invalid_argument("acceptance_statistic: phase must be 1..3");
  }
  return acceptance_statistic(delta_h, phase == 3 ? AcceptStatForm::symmetric
                                                  : AcceptStatForm::metropolis);
}

ChainState make_chain_state(ChainTarget& target, std::span<const double> x0) {
  ChainState s;
  s.x.assign(x0.begin(), x0.end());
  s.grad.resize(x0.size());
  s.logp = target.eval(s.x, s.grad);
  if (!std::isfinite(s.logp) ||
      !simd::all_finite(s.grad.data(), s.grad.size())) {
    throw std::invalid_argument("bad initial point");
  }
  return s;
}

namespace {

struct Tree {
  PhasePoint left, right;  // trajectory-ordered endpoints
  std::vector<double> rho_sum;
  std::vector<double> x_sel, grad_sel;
  double logp_sel = 0.0;
  double log_weight = -kInf;  // logsumexp of h0 - h over the tree's states
};

struct Accum {
  double sum_accept = 0.0;
  long long n_states = 0;
  double max_abs_dh = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
};

// Continue while the velocities at both ends point along the summed momentum.
bool no_uturn(const std::vector<double>& v_left,
              const std::vector<double>& v_right,
              const std::vector<double>& rho_sum) {
  std::size_t d = rho_sum.size();
  return simd::dot(v_left.data(), rho_sum.data(), d) > 0 &&
         simd::dot(v_right.data(), rho_sum.data(), d) > 0;
}

// Full merge validity for trajectory-ordered segments l and r: the combined
// span plus the two one-state extensions across the boundary. Endpoint-only
// checks miss turns buried inside a doubling on near-periodic trajectories;
// the cross checks catch them.
bool merge_no_uturn(const Tree& l, const Tree& r,
                    const std::vector<double>& rho_total) {
  std::size_t d = rho_total.size();
  if (!no_uturn(l.left.velocity, r.right.velocity, rho_total)) return false;
  std::vector<double> rho_cross(d);
  for (std::size_t i = 0; i < d; ++i) {
    rho_cross[i] = l.rho_sum[i] + r.left.rho[i];
  }
  if (!no_uturn(l.left.velocity, r.left.velocity, rho_cross)) return false;
  for (std::size_t i = 0; i < d; ++i) {
    rho_cross[i] = r.rho_sum[i] + l.right.rho[i];
  }
  return no_uturn(l.right.velocity, r.right.velocity, rho_cross);
}

// Builds 2^depth states from `from` in the direction of eps's sign; returns
// false when the subtree hit a divergence or an internal U-turn, in which
// case `out` must not be used.
bool build_tree(ChainTarget& target, const MassMatrix& mass,
                const PhasePoint& from, int depth, double eps, bool forward,
                double h0, AcceptStatForm form, Rng& rng, Tree& out,
                Accum& acc) {
  if (depth == 0) {
    PhasePoint z = leapfrog(target, mass, from, eps, 1);
    ++acc.n_leapfrog;
    double a = z.divergent ? 0.0 : acceptance_statistic(h0 - z.energy, form);
    acc.sum_accept += a;
    ++acc.n_states;
    if (std::isfinite(z.energy)) {
      acc.max_abs_dh = std::max(acc.max_abs_dh, std::abs(z.energy - h0));
    }
    if (z.divergent || z.energy - h0 > kDivergenceThreshold) {
      acc.divergent = true;
      return false;
    }
    out.log_weight = h0 - z.energy;
    out.rho_sum = z.rho;
    out.x_sel = z.x;
    out.grad_sel = z.score;
    out.logp_sel = z.logp;
    out.left = z;
    out.right = std::move(z);
    return true;
  }
  Tree first;
  if (!build_tree(target, mass, from, depth - 1, eps, forward, h0, form, rng,
                  first, acc)) {
    return false;
  }
  Tree second;
  const PhasePoint& edge = forward ? first.right : first.left;
  if (!build_tree(target, mass, edge, depth - 1, eps, forward, h0, form, rng,
                  second, acc)) {
    return false;
  }
  double total = log_sum_exp(first.log_weight, second.log_weight);
  bool take_second =
      std::log(rng.uniform_pos()) < second.log_weight - total;
  Tree& chosen = take_second ? second : first;
  out.x_sel = std::move(chosen.x_sel);
  out.grad_sel = std::move(chosen.grad_sel);
  out.logp_sel = chosen.logp_sel;
  out.log_weight = total;
  out.rho_sum.resize(first.rho_sum.size());
  for (std::size_t i = 0; i < out.rho_sum.size(); ++i) {
    out.rho_sum[i] = first.rho_sum[i] + second.rho_sum[i];
  }
  bool ok = forward ? merge_no_uturn(first, second, out.rho_sum)
                    : merge_no_uturn(second, first, out.rho_sum);
  if (forward) {
    out.left = std::move(first.left);
    out.right = std::move(second.right);
  } else {
    out.left = std::move(second.left);
    out.right = std::move(first.right);
  }
  return ok;
}

}  // namespace

TransitionStats nuts_transition(ChainTarget& target, const MassMatrix& mass,
                                ChainState& state, double eps, int max_depth,
                                Rng& rng, AcceptStatForm form) {
  if (!(eps > 0)) throw std::invalid_argument("nuts: step size must be positive");
  if (!std::isfinite(state.logp)) {
    throw std::invalid_argument("bad initial point");
  }
  const std::size_t d = state.x.size();

  Tree tree;
  tree.left.x = state.x;
  tree.left.score = state.grad;
  tree.left.logp = state.logp;
  tree.left.rho.resize(d);
  mass.sample_momentum(rng, tree.left.rho);
  tree.left.velocity.resize(d);
  mass.velocity(tree.left.rho, tree.left.velocity);
  tree.left.energy =
      -tree.left.logp + mass.kinetic(tree.left.rho, tree.left.velocity);
  const double h0 = tree.left.energy;
  tree.right = tree.left;
  tree.rho_sum = tree.left.rho;
  tree.x_sel = state.x;
  tree.grad_sel = state.grad;
  tree.logp_sel = state.logp;
  tree.log_weight = 0.0;

  Accum acc;
  TransitionStats stats;
  int doublings = std::max(1, max_depth);
  for (int depth = 0; depth < doublings; ++depth) {
    bool forward = rng.coin();
    const PhasePoint& from = forward ? tree.right : tree.left;
    Tree sub;
    if (!build_tree(target, mass, from, depth, forward ? eps : -eps, forward,
                    h0, form, rng, sub, acc)) {
      break;
    }
    // biased progressive selection between the old tree and the new subtree
    if (std::log(rng.uniform_pos()) < sub.log_weight - tree.log_weight) {
      tree.x_sel = std::move(sub.x_sel);
      tree.grad_sel = std::move(sub.grad_sel);
      tree.logp_sel = sub.logp_sel;
    }
    ++stats.tree_depth;
    std::vector<double> rho_total(d);
    for (std::size_t i = 0; i < d; ++i) {
      rho_total[i] = tree.rho_sum[i] + sub.rho_sum[i];
    }
    bool ok = forward ? merge_no_uturn(tree, sub, rho_total)
                      : merge_no_uturn(sub, tree, rho_total);
    if (forward) {
      tree.right = std::move(sub.right);
    } else {
      tree.left = std::move(sub.left);
    }
    tree.rho_sum = std::move(rho_total);
    tree.log_weight = log_sum_exp(tree.log_weight, sub.log_weight);
    if (!ok) break;
  }

  state.x = std::move(tree.x_sel);
  state.grad = std::move(tree.grad_sel);
  state.logp = tree.logp_sel;
  stats.n_leapfrog = acc.n_leapfrog;
  stats.divergent = acc.divergent;
  stats.delta_h = acc.max_abs_dh;
  stats.accept_stat =
      acc.n_states > 0 ? acc.sum_accept / static_cast<double>(acc.n_states)
                       : 0.0;
  return stats;
}

}  // namespace fhmc
