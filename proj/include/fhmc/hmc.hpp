#pragma once

#include <span>
#include <vector>

#include "fhmc/mass_matrix.hpp"
#include "fhmc/rng.hpp"
#include "fhmc/targets.hpp"

namespace fhmc {

// Position-momentum pair with cached log density, score, velocity and energy.
struct PhasePoint {
  std::vector<double> x, rho, score, velocity;
  double logp = 0.0;
  double energy = 0.0;  // -logp + kinetic; +inf when divergent
  bool divergent = false;
};

// Evaluates the target at x and assembles the phase point for momentum rho.
PhasePoint make_phase_point(ChainTarget& target, const MassMatrix& mass,
                            std::span<const double> x,
                            std::span<const double> rho);

// n half-kick/drift/half-kick steps of size eps; exactly n score evaluations
// beyond the cached one. Returns the partial point flagged divergent when a
// non-finite position, density or score shows up.
PhasePoint leapfrog(ChainTarget& target, const MassMatrix& mass,
                    const PhasePoint& z, double eps, int n);

enum class AcceptStatForm { metropolis, symmetric };

// delta_h is the energy drop H0 - H of the proposal. Phases 1-2 use the
// Metropolis form exp(min(0, dh)); phase 3 the symmetric form
// 2 exp(min(0, dh)) / (1 + exp(dh)).
double acceptance_statistic(double delta_h, AcceptStatForm form);
double acceptance_statistic(double delta_h, int phase);

struct TransitionStats {
  double delta_h = 0.0;  // max |H - H0| over the finite trajectory states
  double accept_stat = 0.0;
  int tree_depth = 0;   // completed doublings
  int n_leapfrog = 0;   // equals the gradient-counter delta
  bool divergent = false;
};

// Position with its cached density and score; carried between transitions so
// the sampler never re-evaluates the current draw.
struct ChainState {
  std::vector<double> x;
  double logp = 0.0;
  std::vector<double> grad;
};

ChainState make_chain_state(ChainTarget& target, std::span<const double> x0);

inline constexpr double kDivergenceThreshold = 1000.0;

// One multinomial No-U-Turn update. The trajectory doubles in random
// directions; sub-trees and the merged tree stop on the momentum-sum U-turn
// criterion evaluated with M^{-1}-weighted inner products; states are selected
// with weights exp(-H). max_depth = 0 degenerates to a single leapfrog step
// with a Metropolis accept/reject.
TransitionStats nuts_transition(ChainTarget& target, const MassMatrix& mass,
                                ChainState& state, double eps, int max_depth,
                                Rng& rng, AcceptStatForm form);

}  // namespace fhmc
