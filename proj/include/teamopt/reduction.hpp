#pragma once

#include <optional>

#include "teamopt/strategy.hpp"
#include "teamopt/team_model.hpp"

namespace teamopt {

// One observation channel after static reduction: y = hcheck(omega0,
// earlier actions) + noise, with hcheck fully resolved onto primitives.
struct Channel {
  AffineMap hcheck;
  NoiseSpec noise;
};

// The reduced static team: each slot observes an independent draw from its
// noise law nu, and the cost picks up the density factor phi.
struct ReducedTeam {
  TeamSpec spec;                              // original declaration
  std::vector<std::vector<Channel>> channels;  // [i-1][t-1]
  PrimitiveCost primitive_cost;

  const Channel& channel(int i, int t) const {
    return channels[i - 1][t - 1];
  }
  // log phi^i_t(y; .) with the channel's hcheck arguments read from p.
  double log_phi_slot(int i, int t, const Vec& y, const PointView& p) const;
  // log of the product over all slots; observations and actions read from p.
  double log_phi(const PointView& p) const;
};

// Witsenhausen change of measure for additive-Gaussian channels.
// Throws NotReducible when a channel is non-additive (reads its own or a
// later observation) or its noise covariance is singular.
ReducedTeam static_reduce(const TeamSpec& spec);

// phi^i_t as an expression tree over the channel's observation and hcheck
// variables: exp(-1/2 ||y - hcheck - m||^2_{S^-1} + 1/2 ||y - m||^2_{S^-1}).
ExprPtr phi_expr(const ReducedTeam& rt, int i, int t);

// Product phi factor at a fully bound point. Throws TeamError when the
// log-value exceeds 700 (caller must shrink the domain).
double phi_factor(const ReducedTeam& rt, const PointView& p);

// |int phi^i_t(y; omega0, u) nu^i_t(dy) - 1| per slot, by Gauss-Hermite
// quadrature of the given order on the noise law.
std::vector<std::vector<double>> check_phi_normalization(const ReducedTeam& rt,
                                                         const PointView& p,
                                                         int order);

enum class EvalMethod { Quadrature, MonteCarlo };

struct EquivalenceReport {
  double j_dynamic = 0.0;
  double j_reduced = 0.0;
  double gap = 0.0;
  std::optional<double> stderr_dynamic;  // Monte Carlo only
  std::optional<double> stderr_reduced;
  double combined_stderr() const;
};

// Evaluates J by forward simulation of the dynamic team and J_RST through
// the reduced independent-observation form, and reports the gap.
EquivalenceReport verify_equivalence(const TeamSpec& spec,
                                     const StrategyProfile& strategies,
                                     EvalMethod method, int order = 64,
                                     std::uint64_t seed = 0,
                                     std::size_t n = 1000000);

}  // namespace teamopt
