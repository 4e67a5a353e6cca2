#pragma once

#include "teamopt/evaluation.hpp"

namespace teamopt {

// ---------------------------------------------------------------------------
// Best linear baseline
// ---------------------------------------------------------------------------

struct BestLinearResult {
  StrategyProfile profile;
  std::vector<double> gains;  // one scalar gain per slot, causal order
  double cost = 0.0;
};

// Exhaustive search over per-slot scalar gains (u = a * y, a * I for vector
// slots) on the given coefficient grid, followed by cyclic golden-section
// refinement per coordinate. Cost is quadrature-evaluated when the primitive
// dimension permits, Monte Carlo with a fixed seed otherwise.
BestLinearResult best_linear(const TeamSpec& spec,
                             const std::vector<double>& coeff_grid,
                             int order = 64, std::uint64_t seed = 0,
                             std::size_t mc_n = 200000);

// ---------------------------------------------------------------------------
// Person-by-person optimization
// ---------------------------------------------------------------------------

struct PbpOptions {
  int max_sweeps = 50;
  double tol = 1e-8;       // stop when a full sweep improves less than this
  int obs_cells = 201;     // observation grid per slot
  int action_points = 201; // candidate action grid per slot
  int order = 32;          // scenario quadrature order
  std::size_t mc_n = 30000;  // scenario count when dimension forces MC
  std::uint64_t seed = 0;
  // polish each cell's grid argmin by per-coordinate golden-section
  bool refine_actions = true;
};

struct PbpStep {
  int agent = 0, time = 0;
  double cost = 0.0;  // scenario-measure cost after this slot's update
};

struct PbpResult {
  StrategyProfile profile;  // deterministic (tabular) per slot
  double initial_cost = 0.0;
  std::vector<PbpStep> trace;
  double final_cost = 0.0;
  int sweeps = 0;
  bool converged = false;
};

// Cyclic exact cell-wise best responses on a fixed scenario measure over the
// reduced team; the trace is monotone nonincreasing because each update
// minimizes the same fixed-measure functional over a family containing the
// previous slot strategy.
PbpResult pbp_optimize(const ReducedTeam& rt, const StrategyProfile& init,
                       const PbpOptions& opts = {});

// Expectation of the (agent,time) cost slice times phi on the scenario
// measure; by nonnegativity of the remaining terms it is bounded by the full
// expected cost. A slot without an own-action quadratic term has a zero
// slice and the bound is trivial.
double cost_slice_bound(const ReducedTeam& rt,
                        const StrategyProfile& strategies, int agent, int time,
                        int order = 32, std::uint64_t seed = 0,
                        std::size_t mc_n = 200000);

// Golden-section minimization of a unimodal scalar function on [lo, hi].
double golden_section(const std::function<double(double)>& f, double lo,
                      double hi, double tol = 1e-7);

}  // namespace teamopt
