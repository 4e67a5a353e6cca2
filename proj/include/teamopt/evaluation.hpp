#pragma once

#include <functional>

#include "teamopt/flat_eval.hpp"
#include "teamopt/reduction.hpp"

namespace teamopt {

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

// J by forward simulation of the dynamic team. Behavioral slots draw their
// actions from dedicated counter-based streams.
McEstimate expected_cost_mc(const TeamSpec& spec,
                            const StrategyProfile& strategies,
                            std::uint64_t seed, std::size_t n);

// J_RST by importance-weighted sampling: observations drawn from the nu
// laws, cost weighted by phi.
McEstimate expected_cost_mc(const ReducedTeam& rt,
                            const StrategyProfile& strategies,
                            std::uint64_t seed, std::size_t n);

// Deterministic tensor Gauss-Hermite evaluation. Behavioral slots enter as
// exact weighted sums over their action points. Throws DimensionTooLarge
// when the total primitive dimension exceeds 4.
double expected_cost_quadrature(const TeamSpec& spec,
                                const StrategyProfile& strategies, int order);
double expected_cost_quadrature(const ReducedTeam& rt,
                                const StrategyProfile& strategies, int order);

// Exact minimizer of the slot's quadratic cost slice given its observation:
// the mean of p^i_t under the phi-weighted conditional law. Throws
// NonQuadratic when the slot has no ||u - p(.)||^2_R term.
Vec posterior_mean(const ReducedTeam& rt, int agent, int time, const Vec& y,
                   const StrategyProfile& other_strategies, int order);

// ---------------------------------------------------------------------------
// Scenario sets over the reduced team
//
// A scenario fixes (omega0, all observations) with a base weight under
// Pr(d omega0) x prod nu^i_t. Since RST observations are exogenous, strategy
// changes never invalidate a scenario set; this is what makes exact
// person-by-person sweeps cheap.
// ---------------------------------------------------------------------------

struct Scenario {
  PointView point;  // primitives + all observations bound
  double weight;    // sums to 1 across the set
};

class ScenarioSet {
 public:
  // Gauss-Hermite tensor nodes when total dimension permits.
  static ScenarioSet quadrature(const ReducedTeam& rt, int order);
  // Seeded draws with uniform weights.
  static ScenarioSet monte_carlo(const ReducedTeam& rt, std::uint64_t seed,
                                 std::size_t n);

  const std::vector<Scenario>& scenarios() const { return items_; }
  std::vector<Scenario>& mutable_items() { return items_; }

  // Expected cost of a profile on this scenario measure; exact weighted
  // expansion over behavioral rows.
  double expected_cost(const ReducedTeam& rt,
                       const StrategyProfile& strategies) const;

 private:
  std::vector<Scenario> items_;
};

// Dimension of the RST integration domain: omega0 plus all observations.
int reduced_dimension(const ReducedTeam& rt);

// ---------------------------------------------------------------------------
// Flat scenario storage and branch walking, the allocation-free counterpart
// of ScenarioSet used by evaluators and optimizers.
// ---------------------------------------------------------------------------

struct FlatScenarios {
  int stride = 0;               // layout total
  std::vector<double> data;     // size() * stride, primitives + obs filled
  std::vector<double> weights;  // sum to 1

  std::size_t size() const { return weights.size(); }
  double* row(std::size_t k) { return data.data() + k * stride; }
  const double* row(std::size_t k) const { return data.data() + k * stride; }

  static FlatScenarios quadrature(const ReducedTeam& rt, int order);
  static FlatScenarios monte_carlo(const ReducedTeam& rt, std::uint64_t seed,
                                   std::size_t n);
};

// Writes the actions of a profile into a flat buffer whose observations are
// already filled, visiting every behavioral branch with its probability.
class BranchWalker {
 public:
  struct Slot {
    int agent = 0, time = 0;
    int y_off = 0, y_dim = 0, u_off = 0, u_dim = 0;
    const Strategy* strategy = nullptr;
    Mat centers;  // action points (dim x count) for grid-based strategies
  };

  BranchWalker(const TeamSpec& spec, const VarLayout& layout,
               const StrategyProfile& strategies);

  const std::vector<Slot>& slots() const { return slots_; }
  // skip: index into slots() whose action is taken as already written
  // (-1: none). cb(x, branch_probability) at each leaf.
  void walk(double* x, int skip,
            const std::function<void(double*, double)>& cb);
  // Observation-grid cell index of slot k at the buffer's current y value.
  int obs_cell(const double* x, int k);
  // Sampled (rather than branched) action fill for Monte Carlo runs.
  void sample_actions(double* x, std::uint64_t seed, std::size_t sample_index);

 private:
  void recurse(double* x, std::size_t k, int skip, double prob,
               const std::function<void(double*, double)>& cb);

  std::vector<Slot> slots_;
  std::vector<Vec> y_scratch_, u_scratch_;
};

// Visits every (scenario x joint action branch) of a profile: callback gets
// the fully bound point and the branch probability times scenario weight.
// Deterministic slots contribute a single branch.
void visit_reduced_branches(
    const ReducedTeam& rt, const StrategyProfile& strategies,
    const std::vector<Scenario>& scenarios,
    const std::function<void(const PointView&, double)>& callback);

}  // namespace teamopt
