#pragma once

#include <optional>
#include <string>
#include <vector>

#include "teamopt/cost_expr.hpp"

namespace teamopt {

// Box in Euclidean space used for gridding and truncation.
struct SpaceSpec {
  int dim = 1;
  Vec lower;  // per-coordinate, strictly below upper
  Vec upper;

  static SpaceSpec box(double lo, double hi);        // scalar
  static SpaceSpec box(Vec lo, Vec hi);              // vector
  static SpaceSpec gaussian_default(int dim, double sigma);  // +-8 sigma
  void validate(const std::string& what) const;
};

struct NoiseSpec {
  Vec mean;
  Mat covariance;

  static NoiseSpec standard(int dim);
  static NoiseSpec scalar(double mean, double variance);
  int dim() const { return static_cast<int>(mean.size()); }
  // Cholesky factor; throws SingularNoise if not positive definite.
  Mat cholesky() const;
  double log_density(const Vec& x) const;
};

// One decision slot (agent i, time t).
struct AgentSlot {
  SpaceSpec obs_space;
  SpaceSpec action_space;
  // h-check: affine in X1, W0(s), State(s<=t) and strictly causally earlier
  // actions. Observation = obs_map + additive noise.
  AffineMap obs_map;
  NoiseSpec obs_noise;
};

struct TeamSpec {
  std::string name;
  int num_agents = 0;  // N
  int horizon = 1;     // T
  // Primitives; dim-0 means absent.
  std::optional<NoiseSpec> x1;
  std::vector<NoiseSpec> w0;  // size T or empty; dim-0 entries allowed
  // dynamics[t-1]: State(t+1) = affine(State(t), Action(*,t), W0(t)), needed
  // only when the cost or an observation references State(t>=2).
  std::vector<AffineMap> dynamics;
  // slots[i-1][t-1]
  std::vector<std::vector<AgentSlot>> slots;
  ExprPtr cost;

  const AgentSlot& slot(int i, int t) const { return slots[i - 1][t - 1]; }
  AgentSlot& slot(int i, int t) { return slots[i - 1][t - 1]; }
  int x1_dim() const { return x1 ? x1->dim() : 0; }
  int w0_dim(int t) const {
    return w0.empty() ? 0 : w0[t - 1].dim();
  }
  // total dimension of (x1, w0_{1:T})
  int omega0_dim() const;
};

// Causal order over slots: time-major, agent-minor.
// (j,s) precedes (i,t)  iff  s < t or (s == t and j < i).
bool strictly_precedes(int j, int s, int i, int t);

struct ValidationReport {
  bool sequential_no_sharing = false;
  bool additive_gaussian_observations = false;
  bool lqg_form = false;  // every slot has a ||u - p(.)||^2_R term, R pd
  bool existence_guaranteed = false;  // all three above
  std::vector<std::string> notes;
  bool ok() const {
    return sequential_no_sharing && additive_gaussian_observations;
  }
};

// Structural validation. Throws SingularNoise / ValidationError on hard
// violations; soft structure (LQG form) is reported via flags.
ValidationReport validate_team(const TeamSpec& spec);

// Cost with all State references substituted by the dynamics, so it is a
// function of primitives, observations and actions only.
struct PrimitiveCost {
  ExprPtr expr;
  double eval(const PointView& p) const { return expr->eval(p); }
};

PrimitiveCost unroll_cost(const TeamSpec& spec);

// One joint draw of all primitives.
struct PrimitiveSample {
  Vec x1;                              // may be empty
  std::vector<Vec> w0;                 // per t, may be empty vectors
  std::vector<std::vector<Vec>> obs_noise;  // [i-1][t-1]
};

std::vector<PrimitiveSample> sample_primitives(const TeamSpec& spec,
                                               std::uint64_t seed,
                                               std::size_t n);

// Counter-based primitive sampler: draw(k) is the k-th entry of
// sample_primitives(spec, seed, .) without materializing the batch.
class PrimitiveDrawer {
 public:
  PrimitiveDrawer(const TeamSpec& spec, std::uint64_t seed);
  PrimitiveSample draw(std::size_t sample_index) const;

 private:
  struct Component {
    NoiseSpec noise;
    Mat chol;
    std::uint64_t stream;
  };
  Vec draw_component(const Component& c, std::size_t sample_index) const;

  const TeamSpec* spec_;
  std::uint64_t seed_;
  std::vector<Component> comps_;
  int x1_comp_ = -1;
  std::vector<int> w0_comp_;
  std::vector<std::vector<int>> obs_comp_;
};

// Bind a sample's primitives (not observations) into a PointView.
void bind_primitives(const TeamSpec& spec, const PrimitiveSample& s,
                     PointView& p);

// Given primitives and all actions bound in `p`, bind State(2..T+1) via the
// dynamics and Obs(i,t) via obs_map + noise. Actions must already be bound
// for every step an observation or dynamic depends on; call per time step if
// interleaving is needed. This variant binds everything at once and is valid
// when actions for all steps are present.
void bind_trajectory(const TeamSpec& spec, const PrimitiveSample& s,
                     PointView& p);

}  // namespace teamopt
