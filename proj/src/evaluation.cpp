#include "teamopt/evaluation.hpp"

#include <cmath>

namespace teamopt {

namespace {

// Stream namespace for behavioral action draws, disjoint from the primitive
// component streams by construction (primitive streams are small integers
// fed through splitmix64 at a different call site).
constexpr std::uint64_t kActionStreamBase = 0xAC710000ULL;

// ---------------------------------------------------------------------------
// Gaussian component enumeration
// ---------------------------------------------------------------------------

struct GaussComp {
  Vec mean;
  Mat chol;
  int dim = 0;
  int target = -1;        // buffer offset, or -1 to store into noise_vals
  int target2 = -1;       // secondary copy (x1 doubles as State(1))
  int noise_slot = -1;    // causal slot index when target < 0
};

// Causal slot list (time-major, agent-minor) as (agent, time) pairs.
std::vector<std::pair<int, int>> causal_slots(const TeamSpec& spec) {
  std::vector<std::pair<int, int>> out;
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) out.emplace_back(i, t);
  }
  return out;
}

// Primitive components in declaration order. When obs_as_observation is
// true the per-slot noise writes straight into the observation offsets
// (reduced team: observations are exogenous nu draws); otherwise it is kept
// aside as additive noise for the dynamic rollout.
std::vector<GaussComp> gauss_components(const TeamSpec& spec,
                                        const VarLayout& layout,
                                        bool obs_as_observation) {
  std::vector<GaussComp> comps;
  if (spec.x1_dim() > 0) {
    GaussComp c;
    c.mean = spec.x1->mean;
    c.chol = spec.x1->cholesky();
    c.dim = spec.x1->dim();
    c.target = layout.offset(var_x1());
    c.target2 = layout.offset(var_state(1));
    comps.push_back(std::move(c));
  }
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) {
      GaussComp c;
      c.mean = spec.w0[t - 1].mean;
      c.chol = spec.w0[t - 1].cholesky();
      c.dim = spec.w0_dim(t);
      c.target = layout.offset(var_w0(t));
      comps.push_back(std::move(c));
    }
  }
  int slot_idx = 0;
  for (const auto& [i, t] : causal_slots(spec)) {
    const NoiseSpec& noise = spec.slot(i, t).obs_noise;
    GaussComp c;
    c.mean = noise.mean;
    c.chol = noise.cholesky();
    c.dim = noise.dim();
    if (obs_as_observation) {
      c.target = layout.offset(var_obs(i, t));
    } else {
      c.noise_slot = slot_idx;
    }
    comps.push_back(std::move(c));
    ++slot_idx;
  }
  return comps;
}

int total_gauss_dim(const std::vector<GaussComp>& comps) {
  int d = 0;
  for (const auto& c : comps) d += c.dim;
  return d;
}

// Tensor Gauss-Hermite sweep over all components; values are written into x
// (or noise_vals) before fn(node_weight) is invoked.
void for_each_gauss_node(const std::vector<GaussComp>& comps, int order,
                         double* x, std::vector<Vec>* noise_vals,
                         const std::function<void(double)>& fn) {
  const int total = total_gauss_dim(comps);
  if (total > 4) {
    throw DimensionTooLarge(
        "tensor quadrature supports total Gaussian dimension <= 4; use the "
        "Monte Carlo evaluator");
  }
  QuadratureRule rule = gauss_hermite(order);
  std::vector<int> idx(std::max(total, 1), 0);
  std::vector<Vec> z(comps.size());
  for (std::size_t c = 0; c < comps.size(); ++c) z[c].resize(comps[c].dim);
  while (true) {
    double w = 1.0;
    int pos = 0;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      for (int k = 0; k < comps[c].dim; ++k, ++pos) {
        z[c](k) = rule.nodes[idx[pos]];
        w *= rule.weights[idx[pos]];
      }
      Vec val = comps[c].mean + comps[c].chol * z[c];
      if (comps[c].target >= 0) {
        for (int k = 0; k < comps[c].dim; ++k) x[comps[c].target + k] = val(k);
        if (comps[c].target2 >= 0) {
          for (int k = 0; k < comps[c].dim; ++k) {
            x[comps[c].target2 + k] = val(k);
          }
        }
      } else {
        (*noise_vals)[comps[c].noise_slot] = std::move(val);
      }
    }
    fn(w);
    int k = total - 1;
    for (; k >= 0; --k) {
      if (++idx[k] < order) break;
      idx[k] = 0;
    }
    if (k < 0) break;
  }
}

// Write one primitive draw into a flat buffer; returns per-slot noise.
void load_primitives_flat(const TeamSpec& spec, const VarLayout& layout,
                          const PrimitiveSample& ps, double* x) {
  if (spec.x1_dim() > 0) {
    int off = layout.offset(var_x1());
    int soff = layout.offset(var_state(1));
    for (int k = 0; k < spec.x1_dim(); ++k) {
      x[off + k] = ps.x1(k);
      x[soff + k] = ps.x1(k);
    }
  }
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) {
      int off = layout.offset(var_w0(t));
      for (int k = 0; k < spec.w0_dim(t); ++k) x[off + k] = ps.w0[t - 1](k);
    }
  }
}

struct McAccumulator {
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    if (!std::isfinite(v)) {
      throw NonFinite("Monte Carlo sample value is not finite");
    }
    sum += v;
    sumsq += v * v;
    ++n;
  }
  McEstimate finish() const {
    McEstimate e;
    e.n = n;
    e.estimate = sum / static_cast<double>(n);
    if (n > 1) {
      double var = (sumsq - sum * sum / static_cast<double>(n)) /
                   static_cast<double>(n - 1);
      e.stderr_ = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    }
    return e;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// BranchWalker
// ---------------------------------------------------------------------------

namespace {

Mat grid_centers(const Grid& action) {
  Mat centers(action.dim(), action.cell_count());
  for (int k = 0; k < action.cell_count(); ++k) {
    centers.col(k) = action.center(k);
  }
  return centers;
}

}  // namespace

BranchWalker::BranchWalker(const TeamSpec& spec, const VarLayout& layout,
                           const StrategyProfile& strategies) {
  for (const auto& [i, t] : causal_slots(spec)) {
    Slot s;
    s.agent = i;
    s.time = t;
    s.y_off = layout.offset(var_obs(i, t));
    s.y_dim = layout.dim(var_obs(i, t));
    s.u_off = layout.offset(var_action(i, t));
    s.u_dim = layout.dim(var_action(i, t));
    s.strategy = &strategies.slot(i, t);
    std::visit(
        [&](const auto& impl) {
          using T = std::decay_t<decltype(impl)>;
          if constexpr (std::is_same_v<T, BehavioralGridStrategy> ||
                        std::is_same_v<T, DeterministicGridStrategy>) {
            s.centers = grid_centers(impl.action_grid());
          } else if constexpr (std::is_same_v<T, TabularStrategy>) {
            s.centers = impl.actions();
          }
        },
        *s.strategy);
    y_scratch_.emplace_back(Vec::Zero(s.y_dim));
    u_scratch_.emplace_back(Vec::Zero(s.u_dim));
    slots_.push_back(std::move(s));
  }
}

void BranchWalker::walk(double* x, int skip,
                        const std::function<void(double*, double)>& cb) {
  recurse(x, 0, skip, 1.0, cb);
}

void BranchWalker::recurse(double* x, std::size_t k, int skip, double prob,
                           const std::function<void(double*, double)>& cb) {
  if (k == slots_.size()) {
    cb(x, prob);
    return;
  }
  const Slot& s = slots_[k];
  if (static_cast<int>(k) == skip) {
    recurse(x, k + 1, skip, prob, cb);
    return;
  }
  Vec& y = y_scratch_[k];
  for (int d = 0; d < s.y_dim; ++d) y(d) = x[s.y_off + d];
  if (const auto* lin = std::get_if<LinearStrategy>(s.strategy)) {
    Vec& u = u_scratch_[k];
    u.noalias() = lin->gain * y;
    u += lin->offset;
    for (int d = 0; d < s.u_dim; ++d) x[s.u_off + d] = u(d);
    recurse(x, k + 1, skip, prob, cb);
  } else if (const auto* det =
                 std::get_if<DeterministicGridStrategy>(s.strategy)) {
    int a = det->lookup()[det->obs_grid().locate(y)];
    for (int d = 0; d < s.u_dim; ++d) x[s.u_off + d] = s.centers(d, a);
    recurse(x, k + 1, skip, prob, cb);
  } else if (const auto* tab = std::get_if<TabularStrategy>(s.strategy)) {
    int j = tab->obs_grid().locate(y);
    for (int d = 0; d < s.u_dim; ++d) x[s.u_off + d] = s.centers(d, j);
    recurse(x, k + 1, skip, prob, cb);
  } else {
    const auto& beh = std::get<BehavioralGridStrategy>(*s.strategy);
    int j = beh.obs_grid().locate(y);
    const Mat& tbl = beh.table();
    for (int a = 0; a < tbl.cols(); ++a) {
      double p = tbl(j, a);
      if (p <= 0.0) continue;
      for (int d = 0; d < s.u_dim; ++d) x[s.u_off + d] = s.centers(d, a);
      recurse(x, k + 1, skip, prob * p, cb);
    }
  }
}

int BranchWalker::obs_cell(const double* x, int k) {
  const Slot& s = slots_[k];
  Vec& y = y_scratch_[k];
  for (int d = 0; d < s.y_dim; ++d) y(d) = x[s.y_off + d];
  return std::visit(
      [&](const auto& impl) -> int {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, LinearStrategy>) {
          throw TeamError("obs_cell: slot strategy has no observation grid");
        } else {
          return impl.obs_grid().locate(y);
        }
      },
      *s.strategy);
}

void BranchWalker::sample_actions(double* x, std::uint64_t seed,
                                  std::size_t sample_index) {
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    const Slot& s = slots_[k];
    Vec& y = y_scratch_[k];
    for (int d = 0; d < s.y_dim; ++d) y(d) = x[s.y_off + d];
    Vec u;
    if (const auto* beh = std::get_if<BehavioralGridStrategy>(s.strategy)) {
      CounterRng rng(seed ^ splitmix64(kActionStreamBase + k), sample_index);
      u = beh->sample_action(y, rng);
    } else {
      u = strategy_act(*s.strategy, y);
    }
    for (int d = 0; d < s.u_dim; ++d) x[s.u_off + d] = u(d);
  }
}

// ---------------------------------------------------------------------------
// Dynamic (closed-loop) evaluation
// ---------------------------------------------------------------------------

namespace {

class DynamicEvaluator {
 public:
  DynamicEvaluator(const TeamSpec& spec, const StrategyProfile& strategies)
      : spec_(&spec),
        layout_(VarLayout::for_spec(spec)),
        cost_(FlatExpr::compile(spec.cost, layout_)) {
    int slot_idx = 0;
    for (int t = 1; t <= spec.horizon; ++t) {
      for (int i = 1; i <= spec.num_agents; ++i) {
        const auto& slot = spec.slot(i, t);
        SlotCtx c;
        c.y_off = layout_.offset(var_obs(i, t));
        c.y_dim = layout_.dim(var_obs(i, t));
        c.u_off = layout_.offset(var_action(i, t));
        c.u_dim = layout_.dim(var_action(i, t));
        c.obs_map = FlatAffine::compile(slot.obs_map, layout_);
        c.strategy = &strategies.slot(i, t);
        std::visit(
            [&](const auto& impl) {
              using T = std::decay_t<decltype(impl)>;
              if constexpr (std::is_same_v<T, BehavioralGridStrategy> ||
                            std::is_same_v<T, DeterministicGridStrategy>) {
                c.centers = grid_centers(impl.action_grid());
              } else if constexpr (std::is_same_v<T, TabularStrategy>) {
                c.centers = impl.actions();
              }
            },
            *c.strategy);
        c.y_scratch = Vec::Zero(c.y_dim);
        c.u_scratch = Vec::Zero(c.u_dim);
        c.index = slot_idx++;
        events_.push_back(Event{Event::Slot, static_cast<int>(slots_.size()),
                                FlatAffine{}, -1, 0});
        slots_.push_back(std::move(c));
      }
      if (static_cast<int>(spec.dynamics.size()) >= t) {
        Event e;
        e.kind = Event::State;
        e.map = FlatAffine::compile(spec.dynamics[t - 1], layout_);
        e.out_off = layout_.offset(var_state(t + 1));
        e.out_dim = layout_.dim(var_state(t + 1));
        events_.push_back(std::move(e));
      }
    }
    noise_vals_.resize(slots_.size());
  }

  const VarLayout& layout() const { return layout_; }
  std::vector<Vec>& noise_vals() { return noise_vals_; }
  int num_slots() const { return static_cast<int>(slots_.size()); }

  // Exact expectation over behavioral branches given the primitives in x
  // and noise_vals(); adds weight * E[cost | primitives] into acc.
  void accumulate(double* x, double weight, double& acc) {
    recurse(x, 0, weight, acc);
  }

  // One sampled rollout; behavioral slots draw from per-slot streams.
  double simulate(double* x, std::uint64_t seed, std::size_t sample_index) {
    for (const Event& ev : events_) {
      if (ev.kind == Event::State) {
        apply_state(x, ev);
        continue;
      }
      SlotCtx& c = slots_[ev.slot];
      compute_obs(x, c);
      Vec u;
      if (const auto* beh = std::get_if<BehavioralGridStrategy>(c.strategy)) {
        CounterRng rng(seed ^ splitmix64(kActionStreamBase + c.index),
                       sample_index);
        u = beh->sample_action(c.y_scratch, rng);
      } else {
        u = strategy_act(*c.strategy, c.y_scratch);
      }
      for (int d = 0; d < c.u_dim; ++d) x[c.u_off + d] = u(d);
    }
    return cost_.eval(x);
  }

 private:
  struct SlotCtx {
    int y_off = 0, y_dim = 0, u_off = 0, u_dim = 0, index = 0;
    FlatAffine obs_map;
    const Strategy* strategy = nullptr;
    Mat centers;
    Vec y_scratch, u_scratch;
  };
  struct Event {
    enum Kind { Slot, State } kind = Slot;
    int slot = -1;
    FlatAffine map;  // State events
    int out_off = -1, out_dim = 0;
  };

  void apply_state(double* x, const Event& ev) {
    double out[32];
    ev.map.eval_into(x, out);
    for (int d = 0; d < ev.out_dim; ++d) x[ev.out_off + d] = out[d];
  }

  // obs = obs_map(x) + noise; written into x and y_scratch.
  void compute_obs(double* x, SlotCtx& c) {
    double h[32];
    c.obs_map.eval_into(x, h);
    const Vec& w = noise_vals_[c.index];
    for (int d = 0; d < c.y_dim; ++d) {
      double y = h[d] + w(d);
      x[c.y_off + d] = y;
      c.y_scratch(d) = y;
    }
  }

  void recurse(double* x, std::size_t ev_idx, double weight, double& acc) {
    if (ev_idx == events_.size()) {
      double v = cost_.eval(x);
      if (!std::isfinite(v)) {
        throw NonFinite("dynamic cost is not finite at a quadrature node");
      }
      acc += weight * v;
      return;
    }
    const Event& ev = events_[ev_idx];
    if (ev.kind == Event::State) {
      apply_state(x, ev);
      recurse(x, ev_idx + 1, weight, acc);
      return;
    }
    SlotCtx& c = slots_[ev.slot];
    compute_obs(x, c);
    if (const auto* lin = std::get_if<LinearStrategy>(c.strategy)) {
      c.u_scratch.noalias() = lin->gain * c.y_scratch;
      c.u_scratch += lin->offset;
      for (int d = 0; d < c.u_dim; ++d) x[c.u_off + d] = c.u_scratch(d);
      recurse(x, ev_idx + 1, weight, acc);
    } else if (const auto* det =
                   std::get_if<DeterministicGridStrategy>(c.strategy)) {
      int a = det->lookup()[det->obs_grid().locate(c.y_scratch)];
      for (int d = 0; d < c.u_dim; ++d) x[c.u_off + d] = c.centers(d, a);
      recurse(x, ev_idx + 1, weight, acc);
    } else if (const auto* tab = std::get_if<TabularStrategy>(c.strategy)) {
      int j = tab->obs_grid().locate(c.y_scratch);
      for (int d = 0; d < c.u_dim; ++d) x[c.u_off + d] = c.centers(d, j);
      recurse(x, ev_idx + 1, weight, acc);
    } else {
      const auto& beh = std::get<BehavioralGridStrategy>(*c.strategy);
      int j = beh.obs_grid().locate(c.y_scratch);
      const Mat& tbl = beh.table();
      Vec y_saved = c.y_scratch;
      for (int a = 0; a < tbl.cols(); ++a) {
        double p = tbl(j, a);
        if (p <= 0.0) continue;
        for (int d = 0; d < c.u_dim; ++d) x[c.u_off + d] = c.centers(d, a);
        recurse(x, ev_idx + 1, weight * p, acc);
        // later slots re-derive their observations; ours is untouched
      }
      c.y_scratch = y_saved;
    }
  }

  const TeamSpec* spec_;
  VarLayout layout_;
  FlatExpr cost_;
  std::vector<SlotCtx> slots_;
  std::vector<Event> events_;
  std::vector<Vec> noise_vals_;
};

}  // namespace

// ---------------------------------------------------------------------------
// Expected cost
// ---------------------------------------------------------------------------

McEstimate expected_cost_mc(const TeamSpec& spec,
                            const StrategyProfile& strategies,
                            std::uint64_t seed, std::size_t n) {
  if (n < 1) throw TeamError("expected_cost_mc: n must be >= 1");
  DynamicEvaluator de(spec, strategies);
  PrimitiveDrawer drawer(spec, seed);
  std::vector<double> x(de.layout().total(), 0.0);
  McAccumulator acc;
  for (std::size_t s = 0; s < n; ++s) {
    PrimitiveSample ps = drawer.draw(s);
    load_primitives_flat(spec, de.layout(), ps, x.data());
    int idx = 0;
    for (const auto& [i, t] : causal_slots(spec)) {
      de.noise_vals()[idx++] = ps.obs_noise[i - 1][t - 1];
    }
    acc.add(de.simulate(x.data(), seed, s));
  }
  return acc.finish();
}

McEstimate expected_cost_mc(const ReducedTeam& rt,
                            const StrategyProfile& strategies,
                            std::uint64_t seed, std::size_t n) {
  if (n < 1) throw TeamError("expected_cost_mc: n must be >= 1");
  FlatReduced fr = FlatReduced::compile(rt);
  BranchWalker bw(rt.spec, fr.layout, strategies);
  PrimitiveDrawer drawer(rt.spec, seed);
  std::vector<double> x(fr.layout.total(), 0.0);
  McAccumulator acc;
  for (std::size_t s = 0; s < n; ++s) {
    PrimitiveSample ps = drawer.draw(s);
    load_primitives_flat(rt.spec, fr.layout, ps, x.data());
    // observations are exogenous nu draws in the reduced team
    for (const auto& [i, t] : causal_slots(rt.spec)) {
      int off = fr.layout.offset(var_obs(i, t));
      const Vec& y = ps.obs_noise[i - 1][t - 1];
      for (int d = 0; d < y.size(); ++d) x[off + d] = y(d);
    }
    bw.sample_actions(x.data(), seed, s);
    acc.add(fr.cost_phi(x.data()));
  }
  return acc.finish();
}

double expected_cost_quadrature(const TeamSpec& spec,
                                const StrategyProfile& strategies, int order) {
  DynamicEvaluator de(spec, strategies);
  auto comps = gauss_components(spec, de.layout(), false);
  std::vector<double> x(de.layout().total(), 0.0);
  double acc = 0.0;
  for_each_gauss_node(comps, order, x.data(), &de.noise_vals(),
                      [&](double w) { de.accumulate(x.data(), w, acc); });
  return acc;
}

double expected_cost_quadrature(const ReducedTeam& rt,
                                const StrategyProfile& strategies, int order) {
  FlatReduced fr = FlatReduced::compile(rt);
  BranchWalker bw(rt.spec, fr.layout, strategies);
  auto comps = gauss_components(rt.spec, fr.layout, true);
  std::vector<double> x(fr.layout.total(), 0.0);
  double acc = 0.0;
  for_each_gauss_node(comps, order, x.data(), nullptr, [&](double w) {
    bw.walk(x.data(), -1, [&](double* xx, double p) {
      acc += w * p * fr.cost_phi(xx);
    });
  });
  return acc;
}

// ---------------------------------------------------------------------------
// Flat scenarios / ScenarioSet
// ---------------------------------------------------------------------------

FlatScenarios FlatScenarios::quadrature(const ReducedTeam& rt, int order) {
  VarLayout layout = VarLayout::for_spec(rt.spec);
  auto comps = gauss_components(rt.spec, layout, true);
  const int total = total_gauss_dim(comps);
  double count_d = std::pow(static_cast<double>(order), total);
  if (count_d > static_cast<double>(1 << 22)) {
    throw DimensionTooLarge(
        "quadrature scenario count exceeds 2^22; lower the order or use "
        "Monte Carlo scenarios");
  }
  FlatScenarios fs;
  fs.stride = layout.total();
  const std::size_t count = static_cast<std::size_t>(std::llround(count_d));
  fs.data.assign(count * fs.stride, 0.0);
  fs.weights.reserve(count);
  std::vector<double> x(fs.stride, 0.0);
  for_each_gauss_node(comps, order, x.data(), nullptr, [&](double w) {
    std::size_t k = fs.weights.size();
    std::copy(x.begin(), x.end(), fs.data.begin() + k * fs.stride);
    fs.weights.push_back(w);
  });
  return fs;
}

FlatScenarios FlatScenarios::monte_carlo(const ReducedTeam& rt,
                                         std::uint64_t seed, std::size_t n) {
  if (n < 1) throw TeamError("monte_carlo scenarios: n must be >= 1");
  VarLayout layout = VarLayout::for_spec(rt.spec);
  PrimitiveDrawer drawer(rt.spec, seed);
  FlatScenarios fs;
  fs.stride = layout.total();
  fs.data.assign(n * fs.stride, 0.0);
  fs.weights.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t s = 0; s < n; ++s) {
    PrimitiveSample ps = drawer.draw(s);
    double* x = fs.row(s);
    load_primitives_flat(rt.spec, layout, ps, x);
    for (const auto& [i, t] : causal_slots(rt.spec)) {
      int off = layout.offset(var_obs(i, t));
      const Vec& y = ps.obs_noise[i - 1][t - 1];
      for (int d = 0; d < y.size(); ++d) x[off + d] = y(d);
    }
  }
  return fs;
}

namespace {

// Scenario PointViews carry primitives and observations only.
PointView scenario_point(const TeamSpec& spec, const VarLayout& layout,
                         const double* x) {
  PointView p;
  auto bind = [&](const VarId& v) {
    int off = layout.offset(v), d = layout.dim(v);
    Vec val(d);
    for (int k = 0; k < d; ++k) val(k) = x[off + k];
    p.set(v, std::move(val));
  };
  if (spec.x1_dim() > 0) bind(var_x1());
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) bind(var_w0(t));
  }
  for (const auto& [i, t] : causal_slots(spec)) bind(var_obs(i, t));
  return p;
}

ScenarioSet from_flat(const ReducedTeam& rt, const FlatScenarios& fs);

}  // namespace

ScenarioSet ScenarioSet::quadrature(const ReducedTeam& rt, int order) {
  return from_flat(rt, FlatScenarios::quadrature(rt, order));
}

ScenarioSet ScenarioSet::monte_carlo(const ReducedTeam& rt,
                                     std::uint64_t seed, std::size_t n) {
  return from_flat(rt, FlatScenarios::monte_carlo(rt, seed, n));
}

namespace {

ScenarioSet from_flat(const ReducedTeam& rt, const FlatScenarios& fs) {
  VarLayout layout = VarLayout::for_spec(rt.spec);
  ScenarioSet set;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    set.mutable_items().push_back(
        Scenario{scenario_point(rt.spec, layout, fs.row(k)), fs.weights[k]});
  }
  return set;
}

}  // namespace

double ScenarioSet::expected_cost(const ReducedTeam& rt,
                                  const StrategyProfile& strategies) const {
  FlatReduced fr = FlatReduced::compile(rt);
  BranchWalker bw(rt.spec, fr.layout, strategies);
  std::vector<double> x(fr.layout.total(), 0.0);
  double acc = 0.0;
  for (const Scenario& sc : items_) {
    fr.layout.load(sc.point, x.data());
    bw.walk(x.data(), -1, [&](double* xx, double p) {
      acc += sc.weight * p * fr.cost_phi(xx);
    });
  }
  return acc;
}

int reduced_dimension(const ReducedTeam& rt) {
  int d = rt.spec.omega0_dim();
  for (const auto& [i, t] : causal_slots(rt.spec)) {
    d += rt.spec.slot(i, t).obs_space.dim;
  }
  return d;
}

void visit_reduced_branches(
    const ReducedTeam& rt, const StrategyProfile& strategies,
    const std::vector<Scenario>& scenarios,
    const std::function<void(const PointView&, double)>& callback) {
  auto slots = causal_slots(rt.spec);
  for (const Scenario& sc : scenarios) {
    PointView p = sc.point;
    std::function<void(std::size_t, double)> rec = [&](std::size_t k,
                                                       double prob) {
      if (k == slots.size()) {
        callback(p, prob);
        return;
      }
      auto [i, t] = slots[k];
      const Vec& y = p.get(var_obs(i, t));
      const Strategy& strat = strategies.slot(i, t);
      if (const auto* beh = std::get_if<BehavioralGridStrategy>(&strat)) {
        int j = beh->obs_grid().locate(y);
        const Mat& tbl = beh->table();
        for (int a = 0; a < tbl.cols(); ++a) {
          double pa = tbl(j, a);
          if (pa <= 0.0) continue;
          p.set(var_action(i, t), beh->action_grid().center(a));
          rec(k + 1, prob * pa);
        }
      } else {
        p.set(var_action(i, t), strategy_act(strat, y));
        rec(k + 1, prob);
      }
    };
    rec(0, sc.weight);
  }
}

// ---------------------------------------------------------------------------
// Posterior mean of a slot's quadratic target
// ---------------------------------------------------------------------------

Vec posterior_mean(const ReducedTeam& rt, int agent, int time, const Vec& y,
                   const StrategyProfile& other_strategies, int order) {
  const TeamSpec& spec = rt.spec;
  ExprPtr quad = slot_quadratic_term(rt.primitive_cost.expr, agent, time);
  if (!quad) {
    throw NonQuadratic("slot (" + std::to_string(agent) + "," +
                       std::to_string(time) +
                       ") has no quadratic own-action cost term");
  }
  const AffineMap& target = quad->rhs;

  VarLayout layout = VarLayout::for_spec(spec);
  // Integration components: all primitives plus the observations of the
  // slot's strict causal predecessors; later channels integrate to one.
  std::vector<GaussComp> comps;
  for (auto& c : gauss_components(spec, layout, true)) {
    if (c.target < 0) continue;
    comps.push_back(std::move(c));
  }
  // The components list from gauss_components covers all observations; drop
  // the slot's own (fixed at y) and any successor's.
  std::vector<GaussComp> keep;
  std::vector<std::pair<int, int>> pred;
  {
    std::size_t base = comps.size();
    auto slots = causal_slots(spec);
    base -= slots.size();
    for (std::size_t k = 0; k < comps.size(); ++k) {
      if (k < base) {
        keep.push_back(std::move(comps[k]));  // x1 / w0
        continue;
      }
      auto [i, t] = slots[k - base];
      if (strictly_precedes(i, t, agent, time)) {
        keep.push_back(std::move(comps[k]));
        pred.emplace_back(i, t);
      }
    }
  }
  if (total_gauss_dim(keep) > 4) {
    throw DimensionTooLarge(
        "posterior_mean supports at most 4 integration dimensions");
  }

  PointView base;
  base.set(var_obs(agent, time), y);
  std::vector<double> x(layout.total(), 0.0);
  double num_den = 0.0;
  Vec num = Vec::Zero(target.dim());

  for_each_gauss_node(keep, order, x.data(), nullptr, [&](double w) {
    PointView p = base;
    if (spec.x1_dim() > 0) {
      int off = layout.offset(var_x1());
      Vec v(spec.x1_dim());
      for (int k = 0; k < v.size(); ++k) v(k) = x[off + k];
      p.set(var_x1(), std::move(v));
    }
    for (int t = 1; t <= spec.horizon; ++t) {
      if (spec.w0_dim(t) > 0) {
        int off = layout.offset(var_w0(t));
        Vec v(spec.w0_dim(t));
        for (int k = 0; k < v.size(); ++k) v(k) = x[off + k];
        p.set(var_w0(t), std::move(v));
      }
    }
    for (const auto& [i, t] : pred) {
      int off = layout.offset(var_obs(i, t));
      int d = layout.dim(var_obs(i, t));
      Vec v(d);
      for (int k = 0; k < d; ++k) v(k) = x[off + k];
      p.set(var_obs(i, t), std::move(v));
    }
    // branch over predecessor actions
    std::function<void(std::size_t, double)> rec = [&](std::size_t k,
                                                       double prob) {
      if (k == pred.size()) {
        // phi over the slot's own channel and all predecessors
        double lp = rt.log_phi_slot(agent, time, y, p);
        for (const auto& [i, t] : pred) {
          lp += rt.log_phi_slot(i, t, p.get(var_obs(i, t)), p);
        }
        double wt = prob * std::exp(lp);
        num_den += wt;
        num += wt * target.eval(p);
        return;
      }
      auto [i, t] = pred[k];
      const Strategy& strat = other_strategies.slot(i, t);
      const Vec& yp = p.get(var_obs(i, t));
      if (const auto* beh = std::get_if<BehavioralGridStrategy>(&strat)) {
        int j = beh->obs_grid().locate(yp);
        const Mat& tbl = beh->table();
        for (int a = 0; a < tbl.cols(); ++a) {
          double pa = tbl(j, a);
          if (pa <= 0.0) continue;
          p.set(var_action(i, t), beh->action_grid().center(a));
          rec(k + 1, prob * pa);
        }
      } else {
        p.set(var_action(i, t), strategy_act(strat, yp));
        rec(k + 1, prob);
      }
    };
    rec(0, w);
  });

  if (!(num_den > 0.0) || !std::isfinite(num_den)) {
    throw TeamError("posterior_mean: conditional weight is degenerate");
  }
  return num / num_den;
}

// ---------------------------------------------------------------------------
// Equivalence of the dynamic and reduced evaluations
// ---------------------------------------------------------------------------

EquivalenceReport verify_equivalence(const TeamSpec& spec,
                                     const StrategyProfile& strategies,
                                     EvalMethod method, int order,
                                     std::uint64_t seed, std::size_t n) {
  ReducedTeam rt = static_reduce(spec);
  EquivalenceReport rep;
  if (method == EvalMethod::Quadrature) {
    rep.j_dynamic = expected_cost_quadrature(spec, strategies, order);
    rep.j_reduced = expected_cost_quadrature(rt, strategies, order);
  } else {
    McEstimate d = expected_cost_mc(spec, strategies, seed, n);
    McEstimate r =
        expected_cost_mc(rt, strategies, seed ^ 0xD1CE5EEDULL, n);
    rep.j_dynamic = d.estimate;
    rep.j_reduced = r.estimate;
    rep.stderr_dynamic = d.stderr_;
    rep.stderr_reduced = r.stderr_;
  }
  rep.gap = std::abs(rep.j_dynamic - rep.j_reduced);
  return rep;
}

}  // namespace teamopt
