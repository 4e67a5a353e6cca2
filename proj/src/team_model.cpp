#include "teamopt/team_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace teamopt {

SpaceSpec SpaceSpec::box(double lo, double hi) {
  SpaceSpec s;
  s.dim = 1;
  s.lower = Vec::Constant(1, lo);
  s.upper = Vec::Constant(1, hi);
  s.validate("box");
  return s;
}

SpaceSpec SpaceSpec::box(Vec lo, Vec hi) {
  SpaceSpec s;
  s.dim = static_cast<int>(lo.size());
  s.lower = std::move(lo);
  s.upper = std::move(hi);
  s.validate("box");
  return s;
}

SpaceSpec SpaceSpec::gaussian_default(int dim, double sigma) {
  SpaceSpec s;
  s.dim = dim;
  s.lower = Vec::Constant(dim, -8.0 * sigma);
  s.upper = Vec::Constant(dim, 8.0 * sigma);
  return s;
}

void SpaceSpec::validate(const std::string& what) const {
  if (dim < 1) throw ValidationError(what + ": dim must be >= 1");
  if (lower.size() != dim || upper.size() != dim) {
    throw ValidationError(what + ": bounds dimension mismatch");
  }
  for (int k = 0; k < dim; ++k) {
    if (!(lower(k) < upper(k))) {
      throw ValidationError(what + ": lower must be < upper per coordinate");
    }
  }
}

NoiseSpec NoiseSpec::standard(int dim) {
  return {Vec::Zero(dim), Mat::Identity(dim, dim)};
}

NoiseSpec NoiseSpec::scalar(double mean, double variance) {
  return {Vec::Constant(1, mean), Mat::Constant(1, 1, variance)};
}

Mat NoiseSpec::cholesky() const {
  if (covariance.rows() != dim() || covariance.cols() != dim()) {
    throw SingularNoise("covariance dimension mismatch");
  }
  if (!covariance.isApprox(covariance.transpose(), 1e-12)) {
    throw SingularNoise("covariance not symmetric");
  }
  Eigen::LLT<Mat> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw SingularNoise("covariance not positive definite");
  }
  return llt.matrixL();
}

double NoiseSpec::log_density(const Vec& x) const {
  Mat L = cholesky();
  Vec d = x - mean;
  Vec z = L.triangularView<Eigen::Lower>().solve(d);
  double logdet = 0.0;
  for (int k = 0; k < dim(); ++k) logdet += std::log(L(k, k));
  constexpr double log2pi = 1.8378770664093454835606594728112;
  return -0.5 * z.squaredNorm() - logdet - 0.5 * dim() * log2pi;
}

int TeamSpec::omega0_dim() const {
  int d = x1_dim();
  for (int t = 1; t <= horizon; ++t) d += w0_dim(t);
  return d;
}

bool strictly_precedes(int j, int s, int i, int t) {
  return s < t || (s == t && j < i);
}

namespace {

// Every variable an observation map may legally reference.
bool obs_var_allowed(const VarId& v, int i, int t) {
  switch (v.kind) {
    case VarKind::X1:
    case VarKind::W0:
      return true;
    case VarKind::State:
      return v.time <= t;  // State(t) depends on actions at t-1 only
    case VarKind::Action:
      return strictly_precedes(v.agent, v.time, i, t);
    case VarKind::Obs:
      return false;  // no observation sharing
  }
  return false;
}

// Collect, per slot, whether the cost has a ||u_it - p(.)||^2_R term with p
// measurable w.r.t. the slot's information predecessors.
void collect_quad_terms(const ExprPtr& e, const TeamSpec& spec,
                        std::vector<std::vector<bool>>& found) {
  if (e->kind == Expr::Kind::Sum) {
    for (const auto& k : e->kids) collect_quad_terms(k, spec, found);
    return;
  }
  if (e->kind != Expr::Kind::Quadratic) return;
  // lhs must be exactly one Action variable with identity coefficient
  if (e->lhs.terms.size() != 1) return;
  const auto& [v, coef] = e->lhs.terms[0];
  if (v.kind != VarKind::Action) return;
  if (!e->lhs.offset.isZero(0.0)) return;
  if (!coef.isIdentity(1e-14)) return;
  // p may reference primitives, earlier actions and observations up to the
  // slot's own observation
  for (const auto& rv : e->rhs.variables()) {
    switch (rv.kind) {
      case VarKind::X1:
      case VarKind::W0:
      case VarKind::State:
        break;
      case VarKind::Action:
        if (!strictly_precedes(rv.agent, rv.time, v.agent, v.time)) return;
        break;
      case VarKind::Obs:
        if (!(strictly_precedes(rv.agent, rv.time, v.agent, v.time) ||
              (rv.agent == v.agent && rv.time == v.time))) {
          return;
        }
        break;
    }
  }
  found[v.agent - 1][v.time - 1] = true;
}

}  // namespace

ValidationReport validate_team(const TeamSpec& spec) {
  ValidationReport rep;
  if (spec.num_agents < 1 || spec.horizon < 1) {
    throw ValidationError("team must have N >= 1 agents and T >= 1 steps");
  }
  if (static_cast<int>(spec.slots.size()) != spec.num_agents) {
    throw ValidationError("slots must have one row per agent");
  }
  for (const auto& row : spec.slots) {
    if (static_cast<int>(row.size()) != spec.horizon) {
      throw ValidationError("slots must have one column per time step");
    }
  }
  if (!spec.cost) throw ValidationError("missing cost expression");

  // (a) sequentiality and no observation sharing
  rep.sequential_no_sharing = true;
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      const auto& slot = spec.slot(i, t);
      slot.obs_space.validate("obs_space");
      slot.action_space.validate("action_space");
      if (slot.obs_map.dim() != slot.obs_space.dim) {
        throw ValidationError("observation map dimension mismatch");
      }
      for (const auto& v : slot.obs_map.variables()) {
        if (v.kind == VarKind::Obs) {
          throw ValidationError("observation map of agent " +
                                std::to_string(i) +
                                " reads another agent's observation");
        }
        if (!obs_var_allowed(v, i, t)) {
          rep.sequential_no_sharing = false;
          rep.notes.push_back("slot (" + std::to_string(i) + "," +
                              std::to_string(t) +
                              ") observes a non-causal variable " +
                              var_name(v));
        }
      }
    }
  }

  // (b) additive Gaussian observation noise with positive definite covariance
  rep.additive_gaussian_observations = true;
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      const auto& noise = spec.slot(i, t).obs_noise;
      if (noise.dim() != spec.slot(i, t).obs_space.dim) {
        throw ValidationError("observation noise dimension mismatch");
      }
      noise.cholesky();  // throws SingularNoise when degenerate
    }
  }
  if (spec.x1) spec.x1->cholesky();
  for (const auto& w : spec.w0) {
    if (w.dim() > 0) w.cholesky();
  }

  // (c) structural quadratic-in-own-action form, per slot, plus a
  //     syntactically non-negative residual
  std::vector<std::vector<bool>> found(
      spec.num_agents, std::vector<bool>(spec.horizon, false));
  collect_quad_terms(spec.cost, spec, found);
  rep.lqg_form = syntactically_nonnegative(spec.cost);
  for (const auto& row : found) {
    for (bool f : row) rep.lqg_form = rep.lqg_form && f;
  }
  rep.existence_guaranteed = rep.ok() && rep.lqg_form;
  if (rep.existence_guaranteed) {
    rep.notes.push_back(
        "existence guaranteed: team-optimal deterministic strategies exist");
  }
  return rep;
}

PrimitiveCost unroll_cost(const TeamSpec& spec) {
  ExprPtr e = spec.cost;
  // Resolve State(t) from the highest step downward; each substitution can
  // only introduce references to strictly earlier states.
  for (int t = spec.horizon + 1; t >= 2; --t) {
    if (!e->references(VarKind::State)) break;
    if (static_cast<int>(spec.dynamics.size()) < t - 1) {
      throw ValidationError("cost references State(" + std::to_string(t) +
                            ") but no dynamics map is declared");
    }
    AffineMap f = spec.dynamics[t - 2];
    e = e->substitute(var_state(t), f);
  }
  // State(1) is the primitive x1.
  if (spec.x1_dim() > 0) {
    e = e->substitute(var_state(1),
                      AffineMap::identity(var_x1(), spec.x1_dim()));
  }
  if (e->references(VarKind::State)) {
    throw ValidationError("cost references an unresolvable state");
  }
  return PrimitiveCost{e};
}

PrimitiveDrawer::PrimitiveDrawer(const TeamSpec& spec, std::uint64_t seed)
    : spec_(&spec), seed_(seed) {
  // Stream ids per component keep all primitives mutually independent.
  std::uint64_t next_stream = 1;
  auto push = [&](const NoiseSpec& noise) {
    comps_.push_back({noise, noise.cholesky(), next_stream++});
    return static_cast<int>(comps_.size()) - 1;
  };
  if (spec.x1 && spec.x1->dim() > 0) x1_comp_ = push(*spec.x1);
  w0_comp_.assign(spec.horizon, -1);
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) w0_comp_[t - 1] = push(spec.w0[t - 1]);
  }
  obs_comp_.assign(spec.num_agents, std::vector<int>(spec.horizon, -1));
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      obs_comp_[i - 1][t - 1] = push(spec.slot(i, t).obs_noise);
    }
  }
}

Vec PrimitiveDrawer::draw_component(const Component& c,
                                    std::size_t sample_index) const {
  CounterRng rng(seed_ ^ splitmix64(c.stream), sample_index);
  Vec z(c.noise.dim());
  for (int k = 0; k < c.noise.dim(); ++k) z(k) = rng.next_gaussian();
  return c.noise.mean + c.chol * z;
}

PrimitiveSample PrimitiveDrawer::draw(std::size_t sample_index) const {
  const TeamSpec& spec = *spec_;
  PrimitiveSample ps;
  if (x1_comp_ >= 0) ps.x1 = draw_component(comps_[x1_comp_], sample_index);
  ps.w0.resize(spec.horizon);
  for (int t = 1; t <= spec.horizon; ++t) {
    if (w0_comp_[t - 1] >= 0) {
      ps.w0[t - 1] = draw_component(comps_[w0_comp_[t - 1]], sample_index);
    }
  }
  ps.obs_noise.assign(spec.num_agents, std::vector<Vec>(spec.horizon));
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      ps.obs_noise[i - 1][t - 1] =
          draw_component(comps_[obs_comp_[i - 1][t - 1]], sample_index);
    }
  }
  return ps;
}

std::vector<PrimitiveSample> sample_primitives(const TeamSpec& spec,
                                               std::uint64_t seed,
                                               std::size_t n) {
  if (n < 1) throw TeamError("sample_primitives: n must be >= 1");
  PrimitiveDrawer drawer(spec, seed);
  std::vector<PrimitiveSample> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) out.push_back(drawer.draw(s));
  return out;
}

void bind_primitives(const TeamSpec& spec, const PrimitiveSample& s,
                     PointView& p) {
  if (spec.x1_dim() > 0) p.set(var_x1(), s.x1);
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) p.set(var_w0(t), s.w0[t - 1]);
  }
}

void bind_trajectory(const TeamSpec& spec, const PrimitiveSample& s,
                     PointView& p) {
  bind_primitives(spec, s, p);
  if (spec.x1_dim() > 0) p.set(var_state(1), s.x1);
  for (int t = 2; t <= spec.horizon + 1; ++t) {
    if (static_cast<int>(spec.dynamics.size()) >= t - 1) {
      p.set(var_state(t), spec.dynamics[t - 2].eval(p));
    }
  }
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      const auto& slot = spec.slot(i, t);
      p.set(var_obs(i, t), slot.obs_map.eval(p) + s.obs_noise[i - 1][t - 1]);
    }
  }
}

}  // namespace teamopt
