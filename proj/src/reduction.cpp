#include "teamopt/reduction.hpp"

#include <cmath>

namespace teamopt {

namespace {

// Resolve State references of an observation map onto primitives and
// actions, mirroring the cost unrolling.
AffineMap resolve_states(const TeamSpec& spec, AffineMap m,
                         const std::string& what) {
  for (int t = spec.horizon + 1; t >= 2; --t) {
    if (!m.references(VarKind::State)) break;
    bool uses_t = false;
    for (const auto& v : m.variables()) {
      if (v.kind == VarKind::State && v.time == t) uses_t = true;
    }
    if (!uses_t) continue;
    if (static_cast<int>(spec.dynamics.size()) < t - 1) {
      throw NotReducible(what + " references State(" + std::to_string(t) +
                         ") but no dynamics map is declared");
    }
    m = m.substitute(var_state(t), spec.dynamics[t - 2]);
  }
  if (spec.x1_dim() > 0) {
    m = m.substitute(var_state(1),
                     AffineMap::identity(var_x1(), spec.x1_dim()));
  }
  if (m.references(VarKind::State)) {
    throw NotReducible(what + " references an unresolvable state");
  }
  return m;
}

}  // namespace

ReducedTeam static_reduce(const TeamSpec& spec) {
  ValidationReport rep;
  try {
    rep = validate_team(spec);
  } catch (const SingularNoise& e) {
    throw NotReducible(std::string("singular noise: ") + e.what());
  }
  if (!rep.sequential_no_sharing) {
    throw NotReducible("team is not sequential without observation sharing");
  }

  ReducedTeam rt;
  rt.spec = spec;
  rt.channels.resize(spec.num_agents);
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      const auto& slot = spec.slot(i, t);
      AffineMap hcheck = resolve_states(
          spec, slot.obs_map,
          "observation map of slot (" + std::to_string(i) + "," +
              std::to_string(t) + ")");
      for (const auto& v : hcheck.variables()) {
        if (v.kind == VarKind::Obs) {
          throw NotReducible("channel of slot (" + std::to_string(i) + "," +
                             std::to_string(t) +
                             ") is non-additive in its noise");
        }
      }
      rt.channels[i - 1].push_back(Channel{std::move(hcheck), slot.obs_noise});
    }
  }
  rt.primitive_cost = unroll_cost(spec);
  return rt;
}

double ReducedTeam::log_phi_slot(int i, int t, const Vec& y,
                                 const PointView& p) const {
  const Channel& ch = channel(i, t);
  Vec h = ch.hcheck.eval(p);
  return ch.noise.log_density(y - h) - ch.noise.log_density(y);
}

ExprPtr phi_expr(const ReducedTeam& rt, int i, int t) {
  const Channel& ch = rt.channel(i, t);
  int d = ch.noise.dim();
  Mat prec = ch.noise.covariance.llt().solve(Mat::Identity(d, d));
  // symmetrize against round-off so make_quad's pd check is stable
  prec = 0.5 * (prec + prec.transpose()).eval();
  AffineMap y = AffineMap::identity(var_obs(i, t), d);
  AffineMap shifted = ch.hcheck;
  shifted.offset += ch.noise.mean;
  return make_exp(make_sum(
      {make_product({make_const(-0.5), make_quad(y, shifted, prec)}),
       make_product({make_const(0.5),
                     make_quad(y, AffineMap::constant(ch.noise.mean), prec)})}));
}

double ReducedTeam::log_phi(const PointView& p) const {
  double s = 0.0;
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) {
      s += log_phi_slot(i, t, p.get(var_obs(i, t)), p);
    }
  }
  return s;
}

double phi_factor(const ReducedTeam& rt, const PointView& p) {
  double lp = rt.log_phi(p);
  if (lp > 700.0) {
    throw TeamError("phi factor overflows double range (log phi > 700); "
                    "restrict the evaluation domain");
  }
  return std::exp(lp);
}

std::vector<std::vector<double>> check_phi_normalization(const ReducedTeam& rt,
                                                         const PointView& p,
                                                         int order) {
  const TeamSpec& spec = rt.spec;
  QuadratureRule rule = gauss_hermite(order);
  std::vector<std::vector<double>> residuals(
      spec.num_agents, std::vector<double>(spec.horizon, 0.0));
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      const Channel& ch = rt.channel(i, t);
      const int d = ch.noise.dim();
      if (d > 4) {
        throw DimensionTooLarge(
            "phi normalization check supports channel dimension <= 4");
      }
      Mat L = ch.noise.cholesky();
      Vec h = ch.hcheck.eval(p);
      std::vector<int> idx(d, 0);
      double total = 0.0;
      Vec z(d), y(d);
      while (true) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
          z(k) = rule.nodes[idx[k]];
          w *= rule.weights[idx[k]];
        }
        y = ch.noise.mean + L * z;
        double lp = ch.noise.log_density(y - h) - ch.noise.log_density(y);
        total += w * std::exp(lp);
        int k = d - 1;
        for (; k >= 0; --k) {
          if (++idx[k] < order) break;
          idx[k] = 0;
        }
        if (k < 0) break;
      }
      residuals[i - 1][t - 1] = std::abs(total - 1.0);
    }
  }
  return residuals;
}

double EquivalenceReport::combined_stderr() const {
  double a = stderr_dynamic.value_or(0.0);
  double b = stderr_reduced.value_or(0.0);
  return std::sqrt(a * a + b * b);
}

}  // namespace teamopt
