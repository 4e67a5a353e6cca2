#include "teamopt/benchmarks.hpp"

#include <cmath>

namespace teamopt {

double BenchmarkParams::get(const std::string& key, double fallback) const {
  auto it = scalars.find(key);
  return it == scalars.end() ? fallback : it->second;
}

std::vector<double> BenchmarkParams::get(const std::string& key,
                                         std::vector<double> fallback) const {
  auto it = vectors.find(key);
  return it == vectors.end() ? std::move(fallback) : it->second;
}

namespace {

AgentSlot make_slot(int obs_dim, double obs_halfwidth, int action_dim,
                    double action_halfwidth, AffineMap obs_map,
                    NoiseSpec noise) {
  AgentSlot s;
  s.obs_space = SpaceSpec::box(Vec::Constant(obs_dim, -obs_halfwidth),
                               Vec::Constant(obs_dim, obs_halfwidth));
  s.action_space =
      SpaceSpec::box(Vec::Constant(action_dim, -action_halfwidth),
                     Vec::Constant(action_dim, action_halfwidth));
  s.obs_map = std::move(obs_map);
  s.obs_noise = std::move(noise);
  return s;
}

NoiseSpec iso_noise(int dim, double variance) {
  return {Vec::Zero(dim), variance * Mat::Identity(dim, dim)};
}

// c = (u1 - y1)^2 + (u2 - u1)^2 with y1 ~ N(0, sigma^2), y2 = u1 + w2,
// w2 ~ N(0, noise_var). The source enters as agent 1's observation noise.
TeamSpec witsenhausen(const BenchmarkParams& p) {
  double sigma = p.get("sigma", 1.0);
  double noise_var = p.get("noise_var", 1.0);
  TeamSpec spec;
  spec.name = "witsenhausen";
  spec.num_agents = 2;
  spec.horizon = 1;
  spec.slots.resize(2);
  double a_half = 8.0 * sigma;
  double y2_half = 8.0 * std::sqrt(sigma * sigma + noise_var) + a_half;
  spec.slots[0].push_back(make_slot(1, 8.0 * sigma, 1, a_half,
                                    AffineMap::zero(1),
                                    iso_noise(1, sigma * sigma)));
  spec.slots[1].push_back(
      make_slot(1, y2_half, 1, a_half,
                AffineMap::identity(var_action(1, 1), 1),
                iso_noise(1, noise_var)));
  spec.cost = make_sum(
      {make_quad(AffineMap::identity(var_action(1, 1), 1),
                 AffineMap::identity(var_obs(1, 1), 1)),
       make_quad(AffineMap::identity(var_action(2, 1), 1),
                 AffineMap::identity(var_action(1, 1), 1))});
  return spec;
}

// c = lambda*u1^2 + (u2 - y1)^2; the source y1 ~ N(0, sigma1^2) is encoded
// as u1 and decoded from y2 = u1 + w, w ~ N(0, sigmaw^2).
TeamSpec test_channel(const BenchmarkParams& p, int dim) {
  double lambda = p.get("lambda", 0.05);
  double sigma1 = p.get("sigma1", 1.0);
  double sigmaw = p.get("sigmaw", 1.0);
  TeamSpec spec;
  spec.name = dim == 1 ? "test_channel" : "vector_test_channel";
  spec.num_agents = 2;
  spec.horizon = 1;
  spec.slots.resize(2);
  double a_half = 16.0 * sigma1;
  double y2_half = a_half + 8.0 * sigmaw;
  spec.slots[0].push_back(make_slot(dim, 8.0 * sigma1, dim, a_half,
                                    AffineMap::zero(dim),
                                    iso_noise(dim, sigma1 * sigma1)));
  spec.slots[1].push_back(
      make_slot(dim, y2_half, dim, 8.0 * sigma1,
                AffineMap::identity(var_action(1, 1), dim),
                iso_noise(dim, sigmaw * sigmaw)));
  spec.cost = make_sum(
      {make_quad(AffineMap::identity(var_action(1, 1), dim),
                 AffineMap::zero(dim), lambda * Mat::Identity(dim, dim)),
       make_quad(AffineMap::identity(var_action(2, 1), dim),
                 AffineMap::identity(var_obs(1, 1), dim))});
  return spec;
}

// c = (u_N - x1)^2 + sum_{i<N} lambda_i u_i^2; y1 = x1 + w1 and each relay
// observes the previous action through unit noise.
TeamSpec relay(const BenchmarkParams& p) {
  int n = static_cast<int>(p.get("N", 4.0));
  if (n < 2) throw TeamError("relay: N must be >= 2");
  std::vector<double> lambda =
      p.get("lambda", std::vector<double>(n - 1, 0.1));
  if (static_cast<int>(lambda.size()) != n - 1) {
    throw TeamError("relay: lambda must have N-1 entries");
  }
  double sigma1 = p.get("sigma1", 1.0);
  double noise_var = p.get("noise_var", 1.0);
  TeamSpec spec;
  spec.name = "relay";
  spec.num_agents = n;
  spec.horizon = 1;
  spec.x1 = NoiseSpec::scalar(0.0, sigma1 * sigma1);
  spec.slots.resize(n);
  double a_half = 12.0 * std::max(sigma1, 1.0);
  double y_half = a_half + 8.0 * std::sqrt(noise_var);
  spec.slots[0].push_back(make_slot(
      1, 8.0 * sigma1 + 8.0 * std::sqrt(noise_var), 1, a_half,
      AffineMap::identity(var_x1(), 1), iso_noise(1, noise_var)));
  for (int i = 2; i <= n; ++i) {
    spec.slots[i - 1].push_back(
        make_slot(1, y_half, 1, a_half,
                  AffineMap::identity(var_action(i - 1, 1), 1),
                  iso_noise(1, noise_var)));
  }
  std::vector<ExprPtr> terms;
  for (int i = 1; i < n; ++i) {
    terms.push_back(make_quad(AffineMap::identity(var_action(i, 1), 1),
                              AffineMap::zero(1),
                              Mat::Constant(1, 1, lambda[i - 1])));
  }
  terms.push_back(make_quad(AffineMap::identity(var_action(n, 1), 1),
                            AffineMap::identity(var_x1(), 1)));
  spec.cost = make_sum(std::move(terms));
  return spec;
}

// One controller over T steps: x_{t+1} = a x_t + b u_t, y_t = c x_t + v_t,
// cost sum_t (q x_{t+1}^2 + r u_t^2).
TeamSpec static_output_feedback(const BenchmarkParams& p) {
  int horizon = static_cast<int>(p.get("T", 2.0));
  if (horizon < 1) throw TeamError("static_output_feedback: T must be >= 1");
  double a = p.get("a", 0.8);
  double b = p.get("b", 1.0);
  double c = p.get("c", 1.0);
  double q = p.get("q", 1.0);
  double r = p.get("r", 0.1);
  double sigma0 = p.get("sigma0", 1.0);
  double obs_var = p.get("obs_var", 0.2);
  TeamSpec spec;
  spec.name = "static_output_feedback";
  spec.num_agents = 1;
  spec.horizon = horizon;
  spec.x1 = NoiseSpec::scalar(0.0, sigma0 * sigma0);
  spec.slots.resize(1);
  double half = 16.0 * std::max(sigma0, 1.0);
  for (int t = 1; t <= horizon; ++t) {
    AffineMap obs = AffineMap::zero(1);
    obs.add_term(var_state(t), Mat::Constant(1, 1, c));
    spec.slots[0].push_back(
        make_slot(1, half, 1, half, std::move(obs), iso_noise(1, obs_var)));
    AffineMap dyn = AffineMap::zero(1);
    dyn.add_term(var_state(t), Mat::Constant(1, 1, a));
    dyn.add_term(var_action(1, t), Mat::Constant(1, 1, b));
    spec.dynamics.push_back(std::move(dyn));
  }
  std::vector<ExprPtr> terms;
  for (int t = 1; t <= horizon; ++t) {
    terms.push_back(make_quad(AffineMap::identity(var_action(1, t), 1),
                              AffineMap::zero(1), Mat::Constant(1, 1, r)));
    terms.push_back(make_quad(AffineMap::identity(var_state(t + 1), 1),
                              AffineMap::zero(1), Mat::Constant(1, 1, q)));
  }
  spec.cost = make_sum(std::move(terms));
  return spec;
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"witsenhausen", "test_channel", "vector_test_channel", "relay",
          "static_output_feedback"};
}

TeamSpec build_benchmark(const std::string& name,
                         const BenchmarkParams& params) {
  TeamSpec spec;
  if (name == "witsenhausen") {
    spec = witsenhausen(params);
  } else if (name == "test_channel") {
    spec = test_channel(params, 1);
  } else if (name == "vector_test_channel") {
    spec = test_channel(params, static_cast<int>(params.get("dim", 2.0)));
  } else if (name == "relay") {
    spec = relay(params);
  } else if (name == "static_output_feedback") {
    spec = static_output_feedback(params);
  } else {
    throw UnknownBenchmark("unknown benchmark: " + name);
  }
  validate_team(spec);
  return spec;
}

}  // namespace teamopt
