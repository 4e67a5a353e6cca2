#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "teamopt/evaluation.hpp"

using namespace teamopt;
using namespace teamopt::testutil;

TEST_SUITE_BEGIN("evaluation");

TEST_CASE("MC estimate of the zero-strategy anchor is 1 within 4 stderr") {
  TeamSpec spec = witsenhausen_spec();
  McEstimate e =
      expected_cost_mc(spec, StrategyProfile::zero_profile(spec), 1, 200000);
  CHECK(std::abs(e.estimate - 1.0) <= 4.0 * e.stderr_);
  CHECK(e.stderr_ > 0.0);
}

TEST_CASE("constant cost has zero variance") {
  TeamSpec spec = witsenhausen_spec();
  spec.cost = make_const(5.0);
  McEstimate e =
      expected_cost_mc(spec, StrategyProfile::zero_profile(spec), 1, 5000);
  CHECK(e.estimate == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(e.stderr_ == doctest::Approx(0.0));
}

TEST_CASE("zero-strategy source channel cost is the source variance") {
  TeamSpec spec = test_channel_spec();
  McEstimate e =
      expected_cost_mc(spec, StrategyProfile::zero_profile(spec), 2, 200000);
  CHECK(std::abs(e.estimate - 1.0) <= 4.0 * e.stderr_);
}

TEST_CASE("MC is reproducible for a fixed seed") {
  TeamSpec spec = witsenhausen_spec();
  StrategyProfile prof = linear_profile(spec, {0.5, 0.3});
  McEstimate a = expected_cost_mc(spec, prof, 9, 20000);
  McEstimate b = expected_cost_mc(spec, prof, 9, 20000);
  CHECK(a.estimate == b.estimate);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("quadrature is exact on polynomial integrands") {
  TeamSpec spec = witsenhausen_spec();
  double j = expected_cost_quadrature(spec, StrategyProfile::zero_profile(spec),
                                      32);
  CHECK(std::abs(j - 1.0) <= 1e-12);  // E[Y1^2]
}

TEST_CASE("linear encoder with posterior-mean decoder hits the MMSE value") {
  // oracle: (a-1)^2 + a^2/(a^2+1) at a = 1 gives 1/2
  TeamSpec spec = witsenhausen_spec();
  StrategyProfile prof = linear_profile(spec, {1.0, 0.5});
  double j = expected_cost_quadrature(spec, prof, 64);
  CHECK(j == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("tensor quadrature refuses more than four primitive dimensions") {
  BenchmarkParams p;
  p.scalars["dim"] = 3;  // 3 + 3 = 6 Gaussian dimensions
  TeamSpec spec = build_benchmark("vector_test_channel", p);
  CHECK_THROWS_AS(expected_cost_quadrature(
                      spec, StrategyProfile::zero_profile(spec), 16),
                  DimensionTooLarge);
}

TEST_CASE("MC agrees with quadrature within 4 stderr on benchmark profiles") {
  TeamSpec spec = witsenhausen_spec();
  StrategyProfile prof = linear_profile(spec, {0.7, 0.3});
  double q = expected_cost_quadrature(spec, prof, 64);
  McEstimate e = expected_cost_mc(spec, prof, 21, 200000);
  CHECK(std::abs(e.estimate - q) <= 4.0 * e.stderr_);
}

TEST_CASE("posterior mean with a degenerate upstream prior is zero") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  StrategyProfile others = StrategyProfile::zero_profile(rt.spec);
  Vec m = posterior_mean(rt, 2, 1, Vec::Constant(1, 1.3), others, 64);
  CHECK(std::abs(m(0)) <= 1e-10);
}

TEST_CASE("posterior mean for u1 = y1 is y2/2") {
  // oracle: jointly-Gaussian conditional mean sigma1^2/(sigma1^2+sigmaw^2) y2
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  StrategyProfile others = linear_profile(rt.spec, {1.0, 0.0});
  for (double y2 : {-2.0, 0.4, 1.7}) {
    Vec m = posterior_mean(rt, 2, 1, Vec::Constant(1, y2), others, 64);
    CHECK(m(0) == doctest::Approx(0.5 * y2).epsilon(1e-6));
  }
  Vec m = posterior_mean(rt, 2, 1, Vec::Constant(1, 1.7), others, 64);
  CHECK(std::abs(m(0) - 0.85) <= 1e-3);
}

TEST_CASE("a constant quadratic target returns the target itself") {
  TeamSpec spec = witsenhausen_spec();
  spec.cost = make_sum(
      {make_quad(AffineMap::identity(var_action(1, 1), 1),
                 AffineMap::identity(var_obs(1, 1), 1)),
       make_quad(AffineMap::identity(var_action(2, 1), 1),
                 AffineMap::constant(Vec::Constant(1, 3.0)))});
  ReducedTeam rt = static_reduce(spec);
  StrategyProfile others = StrategyProfile::zero_profile(spec);
  for (double y2 : {-5.0, 0.0, 2.0}) {
    Vec m = posterior_mean(rt, 2, 1, Vec::Constant(1, y2), others, 32);
    CHECK(m(0) == doctest::Approx(3.0).epsilon(1e-10));
  }
}

TEST_CASE("posterior mean minimizes the conditional quadratic slice") {
  // perturbing by +-1e-3 never decreases the conditionally evaluated cost
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  StrategyProfile others = linear_profile(rt.spec, {1.0, 0.0});
  const double y2 = 0.9;
  Vec m = posterior_mean(rt, 2, 1, Vec::Constant(1, y2), others, 64);
  QuadratureRule rule = gauss_hermite(64);
  auto cond_cost = [&](double u2) {
    double acc = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      double y1 = rule.nodes[k];
      double u1 = y1;  // upstream linear strategy
      double phi = std::exp((-u1 * u1 + 2.0 * y2 * u1) / 2.0);
      double c = (u1 - y1) * (u1 - y1) + (u2 - u1) * (u2 - u1);
      acc += rule.weights[k] * phi * c;
    }
    return acc;
  };
  double at = cond_cost(m(0));
  CHECK(cond_cost(m(0) + 1e-3) >= at);
  CHECK(cond_cost(m(0) - 1e-3) >= at);
}

TEST_CASE("posterior mean requires a quadratic own-action term") {
  TeamSpec spec = witsenhausen_spec();
  spec.cost = make_quad(AffineMap::identity(var_action(1, 1), 1),
                        AffineMap::identity(var_obs(1, 1), 1));
  ReducedTeam rt = static_reduce(spec);
  StrategyProfile others = StrategyProfile::zero_profile(spec);
  CHECK_THROWS_AS(
      posterior_mean(rt, 2, 1, Vec::Constant(1, 0.0), others, 32),
      NonQuadratic);
}

TEST_CASE("scenario sets conserve mass and match direct quadrature") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  FlatScenarios fs = FlatScenarios::quadrature(rt, 16);
  double mass = 0.0;
  for (double w : fs.weights) mass += w;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));

  StrategyProfile prof = linear_profile(rt.spec, {0.6, 0.2});
  ScenarioSet scen = ScenarioSet::quadrature(rt, 32);
  double via_scen = scen.expected_cost(rt, prof);
  double direct = expected_cost_quadrature(rt, prof, 32);
  CHECK(via_scen == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("reduced-path MC agrees with dynamic-path quadrature") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  StrategyProfile prof = linear_profile(rt.spec, {0.7, 0.3});
  double q = expected_cost_quadrature(rt.spec, prof, 64);
  McEstimate e = expected_cost_mc(rt, prof, 31, 200000);
  CHECK(std::abs(e.estimate - q) <= 4.0 * e.stderr_);
}

TEST_SUITE_END();
