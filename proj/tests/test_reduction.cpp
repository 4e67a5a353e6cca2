#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "teamopt/reduction.hpp"

using namespace teamopt;
using namespace teamopt::testutil;

TEST_SUITE_BEGIN("reduction");

TEST_CASE("phi of the second channel matches exp((-u1^2 + 2 y2 u1)/2)") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  for (double u1 : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
    for (double y2 : {-1.5, 0.0, 0.7, 2.0}) {
      PointView p;
      p.set(var_action(1, 1), Vec::Constant(1, u1));
      double lp = rt.log_phi_slot(2, 1, Vec::Constant(1, y2), p);
      CHECK(lp == doctest::Approx((-u1 * u1 + 2.0 * y2 * u1) / 2.0)
                      .epsilon(1e-12));
    }
  }
}

TEST_CASE("a channel with zero hcheck has phi identically one") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  PointView p;
  for (double y1 : {-3.0, 0.0, 5.0}) {
    CHECK(rt.log_phi_slot(1, 1, Vec::Constant(1, y1), p) == 0.0);
  }
}

TEST_CASE("decoder phi equals the direct ratio of Gaussian densities") {
  // oracle: ratio of the two noise densities evaluated numerically
  TeamSpec spec = test_channel_spec();
  ReducedTeam rt = static_reduce(spec);
  const NoiseSpec& noise = spec.slot(2, 1).obs_noise;
  for (double u1 : {-1.0, 0.5, 2.0}) {
    for (double y2 : {-0.8, 0.0, 1.3}) {
      PointView p;
      p.set(var_action(1, 1), Vec::Constant(1, u1));
      double lp = rt.log_phi_slot(2, 1, Vec::Constant(1, y2), p);
      double oracle = noise.log_density(Vec::Constant(1, y2 - u1)) -
                      noise.log_density(Vec::Constant(1, y2));
      CHECK(lp == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("phi_factor worked values") {
  TeamSpec spec = witsenhausen_spec();
  ReducedTeam rt = static_reduce(spec);
  auto phi_at = [&](double u1, double y2) {
    PointView p;
    p.set(var_obs(1, 1), Vec::Constant(1, 0.3));
    p.set(var_obs(2, 1), Vec::Constant(1, y2));
    p.set(var_action(1, 1), Vec::Constant(1, u1));
    p.set(var_action(2, 1), Vec::Constant(1, 0.0));
    return phi_factor(rt, p);
  };
  CHECK(phi_at(0.0, 1.7) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(phi_at(1.0, 1.0) == doctest::Approx(std::exp(0.5)).epsilon(1e-13));
}

TEST_CASE("phi_expr agrees with the compiled channel factor") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  ExprPtr e = phi_expr(rt, 2, 1);
  REQUIRE(e);
  for (double u1 : {-1.0, 0.0, 2.0}) {
    for (double y2 : {-0.5, 1.2}) {
      PointView p;
      p.set(var_obs(2, 1), Vec::Constant(1, y2));
      p.set(var_action(1, 1), Vec::Constant(1, u1));
      double lp = rt.log_phi_slot(2, 1, Vec::Constant(1, y2), p);
      CHECK(e->eval(p) == doctest::Approx(std::exp(lp)).epsilon(1e-12));
    }
  }
}

TEST_CASE("phi normalization residual at order 64") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  PointView p;
  p.set(var_action(1, 1), Vec::Constant(1, 2.0));
  auto res = check_phi_normalization(rt, p, 64);
  CHECK(res[0][0] <= 1e-12);  // hcheck = 0
  CHECK(res[1][0] <= 1e-8);   // |hcheck| = 2 sigma
}

TEST_CASE("truncation-dominated regime is flagged by a large residual") {
  ReducedTeam rt = static_reduce(witsenhausen_spec());
  PointView p;
  p.set(var_action(1, 1), Vec::Constant(1, 20.0));  // 20 sigma
  auto res = check_phi_normalization(rt, p, 64);
  CHECK(res[1][0] > 1e-3);
}

TEST_CASE("non-additive channels are not reducible") {
  TeamSpec spec = witsenhausen_spec();
  spec.slot(2, 1).obs_map = AffineMap::identity(var_obs(2, 1), 1);
  CHECK_THROWS_AS(static_reduce(spec), TeamError);
  TeamSpec spec2 = witsenhausen_spec();
  spec2.slot(2, 1).obs_noise.covariance = Mat::Zero(1, 1);
  CHECK_THROWS_AS(static_reduce(spec2), TeamError);
}

TEST_CASE("equivalence for zero strategies gives E[Y1^2] = 1 on both paths") {
  TeamSpec spec = witsenhausen_spec();
  EquivalenceReport r = verify_equivalence(
      spec, StrategyProfile::zero_profile(spec), EvalMethod::Quadrature, 64);
  CHECK(r.j_dynamic == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.j_reduced == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.gap <= 1e-8);
}

TEST_CASE("equivalence for u1 = y1, u2 = 0 gives 1 on both paths") {
  TeamSpec spec = witsenhausen_spec();
  StrategyProfile prof = linear_profile(spec, {1.0, 0.0});
  EquivalenceReport r =
      verify_equivalence(spec, prof, EvalMethod::Quadrature, 64);
  CHECK(r.j_dynamic == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r.gap <= 1e-8);
}

TEST_CASE("equivalence holds for seeded random grid strategies") {
  TeamSpec spec = witsenhausen_spec();
  for (std::uint64_t s = 0; s < 3; ++s) {
    StrategyProfile prof = StrategyProfile::zero_profile(spec);
    prof.slot(1, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(1, 1).obs_space, 25),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 1000 + s);
    prof.slot(2, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(2, 1).obs_space, 1),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 2000 + s);
    EquivalenceReport q =
        verify_equivalence(spec, prof, EvalMethod::Quadrature, 64);
    CHECK(q.gap <= 1e-6);

    StrategyProfile mcp = StrategyProfile::zero_profile(spec);
    mcp.slot(1, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(1, 1).obs_space, 25),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 3000 + s);
    mcp.slot(2, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(2, 1).obs_space, 25),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 4000 + s);
    EquivalenceReport m = verify_equivalence(spec, mcp, EvalMethod::MonteCarlo,
                                             64, 10 + s, 200000);
    CHECK(m.gap <= 4.0 * m.combined_stderr());
  }
}

TEST_SUITE_END();
