#include <doctest.h>

#include <cmath>
#include <sstream>

#include "test_util.hpp"
#include "teamopt/evaluation.hpp"
#include "teamopt/strategy.hpp"

using namespace teamopt;
using namespace teamopt::testutil;

TEST_SUITE_BEGIN("strategy");

namespace {

Grid unit_grid(int cells, double half = 1.0) {
  return Grid(SpaceSpec::box(-half, half), cells);
}

}  // namespace

TEST_CASE("grid cells partition the box and clamp outside points") {
  Grid g = unit_grid(4, 2.0);
  CHECK(g.cell_count() == 4);
  CHECK(g.locate(Vec::Constant(1, -1.5)) == 0);
  CHECK(g.locate(Vec::Constant(1, 1.5)) == 3);
  CHECK(g.locate(Vec::Constant(1, -100.0)) == 0);  // clamp
  CHECK(g.locate(Vec::Constant(1, 100.0)) == 3);   // clamp
  CHECK(g.center(1)(0) == doctest::Approx(-0.5));
}

TEST_CASE("as_behavioral puts a Dirac row at each looked-up action") {
  Grid g = unit_grid(2);
  DeterministicGridStrategy det(g, g, {0, 1});
  BehavioralGridStrategy beh = as_behavioral(det);
  Mat expect(2, 2);
  expect << 1, 0, 0, 1;
  CHECK((beh.table() - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("as_behavioral of a constant lookup repeats one unit row") {
  Grid g = unit_grid(3);
  DeterministicGridStrategy det = DeterministicGridStrategy::constant(g, g, 2);
  BehavioralGridStrategy beh = as_behavioral(det);
  for (int j = 0; j < 3; ++j) {
    CHECK(beh.table()(j, 2) == 1.0);
    CHECK(beh.table().row(j).sum() == doctest::Approx(1.0));
  }
}

TEST_CASE("argmax round trip recovers a random deterministic strategy") {
  Grid g = unit_grid(7);
  CounterRng rng(5, 0);
  std::vector<int> lookup(7);
  for (auto& v : lookup) v = static_cast<int>(rng.next_u64() % 7);
  DeterministicGridStrategy det(g, g, lookup);
  DeterministicGridStrategy back = as_behavioral(det).argmax();
  CHECK(back.lookup() == det.lookup());
}

TEST_CASE("random behavioral tables are row-stochastic within 1e-12") {
  BehavioralGridStrategy beh =
      BehavioralGridStrategy::random(unit_grid(25), unit_grid(25), 42);
  CHECK(beh.table().minCoeff() >= 0.0);
  for (int j = 0; j < 25; ++j) {
    CHECK(std::abs(beh.table().row(j).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("rows violating stochasticity are rejected") {
  Grid g = unit_grid(2);
  Mat bad(2, 2);
  bad << 0.5, 0.6, 1.0, 0.0;
  CHECK_THROWS_AS(BehavioralGridStrategy(g, g, bad), TeamError);
}

TEST_CASE("determinize picks argmin cost with ties to the lowest index") {
  Grid og = unit_grid(1);
  Grid ag = unit_grid(3);
  BehavioralGridStrategy beh = BehavioralGridStrategy::uniform(og, ag);
  Mat cost(1, 3);
  cost << 3, 1, 2;
  CHECK(determinize(beh, cost).lookup()[0] == 1);
  Grid ag2 = unit_grid(2);
  BehavioralGridStrategy beh2 = BehavioralGridStrategy::uniform(og, ag2);
  Mat tie(1, 2);
  tie << 1, 1;
  CHECK(determinize(beh2, tie).lookup()[0] == 0);
}

TEST_CASE("determinize never increases the evaluated expected cost") {
  // second agent of the two-agent quadratic benchmark against its true
  // conditional cost table, oracle = scenario-measure evaluation of both
  TeamSpec spec = witsenhausen_spec();
  ReducedTeam rt = static_reduce(spec);
  Grid og(spec.slot(2, 1).obs_space, 15);
  Grid ag(SpaceSpec::box(-2.5, 2.5), 15);
  BehavioralGridStrategy beh = BehavioralGridStrategy::random(og, ag, 9);
  StrategyProfile prof = StrategyProfile::zero_profile(spec);
  prof.slot(1, 1) = LinearStrategy::scalar(0.5);
  prof.slot(2, 1) = beh;
  ScenarioSet scen = ScenarioSet::quadrature(rt, 24);
  double cost_beh = scen.expected_cost(rt, prof);

  // conditional cost per (obs cell, action point) on the same measure
  Mat cond = Mat::Zero(og.cell_count(), ag.cell_count());
  for (int a = 0; a < ag.cell_count(); ++a) {
    // accumulate per-cell weighted cost by splitting scenarios by cell
    for (const Scenario& s : scen.scenarios()) {
      PointView p = s.point;
      int cell = og.locate(p.get(var_obs(2, 1)));
      p.set(var_action(1, 1),
            Vec::Constant(1, 0.5 * p.get(var_obs(1, 1))(0)));
      p.set(var_action(2, 1), ag.center(a));
      double phi = phi_factor(rt, p);
      cond(cell, a) += s.weight * phi * rt.primitive_cost.eval(p);
    }
  }
  DeterministicGridStrategy det = determinize(beh, cond);
  StrategyProfile det_prof = prof;
  det_prof.slot(2, 1) = det;
  double cost_det = scen.expected_cost(rt, det_prof);
  CHECK(cost_det <= cost_beh + 1e-10);
}

TEST_CASE("induced_joint splits mass and keeps the marginals") {
  Grid og = unit_grid(2);
  Grid ag = unit_grid(2);
  DeterministicGridStrategy det(og, ag, {1, 0});
  BehavioralGridStrategy beh = as_behavioral(det);
  Vec obs(2);
  obs << 0.5, 0.5;
  Mat joint = induced_joint(beh, obs);
  CHECK(joint(0, 1) == doctest::Approx(0.5));
  CHECK(joint(1, 0) == doctest::Approx(0.5));
  CHECK(joint.sum() == doctest::Approx(1.0).epsilon(1e-15));
  // marginal over actions recovers obs_measure
  for (int j = 0; j < 2; ++j) {
    CHECK(joint.row(j).sum() == doctest::Approx(obs(j)));
  }
}

TEST_CASE("induced_joint with Gaussian cell weights conserves mass") {
  // agent-1 observation law N(0,1) on a +-8 grid; cell weights from exact
  // normal CDF differences
  Grid og(SpaceSpec::box(-8.0, 8.0), 64);
  Vec obs(64);
  const auto& edges = og.edges(0);
  double total = 0.0;
  for (int j = 0; j < 64; ++j) {
    obs(j) = std_normal_cdf(edges[j + 1]) - std_normal_cdf(edges[j]);
    total += obs(j);
  }
  obs /= total;  // fold the +-8 tail mass back in
  BehavioralGridStrategy beh =
      BehavioralGridStrategy::random(og, unit_grid(5), 3);
  Mat joint = induced_joint(beh, obs);
  CHECK(std::abs(joint.sum() - 1.0) <= 1e-12);
}

TEST_CASE("linear and tabular strategies act as declared") {
  LinearStrategy lin = LinearStrategy::scalar(2.0, 1.0);
  CHECK(lin.act(Vec::Constant(1, 3.0))(0) == doctest::Approx(7.0));
  TabularStrategy tab = sign_quantizer(SpaceSpec::box(-4.0, 4.0), 1.5);
  CHECK(tab.act(Vec::Constant(1, 0.7))(0) == doctest::Approx(1.5));
  CHECK(tab.act(Vec::Constant(1, -0.7))(0) == doctest::Approx(-1.5));
}

TEST_CASE("strategy CSV serialization is deterministic") {
  BehavioralGridStrategy beh =
      BehavioralGridStrategy::random(unit_grid(4), unit_grid(3), 7);
  std::ostringstream a, b;
  write_strategy_csv(a, beh);
  write_strategy_csv(b, beh);
  CHECK(a.str() == b.str());
  // header row plus one row per observation cell
  int lines = 0;
  for (char c : a.str()) lines += c == '\n';
  CHECK(lines == 5);
}

TEST_SUITE_END();
