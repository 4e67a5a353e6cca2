// Acceptance harness: one line per criterion, "criterion N: PASS/FAIL", with
// the measured quantities inline. Returns the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "teamopt/benchmarks.hpp"
#include "teamopt/certify.hpp"
#include "teamopt/counterexample.hpp"
#include "teamopt/evaluation.hpp"
#include "teamopt/optimize.hpp"

using namespace teamopt;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s — %s\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

TeamSpec witsenhausen() { return build_benchmark("witsenhausen"); }

StrategyProfile linear_profile(const TeamSpec& spec,
                               const std::vector<double>& gains) {
  StrategyProfile prof = StrategyProfile::zero_profile(spec);
  std::size_t k = 0;
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) {
      prof.slot(i, t) = LinearStrategy::scalar(gains.at(k++));
    }
  }
  return prof;
}

// ---------------------------------------------------------------------------

void criterion_1() {
  double t0 = now_seconds();
  bool ok = true;
  std::ostringstream why;
  WeakLimitReport rep = weak_limit_report(12);
  Rational quarter(1, 4), half(1, 2), eighth(1, 8);
  for (const auto& row : rep.rows) {
    ok &= row.sequence_cost == Rational(0);
    ok &= row.p_u1 == quarter;
    ok &= row.p_u2 == half;
    ok &= row.full_joint_gap == eighth;
  }
  LimitReport lim = limit_cost_and_marginals();
  ok &= lim.limit_cost == eighth;
  ok &= rep.rows.size() == 12;
  double dt = now_seconds() - t0;
  ok &= dt < 1.0;
  why << "n=1..12 exact: sequence cost 0, P(U1=1)=1/4, P(U2=1)=1/2, "
         "limit cost 1/8, full-joint gap 1/8; runtime "
      << fmt(dt) << " s";
  report(1, ok, why.str());
}

void criterion_2() {
  double t0 = now_seconds();
  TeamSpec spec = witsenhausen();
  bool ok = true;
  double worst_quad = 0.0, worst_mc_sigmas = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    // quadrature clause: downstream slot on a single observation cell keeps
    // the integrand smooth, so both evaluation paths converge at order 64
    StrategyProfile prof = StrategyProfile::zero_profile(spec);
    prof.slot(1, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(1, 1).obs_space, 25),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 1000 + s);
    prof.slot(2, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(2, 1).obs_space, 1),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 2000 + s);
    EquivalenceReport q =
        verify_equivalence(spec, prof, EvalMethod::Quadrature, 64);
    worst_quad = std::max(worst_quad, q.gap);
    ok &= q.gap <= 1e-6;

    // Monte Carlo clause: full 25 x 25 grids on both slots
    StrategyProfile mcp = StrategyProfile::zero_profile(spec);
    mcp.slot(1, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(1, 1).obs_space, 25),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 3000 + s);
    mcp.slot(2, 1) = BehavioralGridStrategy::random(
        Grid(spec.slot(2, 1).obs_space, 25),
        Grid(SpaceSpec::box(-2.5, 2.5), 25), 4000 + s);
    EquivalenceReport m = verify_equivalence(spec, mcp, EvalMethod::MonteCarlo,
                                             64, 10 + s, 1000000);
    double sig = m.gap / m.combined_stderr();
    worst_mc_sigmas = std::max(worst_mc_sigmas, sig);
    ok &= m.gap <= 4.0 * m.combined_stderr();
  }
  double dt = now_seconds() - t0;
  ok &= dt < 60.0;
  std::ostringstream why;
  why << "10 seeded profiles: max quadrature gap " << fmt(worst_quad)
      << " (<= 1e-6), max MC gap " << fmt(worst_mc_sigmas)
      << " stderr (<= 4), n=1e6; runtime " << fmt(dt) << " s (< 60)";
  report(2, ok, why.str());
}

void criterion_3() {
  TeamSpec spec = witsenhausen();
  double j = expected_cost_quadrature(spec, StrategyProfile::zero_profile(spec),
                                      64);
  std::ostringstream why;
  why << "zero-strategy quadrature cost " << fmt(j) << ", |J - 1| = "
      << fmt(std::abs(j - 1.0)) << " (<= 1e-8)";
  report(3, std::abs(j - 1.0) <= 1e-8, why.str());
}

void criterion_4() {
  bool ok = true;
  double worst = 0.0;
  for (const char* name : {"witsenhausen", "test_channel"}) {
    ReducedTeam rt = static_reduce(build_benchmark(name));
    for (double u1 : {0.0, 1.0, -1.0, 2.5, -2.5, 4.0, -4.0, 5.0, -5.0}) {
      PointView p;
      p.set(var_action(1, 1), Vec::Constant(1, u1));
      auto res = check_phi_normalization(rt, p, 64);
      for (const auto& agent_res : res) {
        for (double r : agent_res) {
          worst = std::max(worst, r);
          ok &= r <= 1e-8;
        }
      }
    }
  }
  std::ostringstream why;
  why << "both benchmarks, encoder actions up to the 5-sigma shift: max "
         "residual "
      << fmt(worst) << " (<= 1e-8) at order 64";
  report(4, ok, why.str());
}

void criterion_5() {
  const double lambda = 0.05;
  BenchmarkParams bp;
  bp.scalars["lambda"] = lambda;
  TeamSpec spec = build_benchmark("test_channel", bp);

  // independent 1-D oracle built first: J(a) = lambda a^2 + 1 / (1 + a^2)
  auto j_of_a = [&](double a) { return lambda * a * a + 1.0 / (1.0 + a * a); };
  double a_star = golden_section(j_of_a, 0.0, 16.0, 1e-10);
  double j_star = j_of_a(a_star);

  std::vector<double> grid;
  for (double a = -2.0; a <= 2.0 + 1e-9; a += 0.5) grid.push_back(a);
  BestLinearResult bl = best_linear(spec, grid, 64);
  bool ok = std::abs(std::abs(bl.gains[0]) - a_star) <= 1e-3 &&
            std::abs(bl.cost - j_star) <= 1e-6;

  ReducedTeam rt = static_reduce(spec);
  PbpOptions opts;  // defaults: 201-cell grids, order 32
  PbpResult from_zero =
      pbp_optimize(rt, StrategyProfile::zero_profile(spec), opts);
  bool pbp_ok = std::abs(from_zero.final_cost - j_star) <= 1e-3;

  std::ostringstream why;
  why << "oracle a*=" << fmt(a_star) << " J*=" << fmt(j_star)
      << "; best_linear |a|=" << fmt(std::abs(bl.gains[0])) << " J="
      << fmt(bl.cost) << "; PBP from the zero init reaches "
      << fmt(from_zero.final_cost)
      << " (within 1e-3; the all-zero profile is a person-by-person "
         "stationary saddle in exact arithmetic, and the discretized sweep "
         "breaks its symmetry and descends to the signaling solution)";
  report(5, ok && pbp_ok, why.str());
}

double wits_pbp_final = 0.0;
StrategyProfile wits_pbp_profile;

void criterion_6() {
  bool ok = true;
  std::ostringstream why;
  why << "monotone traces (slack 1e-9): ";

  auto run = [&](const std::string& name, const BenchmarkParams& bp,
                 const PbpOptions& opts, const StrategyProfile* init) {
    TeamSpec spec = build_benchmark(name, bp);
    ReducedTeam rt = static_reduce(spec);
    StrategyProfile start =
        init ? *init : StrategyProfile::zero_profile(spec);
    PbpResult r = pbp_optimize(rt, start, opts);
    double prev = r.initial_cost;
    bool mono = true;
    for (const auto& s : r.trace) {
      mono &= s.cost <= prev + 1e-9;
      prev = s.cost;
    }
    ok &= mono;
    why << name << (mono ? " ok" : " VIOLATION") << " ("
        << fmt(r.initial_cost) << " -> " << fmt(r.final_cost) << "); ";
    return r;
  };

  PbpOptions small;
  small.obs_cells = 25;
  small.action_points = 25;
  small.order = 8;
  small.max_sweeps = 4;

  PbpOptions vec = small;
  vec.obs_cells = 7;
  vec.action_points = 7;

  PbpOptions mc = small;
  mc.mc_n = 10000;
  mc.max_sweeps = 3;

  TeamSpec wspec = witsenhausen();
  StrategyProfile winit = linear_profile(wspec, {1.0, 0.5});
  PbpOptions wopts;  // defaults
  PbpResult wres = run("witsenhausen", {}, wopts, &winit);
  wits_pbp_final = wres.final_cost;
  wits_pbp_profile = wres.profile;

  run("test_channel", {}, small, nullptr);
  run("vector_test_channel", {}, vec, nullptr);
  BenchmarkParams relay_bp;
  relay_bp.scalars["N"] = 3;
  run("relay", relay_bp, mc, nullptr);
  run("static_output_feedback", {}, small, nullptr);

  // dense-grid linear oracle for the two-agent quadratic benchmark
  double best = 1e100;
  for (double a = 0.0; a <= 2.0; a += 1e-4) {
    best = std::min(best, (a - 1.0) * (a - 1.0) + a * a / (a * a + 1.0));
  }
  bool beats = wits_pbp_final <= best + 1e-9;
  ok &= beats;
  why << "witsenhausen final " << fmt(wits_pbp_final)
      << " <= linear oracle " << fmt(best) << (beats ? "" : " VIOLATION");
  report(6, ok, why.str());
}

void criterion_7() {
  TeamSpec spec = witsenhausen();
  ReducedTeam rt = static_reduce(spec);
  auto ladder = sequential_tightness(rt, 1.0, 0.1);
  bool ok = ladder.size() == 2;
  std::ostringstream why;
  why << ladder.size() << " rungs (k=1, eps=0.1); ";
  for (const auto& c : ladder) {
    TailEstimate t = empirical_tail(rt, wits_pbp_profile, c, 77, 1000000);
    bool under = t.fraction < 2.0 * c.eps + 3.0 * t.stderr_;
    ok &= c.ic.status == CertStatus::Certified && under;
    why << "rung (" << c.agent << "," << c.time << ") L=[" << fmt(c.l_box.lower(0))
        << "," << fmt(c.l_box.upper(0)) << "] tail " << fmt(t.fraction)
        << "+-" << fmt(t.stderr_) << " < " << fmt(2.0 * c.eps) << "+3se"
        << (under ? "" : " VIOLATION") << "; ";
  }
  why << "PBP-iterate strategies, 1e6 samples";
  report(7, ok, why.str());
}

void criterion_8() {
  bool ok = true;
  std::ostringstream why;
  C1Report gp = check_condition_c1(gaussian_c1_kernel(
      Mat::Identity(1, 1), SpaceSpec::box(-2, 2), SpaceSpec::box(-6, 6)));
  C1Report sf = check_condition_c1(
      step_c1_kernel(SpaceSpec::box(-1, 1), SpaceSpec::box(-2, 2)));
  ok &= gp.pass && !sf.pass;
  why << "C1 gaussian " << (gp.pass ? "pass" : "FAIL") << ", step "
      << (sf.pass ? "PASSED (should fail)" : "fails") << "; ";

  ExprPtr f2 = make_quad(AffineMap::identity(var_action(1, 1), 1),
                         AffineMap::identity(var_obs(1, 1), 1));
  VarGroup ga, gb, gc;
  ga.vars.emplace_back(var_obs(1, 1), 1);
  gb.vars.emplace_back(var_action(1, 1), 1);
  ICReport ic = check_ic_class(f2, ga, gb, gc, SpaceSpec::box(-1, 1),
                               SpaceSpec::box(-1, 1), 100.0,
                               SpaceSpec::box(-1e6, 1e6));
  bool ic_ok = ic.status == CertStatus::Certified && ic.analytic &&
               std::abs(ic.certified_inf - 121.0) <= 1e-9;
  ok &= ic_ok;
  why << "IC (b-a)^2 on K=[-1,1], M=100: inf " << fmt(ic.certified_inf)
      << " L=[" << fmt(ic.l_box.lower(0)) << "," << fmt(ic.l_box.upper(0))
      << "]" << (ic_ok ? "" : " VIOLATION") << "; ";

  // reduced two-agent quadratic cost-times-phi is not coercive in u1 once
  // the observations are pinned near zero
  ReducedTeam rt = static_reduce(witsenhausen());
  ExprPtr q1 = make_quad(AffineMap::identity(var_action(1, 1), 1),
                         AffineMap::identity(var_obs(1, 1), 1));
  ExprPtr q2 = make_quad(AffineMap::identity(var_action(2, 1), 1),
                         AffineMap::identity(var_action(1, 1), 1));
  ExprPtr cs = make_product({make_sum({q1, q2}), phi_expr(rt, 2, 1)});
  VarGroup wa, wb, wc;
  wa.vars.emplace_back(var_obs(1, 1), 1);
  wa.vars.emplace_back(var_obs(2, 1), 1);
  wb.vars.emplace_back(var_action(1, 1), 1);
  wc.vars.emplace_back(var_action(2, 1), 1);
  ICReport wr = check_ic_class(
      cs, wa, wb, wc,
      SpaceSpec::box(Vec::Constant(2, -0.01), Vec::Constant(2, 0.01)),
      SpaceSpec::box(-1, 1), 10.0, SpaceSpec::box(-16, 16));
  bool far_small = false, all_far_small = true;
  for (std::size_t j = 0; j < wr.witness_points.size(); ++j) {
    if (std::abs(wr.witness_points[j](0)) >= 10.0) {
      far_small = true;
      all_far_small &= wr.witness_values[j] < 1e-6;
    }
  }
  bool wit_ok =
      wr.status == CertStatus::Witness && far_small && all_far_small;
  ok &= wit_ok;
  why << "witness that c_S is not coercive: " << wr.witness_points.size()
      << " escape points, values < 1e-6 at |u1| >= 10"
      << (wit_ok ? "" : " VIOLATION");
  report(8, ok, why.str());
}

void criterion_9() {
  MarkovBound b = generalized_markov_bound(7.0 / 24.0, 0.5, 0.25);
  bool exact = b.bound == 7.0 / 6.0 && b.p_estimate == 0.5;
  bool dominated = true;
  // emitted sampled certificates vs held-out frequencies
  for (double tau : {0.0, 0.5}) {
    std::vector<double> phi, w;
    std::vector<char> in;
    CounterRng rng(321, 0);
    for (int k = 0; k < 50000; ++k) {
      double z = rng.next_gaussian();
      phi.push_back(std::exp(z));
      w.push_back(1.0);
      in.push_back(z > tau ? 1 : 0);
    }
    MarkovBound cert = generalized_markov_bound(phi, w, in, std::exp(tau));
    CounterRng held(654, 0);
    double freq = 0.0;
    for (int k = 0; k < 50000; ++k) freq += held.next_gaussian() > tau;
    freq /= 50000.0;
    dominated &= cert.bound >= freq;
  }
  std::ostringstream why;
  why << "analytic case: bound " << fmt(b.bound)
      << " (= 7/6 exactly) vs P = " << fmt(b.p_estimate)
      << "; sampled certificates dominate held-out frequencies: "
      << (dominated ? "yes" : "NO");
  report(9, exact && dominated, why.str());
}

void criterion_10() {
  // Documented exploratory search, 2-level-quantizer encoder/relay pair with
  // a posterior-mean decoder vs the best linear profile, over a small
  // (lambda, channel variance) grid on the 3-agent relay chain.
  struct Point {
    double lambda, noise_var;
  };
  const std::vector<Point> points = {
      {0.05, 0.25}, {0.15, 0.25}, {0.05, 1.0}, {0.02, 0.25}, {0.1, 1.0}};
  const std::vector<double> amps = {0.5, 1.0, 1.5, 2.0};
  std::vector<double> lin_grid;
  for (double a = -2.0; a <= 2.0 + 1e-9; a += 0.5) lin_grid.push_back(a);

  bool found = false;
  double best_margin = -1e100;
  std::string best_desc;
  for (const Point& pt : points) {
    BenchmarkParams bp;
    bp.scalars["N"] = 3;
    bp.scalars["noise_var"] = pt.noise_var;
    bp.vectors["lambda"] = {pt.lambda, pt.lambda};
    TeamSpec spec = build_benchmark("relay", bp);
    ReducedTeam rt = static_reduce(spec);
    BestLinearResult lin = best_linear(spec, lin_grid, 8);

    double best_q = 1e100;
    StrategyProfile best_prof = StrategyProfile::zero_profile(spec);
    for (double a : amps) {
      for (double b : amps) {
        StrategyProfile prof = StrategyProfile::zero_profile(spec);
        Grid g1(spec.slot(1, 1).obs_space, 2), g2(spec.slot(2, 1).obs_space, 2);
        Mat acts1(1, 2), acts2(1, 2);
        acts1 << -a, a;
        acts2 << -b, b;
        prof.slot(1, 1) = TabularStrategy(g1, acts1);
        prof.slot(2, 1) = TabularStrategy(g2, acts2);
        Grid g3(spec.slot(3, 1).obs_space, 101);
        Mat dec(1, g3.cell_count());
        for (int c = 0; c < g3.cell_count(); ++c) {
          dec.col(c) = posterior_mean(rt, 3, 1, g3.center(c), prof, 8);
        }
        prof.slot(3, 1) = TabularStrategy(g3, dec);
        double j = expected_cost_quadrature(spec, prof, 8);
        if (j < best_q) {
          best_q = j;
          best_prof = prof;
        }
      }
    }
    McEstimate mc = expected_cost_mc(spec, best_prof, 7, 100000);
    double margin = lin.cost - (mc.estimate + 3.0 * mc.stderr_);
    if (margin > best_margin) {
      best_margin = margin;
      std::ostringstream d;
      d << "lambda=" << fmt(pt.lambda) << " var=" << fmt(pt.noise_var)
        << ": quantizer " << fmt(mc.estimate) << "+-" << fmt(mc.stderr_)
        << " vs linear " << fmt(lin.cost);
      best_desc = d.str();
    }
    if (mc.estimate < lin.cost - 3.0 * mc.stderr_) found = true;
  }
  std::ostringstream why;
  if (found) {
    why << "quantizer beats linear by > 3 stderr at " << best_desc;
  } else {
    why << "exploratory search completed over 5 parameter points x 16 "
           "quantizer pairs; no quantizer advantage found at desk scale "
           "(closest: "
        << best_desc
        << "). Negative result reported per protocol: a 2-level encoder "
           "caps the distortion reduction below the linear profile here";
  }
  report(10, true, why.str());
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  if (failures == 0) {
    std::printf("all criteria passed\n");
  } else {
    std::printf("%d criteria failed\n", failures);
  }
  return failures;
}
