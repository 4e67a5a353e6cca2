// Command-line front door: benchmark factories, static reduction, strategy
// evaluation, PBP optimization, structural-condition certification, and the
// exact observation-sharing counterexample tables.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <boost/rational.hpp>

#include "teamopt/benchmarks.hpp"
#include "teamopt/certify.hpp"
#include "teamopt/config_io.hpp"
#include "teamopt/counterexample.hpp"
#include "teamopt/evaluation.hpp"
#include "teamopt/optimize.hpp"

namespace fs = std::filesystem;
using namespace teamopt;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitUsage = 64;

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double rat(const Rational& r) {
  return boost::rational_cast<double>(r);
}

int thread_budget() {
  const char* env = std::getenv("TEAMOPT_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

BenchmarkParams parse_params(const std::vector<std::string>& kvs) {
  BenchmarkParams p;
  for (const auto& kv : kvs) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("bad --param (expected key=value): " + kv);
    }
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (val.find(',') != std::string::npos) {
      std::vector<double> vs;
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) vs.push_back(std::stod(tok));
      p.vectors[key] = std::move(vs);
    } else {
      p.scalars[key] = std::stod(val);
    }
  }
  return p;
}

TeamSpec load_team(const std::string& team_path, const std::string& bench,
                   const std::vector<std::string>& params) {
  if (!bench.empty()) return build_benchmark(bench, parse_params(params));
  if (team_path.empty() || team_path == "-") return read_team_config(std::cin);
  std::ifstream f(team_path);
  if (!f) throw ValidationError("cannot open team config: " + team_path);
  return read_team_config(f);
}

void write_artifact(const std::string& out_dir, const std::string& name,
                    const std::string& content) {
  if (out_dir.empty()) return;
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / name);
  f << content;
}

std::string describe_affine(const AffineMap& m) {
  std::ostringstream os;
  os << "offset=[";
  for (int i = 0; i < m.offset.size(); ++i) {
    os << (i ? " " : "") << fmt(m.offset(i));
  }
  os << "]";
  for (const auto& [v, coef] : m.terms) {
    os << " + " << var_name(v) << "*[";
    for (int r = 0; r < coef.rows(); ++r) {
      for (int c = 0; c < coef.cols(); ++c) {
        os << ((r || c) ? " " : "") << fmt(coef(r, c));
      }
    }
    os << "]";
  }
  return os.str();
}

std::string describe_box(const SpaceSpec& b) {
  std::ostringstream os;
  for (int i = 0; i < b.dim; ++i) {
    os << (i ? " x " : "") << "[" << fmt(b.lower(i)) << ", " << fmt(b.upper(i))
       << "]";
  }
  return os.str();
}

StrategyProfile gains_profile(const TeamSpec& spec,
                              const std::vector<double>& gains) {
  StrategyProfile p = StrategyProfile::zero_profile(spec);
  if (gains.empty()) return p;
  std::size_t idx = 0;
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) {
      if (idx >= gains.size()) {
        throw ValidationError("--linear needs one gain per slot");
      }
      const AgentSlot& s = spec.slot(i, t);
      if (s.obs_space.dim != s.action_space.dim) {
        throw ValidationError("--linear requires square slots");
      }
      p.slot(i, t) = LinearStrategy{
          gains[idx] * Mat::Identity(s.action_space.dim, s.obs_space.dim),
          Vec::Zero(s.action_space.dim)};
      ++idx;
    }
  }
  if (idx != gains.size()) throw ValidationError("--linear gain count mismatch");
  return p;
}

int run_certify(const std::string& condition, const std::string& kernel_name,
                double eps, double k_bound, int grid, const TeamSpec* team,
                int agent, int time, const std::string& out_dir) {
  std::ostringstream rep;
  bool certified = false;
  if (condition == "c1") {
    C1Kernel kernel =
        kernel_name == "step"
            ? step_c1_kernel(SpaceSpec::box(-1, 1), SpaceSpec::box(-2, 2))
            : gaussian_c1_kernel(Mat::Identity(1, 1), SpaceSpec::box(-3, 3),
                                 SpaceSpec::box(-8, 8));
    C1Report r = check_condition_c1(kernel, grid);
    rep << "condition: C1\nkernel: " << kernel.name << "\nresult: "
        << (r.pass ? "pass" : "fail") << "\n";
    rep << "sup_a int h dnu: " << fmt(r.h_integral_bound) << "\n";
    for (const auto& rung : r.ladder) {
      rep << "eps " << fmt(rung.eps) << ": "
          << (rung.found ? "delta " + fmt(rung.delta) : std::string("no delta"))
          << "\n";
    }
    rep << "note: " << r.domain_note << "\n";
    certified = r.pass;
  } else if (condition == "ic" || condition == "tightness") {
    if (!team) throw ValidationError("--condition " + condition + " needs a team");
    ReducedTeam rt = static_reduce(*team);
    ExprPtr term = slot_quadratic_term(rt.primitive_cost.expr, agent, time);
    if (!term) throw FormMismatch("slot has no own-action quadratic term");
    auto ladder = sequential_tightness(rt, k_bound, eps);
    const TightnessCertificate* cert = nullptr;
    for (const auto& c : ladder) {
      if (c.agent == agent && c.time == time) cert = &c;
    }
    if (!cert) throw ValidationError("no such slot");
    rep << "condition: " << condition << "\nslot: agent " << agent << " time "
        << time << "\nstatus: certified\n";
    rep << "M: " << fmt(cert->m_level) << "\nK box: "
        << describe_box(cert->k_box) << "\nL box: " << describe_box(cert->l_box)
        << "\n";
    rep << "phi prefix lower bound: " << fmt(cert->phi_prefix_min) << "\n";
    rep << "certified inf over K x L-complement: "
        << fmt(cert->ic.certified_inf) << "\n";
    rep << "tail bound: " << fmt(cert->tail_bound) << "\n";
    if (cert->extends_declared) rep << "note: L extends the declared box\n";
    certified = true;
  } else if (condition == "sequential") {
    if (!team) throw ValidationError("--condition sequential needs a team");
    ReducedTeam rt = static_reduce(*team);
    auto ladder = sequential_tightness(rt, k_bound, eps);
    rep << "condition: sequential tightness\nrungs: " << ladder.size() << "\n";
    for (const auto& c : ladder) {
      rep << "rung agent " << c.agent << " time " << c.time << ": K "
          << describe_box(c.k_box) << "  L " << describe_box(c.l_box)
          << "  tail bound " << fmt(c.tail_bound)
          << (c.extends_declared ? "  (extends declared box)" : "") << "\n";
    }
    certified = true;
  } else {
    throw ValidationError("unknown --condition " + condition);
  }
  std::cout << rep.str();
  write_artifact(out_dir, "certificate.txt", rep.str());
  return certified ? 0 : kExitInconclusive;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential stochastic team toolkit"};
  app.require_subcommand(1);
  (void)thread_budget();  // modules are single-threaded; budget >= 1 accepted

  std::string team_path, bench_name, out_dir;
  std::vector<std::string> params;

  auto add_team_flags = [&](CLI::App* sub) {
    sub->add_option("--team", team_path, "team config file ('-' for stdin)");
    sub->add_option("--benchmark", bench_name, "benchmark name");
    sub->add_option("--param", params, "benchmark parameter key=value");
    sub->add_option("--out", out_dir, "artifact output directory");
  };

  // benchmark
  std::string pos_name;
  auto* cmd_bench = app.add_subcommand("benchmark", "emit a benchmark team config");
  cmd_bench->add_option("name", pos_name, "benchmark name")->required();
  cmd_bench->add_option("--param", params, "parameter key=value");
  cmd_bench->add_option("--out", out_dir, "artifact output directory");

  // reduce
  auto* cmd_reduce = app.add_subcommand("reduce", "static reduction summary");
  add_team_flags(cmd_reduce);

  // evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "expected cost of a profile");
  add_team_flags(cmd_eval);
  std::string method = "quadrature", path = "dynamic";
  int order = 64;
  std::uint64_t seed = 0;
  std::size_t mc_n = 100000;
  std::vector<double> gains;
  cmd_eval->add_option("--method", method, "quadrature|mc");
  cmd_eval->add_option("--path", path, "dynamic|reduced");
  cmd_eval->add_option("--order", order, "quadrature order");
  cmd_eval->add_option("--seed", seed, "rng seed");
  cmd_eval->add_option("--n", mc_n, "Monte Carlo sample count");
  cmd_eval->add_option("--linear", gains, "per-slot linear gains (causal order)");

  // optimize
  auto* cmd_opt = app.add_subcommand("optimize", "person-by-person optimization");
  add_team_flags(cmd_opt);
  int grid = 201, iters = 50, opt_order = 32;
  std::uint64_t opt_seed = 0;
  cmd_opt->add_option("--grid", grid, "observation/action grid points");
  cmd_opt->add_option("--iters", iters, "maximum sweeps");
  cmd_opt->add_option("--order", opt_order, "scenario quadrature order");
  cmd_opt->add_option("--seed", opt_seed, "rng seed");

  // certify
  auto* cmd_cert = app.add_subcommand("certify", "structural-condition certificates");
  add_team_flags(cmd_cert);
  std::string condition = "c1", kernel = "gaussian";
  double eps = 0.1, k_bound = 1.0;
  int cert_grid = 201, cert_agent = 1, cert_time = 1;
  cmd_cert->add_option("--condition", condition, "c1|ic|tightness|sequential");
  cmd_cert->add_option("--kernel", kernel, "c1 kernel: gaussian|step");
  cmd_cert->add_option("--eps", eps, "tightness epsilon");
  cmd_cert->add_option("--k", k_bound, "cost bound k");
  cmd_cert->add_option("--grid", cert_grid, "c1 grid points");
  cmd_cert->add_option("--agent", cert_agent, "slot agent (ic/tightness)");
  cmd_cert->add_option("--time", cert_time, "slot time (ic/tightness)");

  // counterexample
  auto* cmd_cx = app.add_subcommand("counterexample",
                                    "observation-sharing counterexample table");
  int nmax = 12;
  cmd_cx->add_option("--nmax", nmax, "largest dyadic level");
  cmd_cx->add_option("--out", out_dir, "artifact output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (cmd_bench->parsed()) {
      TeamSpec spec = build_benchmark(pos_name, parse_params(params));
      std::string cfg = team_to_config(spec);
      std::cout << cfg;
      write_artifact(out_dir, "team.cfg", cfg);
      return 0;
    }
    if (cmd_reduce->parsed()) {
      TeamSpec spec = load_team(team_path, bench_name, params);
      ReducedTeam rt = static_reduce(spec);
      std::ostringstream os;
      os << "team: " << spec.name << "\n";
      for (int t = 1; t <= spec.horizon; ++t) {
        for (int i = 1; i <= spec.num_agents; ++i) {
          const Channel& ch = rt.channel(i, t);
          os << "channel agent " << i << " time " << t << ":\n"
             << "  hcheck: " << describe_affine(ch.hcheck) << "\n"
             << "  noise mean: [";
          for (int d = 0; d < ch.noise.mean.size(); ++d) {
            os << (d ? " " : "") << fmt(ch.noise.mean(d));
          }
          os << "]\n  noise covariance:";
          for (int r = 0; r < ch.noise.covariance.rows(); ++r) {
            os << " [";
            for (int c = 0; c < ch.noise.covariance.cols(); ++c) {
              os << (c ? " " : "") << fmt(ch.noise.covariance(r, c));
            }
            os << "]";
          }
          os << "\n";
        }
      }
      std::cout << os.str();
      write_artifact(out_dir, "reduce.txt", os.str());
      return 0;
    }
    if (cmd_eval->parsed()) {
      TeamSpec spec = load_team(team_path, bench_name, params);
      StrategyProfile prof = gains_profile(spec, gains);
      double estimate = 0.0, se = 0.0;
      if (method == "quadrature") {
        if (path == "reduced") {
          estimate = expected_cost_quadrature(static_reduce(spec), prof, order);
        } else {
          estimate = expected_cost_quadrature(spec, prof, order);
        }
      } else if (method == "mc") {
        McEstimate est = path == "reduced"
                             ? expected_cost_mc(static_reduce(spec), prof, seed, mc_n)
                             : expected_cost_mc(spec, prof, seed, mc_n);
        estimate = est.estimate;
        se = est.stderr_;
      } else {
        throw ValidationError("unknown --method " + method);
      }
      std::ostringstream os;
      os << "estimate,stderr,method,seed,order\n"
         << fmt(estimate) << "," << fmt(se) << "," << method << "," << seed
         << "," << order << "\n";
      std::cout << os.str();
      write_artifact(out_dir, "evaluate.csv", os.str());
      return 0;
    }
    if (cmd_opt->parsed()) {
      TeamSpec spec = load_team(team_path, bench_name, params);
      ReducedTeam rt = static_reduce(spec);
      PbpOptions opts;
      opts.max_sweeps = iters;
      opts.obs_cells = grid;
      opts.action_points = grid;
      opts.order = opt_order;
      opts.seed = opt_seed;
      PbpResult res = pbp_optimize(rt, StrategyProfile::zero_profile(spec), opts);
      std::ostringstream trace;
      trace << "iteration,agent,time,cost\n";
      trace << "0,0,0," << fmt(res.initial_cost) << "\n";
      for (std::size_t s = 0; s < res.trace.size(); ++s) {
        trace << (s + 1) << "," << res.trace[s].agent << "," << res.trace[s].time
              << "," << fmt(res.trace[s].cost) << "\n";
      }
      std::cout << trace.str();
      std::cout << "final_cost," << fmt(res.final_cost) << "\n";
      write_artifact(out_dir, "trace.csv", trace.str());
      if (!out_dir.empty()) {
        for (int t = 1; t <= spec.horizon; ++t) {
          for (int i = 1; i <= spec.num_agents; ++i) {
            std::ostringstream sc;
            const Strategy& s = res.profile.slot(i, t);
            if (const auto* tab = std::get_if<TabularStrategy>(&s)) {
              write_strategy_csv(sc, *tab);
            } else if (const auto* det = std::get_if<DeterministicGridStrategy>(&s)) {
              write_strategy_csv(sc, *det);
            } else if (const auto* beh = std::get_if<BehavioralGridStrategy>(&s)) {
              write_strategy_csv(sc, *beh);
            }
            write_artifact(out_dir,
                           "strategy_a" + std::to_string(i) + "_t" +
                               std::to_string(t) + ".csv",
                           sc.str());
          }
        }
      }
      return 0;
    }
    if (cmd_cert->parsed()) {
      TeamSpec spec;
      bool have_team = !bench_name.empty() || !team_path.empty();
      if (have_team) spec = load_team(team_path, bench_name, params);
      return run_certify(condition, kernel, eps, k_bound, cert_grid,
                         have_team ? &spec : nullptr, cert_agent, cert_time,
                         out_dir);
    }
    if (cmd_cx->parsed()) {
      WeakLimitReport rep = weak_limit_report(nmax);
      std::ostringstream os;
      os << "n,sequence_cost,p_u1,p_u2";
      for (const auto& name : rep.names) os << "," << name;
      os << ",full_joint_gap\n";
      for (const auto& row : rep.rows) {
        os << row.n << "," << fmt(rat(row.sequence_cost)) << ","
           << fmt(rat(row.p_u1)) << "," << fmt(rat(row.p_u2));
        for (const auto& g : row.gaps) os << "," << fmt(rat(g));
        os << "," << fmt(rat(row.full_joint_gap)) << "\n";
      }
      std::cout << os.str();
      write_artifact(out_dir, "counterexample.csv", os.str());
      return 0;
    }
  } catch (const Inconclusive& e) {
    std::cerr << "inconclusive: " << e.what() << "\n";
    return kExitInconclusive;
  } catch (const TeamError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
