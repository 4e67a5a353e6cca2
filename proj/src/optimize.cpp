#include "teamopt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace teamopt {

double golden_section(const std::function<double(double)>& f, double lo,
                      double hi, double tol) {
  if (!(lo < hi)) throw TeamError("golden_section: empty interval");
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// best_linear
// ---------------------------------------------------------------------------

namespace {

std::vector<std::pair<int, int>> slot_list(const TeamSpec& spec) {
  std::vector<std::pair<int, int>> out;
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) out.emplace_back(i, t);
  }
  return out;
}

StrategyProfile gains_to_profile(const TeamSpec& spec,
                                 const std::vector<double>& gains) {
  StrategyProfile p;
  p.slots.resize(spec.num_agents);
  for (auto& row : p.slots) row.resize(spec.horizon, LinearStrategy{});
  int k = 0;
  for (const auto& [i, t] : slot_list(spec)) {
    const auto& slot = spec.slot(i, t);
    if (slot.action_space.dim != slot.obs_space.dim) {
      throw TeamError("best_linear: scalar-gain profile needs matching "
                      "obs/action dimensions");
    }
    LinearStrategy lin;
    lin.gain = gains[k] *
               Mat::Identity(slot.action_space.dim, slot.obs_space.dim);
    lin.offset = Vec::Zero(slot.action_space.dim);
    p.slot(i, t) = std::move(lin);
    ++k;
  }
  return p;
}

int total_primitive_dim(const TeamSpec& spec) {
  int d = spec.omega0_dim();
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      d += spec.slot(i, t).obs_noise.dim();
    }
  }
  return d;
}

}  // namespace

BestLinearResult best_linear(const TeamSpec& spec,
                             const std::vector<double>& coeff_grid, int order,
                             std::uint64_t seed, std::size_t mc_n) {
  if (coeff_grid.empty()) throw TeamError("best_linear: empty coefficient grid");
  auto slots = slot_list(spec);
  const std::size_t num_slots = slots.size();
  double combos = std::pow(static_cast<double>(coeff_grid.size()),
                           static_cast<double>(num_slots));
  if (combos > 1e6) {
    throw TeamError("best_linear: coefficient grid exceeds 10^6 combinations");
  }
  const bool use_quadrature = total_primitive_dim(spec) <= 4;
  auto eval = [&](const std::vector<double>& gains) {
    StrategyProfile p = gains_to_profile(spec, gains);
    if (use_quadrature) return expected_cost_quadrature(spec, p, order);
    return expected_cost_mc(spec, p, seed, mc_n).estimate;
  };

  std::vector<double> best(num_slots, coeff_grid.front());
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(num_slots, 0);
  std::vector<double> gains(num_slots);
  while (true) {
    for (std::size_t k = 0; k < num_slots; ++k) gains[k] = coeff_grid[idx[k]];
    double c = eval(gains);
    if (c < best_cost) {
      best_cost = c;
      best = gains;
    }
    int k = static_cast<int>(num_slots) - 1;
    for (; k >= 0; --k) {
      if (++idx[k] < coeff_grid.size()) break;
      idx[k] = 0;
    }
    if (k < 0) break;
  }

  // Cyclic golden-section refinement around each coordinate's grid cell.
  std::vector<double> sorted = coeff_grid;
  std::sort(sorted.begin(), sorted.end());
  double span = sorted.size() > 1
                    ? *std::max_element(sorted.begin(), sorted.end()) -
                          *std::min_element(sorted.begin(), sorted.end())
                    : 1.0;
  double step = sorted.size() > 1
                    ? span / static_cast<double>(sorted.size() - 1)
                    : 1.0;
  for (int pass = 0; pass < 64; ++pass) {
    double pass_start = best_cost;
    for (std::size_t k = 0; k < num_slots; ++k) {
      std::vector<double> trial = best;
      double center = best[k];
      double refined = golden_section(
          [&](double a) {
            trial[k] = a;
            return eval(trial);
          },
          center - step, center + step, 1e-9);
      trial[k] = refined;
      double c = eval(trial);
      if (c < best_cost) {
        best_cost = c;
        best = trial;
      }
    }
    // Coordinate descent converges linearly on coupled coordinates; iterate
    // until a full cycle stops paying.
    if (pass_start - best_cost < 1e-12) break;
  }

  BestLinearResult res;
  res.gains = best;
  res.cost = best_cost;
  res.profile = gains_to_profile(spec, best);
  return res;
}

// ---------------------------------------------------------------------------
// pbp_optimize
// ---------------------------------------------------------------------------

namespace {

FlatScenarios make_scenarios(const ReducedTeam& rt, const PbpOptions& opts) {
  if (reduced_dimension(rt) <= 4) {
    return FlatScenarios::quadrature(rt, opts.order);
  }
  return FlatScenarios::monte_carlo(rt, opts.seed, opts.mc_n);
}

double profile_cost(const ReducedTeam& rt, const FlatReduced& fr,
                    const FlatScenarios& fs, const StrategyProfile& profile,
                    std::vector<double>& work) {
  BranchWalker bw(rt.spec, fr.layout, profile);
  double acc = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    std::copy(fs.row(k), fs.row(k) + fs.stride, work.begin());
    double w = fs.weights[k];
    bw.walk(work.data(), -1, [&](double* x, double p) {
      acc += w * p * fr.cost_phi(x);
    });
  }
  return acc;
}

// Deterministic action of a strategy at a point, when one exists.
std::optional<Vec> maybe_act(const Strategy& s, const Vec& y) {
  if (std::holds_alternative<BehavioralGridStrategy>(s)) return std::nullopt;
  return strategy_act(s, y);
}

}  // namespace

PbpResult pbp_optimize(const ReducedTeam& rt, const StrategyProfile& init,
                       const PbpOptions& opts) {
  const TeamSpec& spec = rt.spec;
  FlatReduced fr = FlatReduced::compile(rt);
  FlatScenarios fs = make_scenarios(rt, opts);
  std::vector<double> work(fs.stride, 0.0);

  PbpResult res;
  res.profile = init;
  res.initial_cost = profile_cost(rt, fr, fs, res.profile, work);
  double current = res.initial_cost;

  auto slots = slot_list(spec);
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    double sweep_start = current;
    for (std::size_t s_idx = 0; s_idx < slots.size(); ++s_idx) {
      auto [i, t] = slots[s_idx];
      const auto& slot = spec.slot(i, t);
      Grid obs_grid(slot.obs_space, opts.obs_cells);
      Grid action_grid(slot.action_space, opts.action_points);
      Mat cand(slot.action_space.dim, action_grid.cell_count());
      for (int a = 0; a < action_grid.cell_count(); ++a) {
        cand.col(a) = action_grid.center(a);
      }
      const int y_off = fr.layout.offset(var_obs(i, t));
      const int y_dim = fr.layout.dim(var_obs(i, t));
      const int u_off = fr.layout.offset(var_action(i, t));
      const int u_dim = fr.layout.dim(var_action(i, t));

      // Collect every (scenario x other-slot branch) leaf, bucketed by the
      // slot's observation cell. Leaves are full layout buffers.
      BranchWalker bw(spec, fr.layout, res.profile);
      std::vector<double> leaf_buf;
      std::vector<double> leaf_w;
      std::vector<int> leaf_cell;
      Vec y(y_dim);
      for (std::size_t k = 0; k < fs.size(); ++k) {
        std::copy(fs.row(k), fs.row(k) + fs.stride, work.begin());
        for (int d = 0; d < y_dim; ++d) y(d) = work[y_off + d];
        int cell = obs_grid.locate(y);
        double w = fs.weights[k];
        bw.walk(work.data(), static_cast<int>(s_idx),
                [&](double* x, double p) {
                  leaf_buf.insert(leaf_buf.end(), x, x + fs.stride);
                  leaf_w.push_back(w * p);
                  leaf_cell.push_back(cell);
                });
        if (leaf_w.size() > 5000000) {
          throw TeamError("pbp_optimize: branch expansion too large; "
                          "determinize the profile or coarsen grids");
        }
      }
      // bucket leaves by cell
      std::vector<std::vector<std::size_t>> buckets(obs_grid.cell_count());
      for (std::size_t l = 0; l < leaf_w.size(); ++l) {
        buckets[leaf_cell[l]].push_back(l);
      }

      Mat actions(u_dim, obs_grid.cell_count());
      const Strategy& old_strategy = res.profile.slot(i, t);
      Vec half_step(u_dim);
      for (int d = 0; d < u_dim; ++d) {
        half_step(d) =
            0.5 * (action_grid.edges(d)[1] - action_grid.edges(d)[0]);
      }
      for (int j = 0; j < obs_grid.cell_count(); ++j) {
        std::optional<Vec> fallback = maybe_act(old_strategy,
                                                obs_grid.center(j));
        if (buckets[j].empty()) {
          actions.col(j) =
              fallback ? *fallback : Vec::Zero(u_dim).eval();
          continue;
        }
        // {apparent cost, phi mass} of a candidate on the cell's leaves.
        // The mass is the scenario-rule estimate of the cell's phi-weighted
        // measure; its true value does not depend on the candidate (each
        // channel's phi integrates to one against its own nu), so a
        // collapsed mass means the rule no longer sees where the reweighted
        // measure lives and the apparent cost is meaningless.
        auto cell_eval = [&](const Vec& u) -> std::pair<double, double> {
          double acc = 0.0, mass = 0.0;
          for (std::size_t l : buckets[j]) {
            double* x = leaf_buf.data() + l * fs.stride;
            for (int d = 0; d < u_dim; ++d) x[u_off + d] = u(d);
            double lp = fr.log_phi(x);
            if (lp > 700.0) {
              return {std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
            }
            double phi = std::exp(lp);
            mass += leaf_w[l] * phi;
            acc += leaf_w[l] * phi * fr.cost.eval(x);
          }
          return {acc, mass};
        };
        std::vector<double> cand_cost(cand.cols());
        std::vector<double> cand_mass(cand.cols());
        double ref_mass = 0.0;
        Vec u(u_dim);
        for (int a = 0; a < cand.cols(); ++a) {
          u = cand.col(a);
          auto [c, m] = cell_eval(u);
          cand_cost[a] = c;
          cand_mass[a] = m;
          if (std::isfinite(m) && m > ref_mass) ref_mass = m;
        }
        // Reject candidates that lose more than half of the reference mass:
        // those sit outside the scenario rule's validity region (the
        // quadrature analogue of the reduction's |hcheck| <= 5 sigma
        // normalization contract).
        const double mass_floor = 0.5 * ref_mass;
        int best_a = -1;
        double best_c = std::numeric_limits<double>::infinity();
        for (int a = 0; a < cand.cols(); ++a) {
          if (!(cand_mass[a] >= mass_floor)) continue;
          if (cand_cost[a] < best_c) {
            best_c = cand_cost[a];
            best_a = a;
          }
        }
        Vec best_u = best_a >= 0 ? Vec(cand.col(best_a))
                                 : Vec(Vec::Zero(u_dim));
        if (best_a >= 0 && opts.refine_actions) {
          for (int pass = 0; pass < 2; ++pass) {
            for (int d = 0; d < u_dim; ++d) {
              Vec trial = best_u;
              double refined = golden_section(
                  [&](double v) {
                    trial(d) = v;
                    return cell_eval(trial).first;
                  },
                  best_u(d) - half_step(d), best_u(d) + half_step(d), 1e-9);
              trial(d) = refined;
              auto [c, m] = cell_eval(trial);
              if (c < best_c && m >= mass_floor) {
                best_u = trial;
                best_c = c;
              }
            }
          }
        }
        if (fallback && cell_eval(*fallback).first < best_c) {
          best_u = *fallback;
        }
        actions.col(j) = best_u;
      }
      // Accept the best response only if it does not lose to the incumbent:
      // a non-tabular incumbent (linear, say) varies within observation
      // cells and need not be representable in the update family, so the
      // replacement is gated on the same fixed-measure cost it minimizes.
      Strategy old_slot = res.profile.slot(i, t);
      res.profile.slot(i, t) = TabularStrategy(obs_grid, std::move(actions));
      double updated = profile_cost(rt, fr, fs, res.profile, work);
      if (updated > current) {
        res.profile.slot(i, t) = std::move(old_slot);
      } else {
        current = updated;
      }
      res.trace.push_back({i, t, current});
    }
    res.sweeps = sweep;
    if (sweep_start - current < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.final_cost = current;
  return res;
}

// ---------------------------------------------------------------------------
// cost_slice_bound
// ---------------------------------------------------------------------------

double cost_slice_bound(const ReducedTeam& rt,
                        const StrategyProfile& strategies, int agent, int time,
                        int order, std::uint64_t seed, std::size_t mc_n) {
  ExprPtr term = slot_quadratic_term(rt.primitive_cost.expr, agent, time);
  // A slot without an own-action quadratic term contributes a zero slice,
  // trivially bounded by the (non-negative) expected cost.
  if (!term) return 0.0;
  FlatReduced fr = FlatReduced::compile(rt);
  FlatExpr slice = FlatExpr::compile(term, fr.layout);
  FlatScenarios fs = reduced_dimension(rt) <= 4
                         ? FlatScenarios::quadrature(rt, order)
                         : FlatScenarios::monte_carlo(rt, seed, mc_n);
  BranchWalker bw(rt.spec, fr.layout, strategies);
  std::vector<double> work(fs.stride, 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    std::copy(fs.row(k), fs.row(k) + fs.stride, work.begin());
    double w = fs.weights[k];
    bw.walk(work.data(), -1, [&](double* x, double p) {
      double v = slice.eval(x) * std::exp(fr.log_phi(x));
      if (!std::isfinite(v)) {
        throw NonFinite("cost slice is not finite at an evaluation point");
      }
      acc += w * p * v;
    });
  }
  return acc;
}

}  // namespace teamopt
