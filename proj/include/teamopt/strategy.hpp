#pragma once

#include <iosfwd>
#include <variant>
#include <vector>

#include "teamopt/team_model.hpp"

namespace teamopt {

// Uniform cell grid over a SpaceSpec box. Multi-dimensional grids are tensor
// products with row-major flat indexing.
class Grid {
 public:
  Grid() = default;
  Grid(const SpaceSpec& space, int cells_per_dim);

  int dim() const { return static_cast<int>(edges_.size()); }
  int cell_count() const { return cell_count_; }
  // Flat index of the cell containing y; out-of-box points clamp to the
  // nearest boundary cell.
  int locate(const Vec& y) const;
  Vec center(int flat_index) const;
  const std::vector<double>& edges(int coord) const { return edges_[coord]; }
  double cell_volume() const;

 private:
  std::vector<std::vector<double>> edges_;  // strictly increasing per coord
  std::vector<int> cells_;
  int cell_count_ = 0;
};

class DeterministicGridStrategy;

// Row-stochastic table: rows = observation cells, columns = action points
// (action-grid cell centers).
class BehavioralGridStrategy {
 public:
  BehavioralGridStrategy(Grid obs, Grid action, Mat table);
  static BehavioralGridStrategy uniform(Grid obs, Grid action);
  static BehavioralGridStrategy random(Grid obs, Grid action,
                                       std::uint64_t seed);

  const Grid& obs_grid() const { return obs_; }
  const Grid& action_grid() const { return action_; }
  const Mat& table() const { return table_; }
  // Row for the cell containing y.
  Eigen::Map<const Eigen::RowVectorXd> row(const Vec& y) const;
  Vec sample_action(const Vec& y, CounterRng& rng) const;
  // argmax row probability per cell, ties to the lowest action index
  DeterministicGridStrategy argmax() const;

 private:
  Grid obs_, action_;
  Mat table_;
};

class DeterministicGridStrategy {
 public:
  DeterministicGridStrategy(Grid obs, Grid action, std::vector<int> lookup);
  static DeterministicGridStrategy constant(Grid obs, Grid action,
                                            int action_index);

  const Grid& obs_grid() const { return obs_; }
  const Grid& action_grid() const { return action_; }
  const std::vector<int>& lookup() const { return lookup_; }
  Vec act(const Vec& y) const;
  int action_index(const Vec& y) const { return lookup_[obs_.locate(y)]; }

 private:
  Grid obs_, action_;
  std::vector<int> lookup_;
};

// Deterministic strategy with one free action vector per observation cell
// (not restricted to an action grid); the representation produced by
// refined best responses.
class TabularStrategy {
 public:
  TabularStrategy(Grid obs, Mat actions);
  static TabularStrategy constant(Grid obs, Vec action);

  const Grid& obs_grid() const { return obs_; }
  // column j = action at observation cell j
  const Mat& actions() const { return actions_; }
  Vec act(const Vec& y) const { return actions_.col(obs_.locate(y)); }

 private:
  Grid obs_;
  Mat actions_;
};

struct LinearStrategy {
  Mat gain;
  Vec offset;

  static LinearStrategy zero(int obs_dim, int action_dim);
  static LinearStrategy scalar(double gain_value, double offset_value = 0.0);
  Vec act(const Vec& y) const { return gain * y + offset; }
};

using Strategy =
    std::variant<BehavioralGridStrategy, DeterministicGridStrategy,
                 TabularStrategy, LinearStrategy>;

struct StrategyProfile {
  std::vector<std::vector<Strategy>> slots;  // [i-1][t-1]

  const Strategy& slot(int i, int t) const { return slots[i - 1][t - 1]; }
  Strategy& slot(int i, int t) { return slots[i - 1][t - 1]; }
  static StrategyProfile zero_profile(const TeamSpec& spec);
};

bool is_deterministic(const Strategy& s);
// Action for deterministic strategy kinds; throws for behavioral.
Vec strategy_act(const Strategy& s, const Vec& y);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Dirac rows at the looked-up action.
BehavioralGridStrategy as_behavioral(const DeterministicGridStrategy& det);

// Per observation cell, the argmin-cost action; conditional_cost is
// (obs cell) x (action point). Ties break to the lowest action index.
DeterministicGridStrategy determinize(const BehavioralGridStrategy& beh,
                                      const Mat& conditional_cost);

// Joint weight table over (obs cell, action point):
// entry(j,k) = obs_measure(j) * table(j,k).
Mat induced_joint(const BehavioralGridStrategy& beh, const Vec& obs_measure);

// CSV: header row of action coordinates, then one row per observation cell.
void write_strategy_csv(std::ostream& os, const BehavioralGridStrategy& beh);
void write_strategy_csv(std::ostream& os, const DeterministicGridStrategy& d);
void write_strategy_csv(std::ostream& os, const TabularStrategy& tab);

}  // namespace teamopt
