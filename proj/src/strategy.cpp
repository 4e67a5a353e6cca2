#include "teamopt/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace teamopt {

namespace {
constexpr double kRowTol = 1e-12;
}

Grid::Grid(const SpaceSpec& space, int cells_per_dim) {
  if (cells_per_dim < 1) throw TeamError("grid needs at least one cell");
  space.validate("grid space");
  edges_.resize(space.dim);
  cells_.assign(space.dim, cells_per_dim);
  cell_count_ = 1;
  for (int d = 0; d < space.dim; ++d) {
    edges_[d].resize(cells_per_dim + 1);
    double lo = space.lower(d), hi = space.upper(d);
    for (int k = 0; k <= cells_per_dim; ++k) {
      edges_[d][k] = lo + (hi - lo) * k / cells_per_dim;
    }
    cell_count_ *= cells_per_dim;
  }
}

int Grid::locate(const Vec& y) const {
  if (y.size() != dim()) throw TeamError("grid locate: dimension mismatch");
  int flat = 0;
  for (int d = 0; d < dim(); ++d) {
    const auto& e = edges_[d];
    int m = cells_[d];
    // first edge strictly greater than y, clamped into [1, m]
    auto it = std::upper_bound(e.begin(), e.end(), y(d));
    int idx = static_cast<int>(it - e.begin()) - 1;
    idx = std::clamp(idx, 0, m - 1);
    flat = flat * m + idx;
  }
  return flat;
}

Vec Grid::center(int flat_index) const {
  Vec c(dim());
  for (int d = dim() - 1; d >= 0; --d) {
    int m = cells_[d];
    int idx = flat_index % m;
    flat_index /= m;
    c(d) = 0.5 * (edges_[d][idx] + edges_[d][idx + 1]);
  }
  return c;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dim(); ++d) v *= edges_[d][1] - edges_[d][0];
  return v;
}

BehavioralGridStrategy::BehavioralGridStrategy(Grid obs, Grid action,
                                               Mat table)
    : obs_(std::move(obs)), action_(std::move(action)), table_(std::move(table)) {
  if (table_.rows() != obs_.cell_count() ||
      table_.cols() != action_.cell_count()) {
    throw TeamError("behavioral table shape mismatch");
  }
  for (int j = 0; j < table_.rows(); ++j) {
    double sum = 0.0;
    for (int k = 0; k < table_.cols(); ++k) {
      if (table_(j, k) < 0.0) {
        throw TeamError("behavioral table has a negative entry");
      }
      sum += table_(j, k);
    }
    if (std::abs(sum - 1.0) > kRowTol) {
      throw TeamError("behavioral table row does not sum to 1");
    }
  }
}

BehavioralGridStrategy BehavioralGridStrategy::uniform(Grid obs, Grid action) {
  int na = action.cell_count();
  Mat t = Mat::Constant(obs.cell_count(), na, 1.0 / na);
  // renormalize rows exactly against accumulated rounding
  for (int j = 0; j < t.rows(); ++j) t.row(j) /= t.row(j).sum();
  return {std::move(obs), std::move(action), std::move(t)};
}

BehavioralGridStrategy BehavioralGridStrategy::random(Grid obs, Grid action,
                                                      std::uint64_t seed) {
  Mat t(obs.cell_count(), action.cell_count());
  for (int j = 0; j < t.rows(); ++j) {
    CounterRng rng(seed, static_cast<std::uint64_t>(j));
    double sum = 0.0;
    for (int k = 0; k < t.cols(); ++k) {
      double e = -std::log(rng.next_uniform());
      t(j, k) = e;
      sum += e;
    }
    t.row(j) /= sum;
  }
  return {std::move(obs), std::move(action), std::move(t)};
}

Eigen::Map<const Eigen::RowVectorXd> BehavioralGridStrategy::row(
    const Vec& y) const {
  int j = obs_.locate(y);
  return {table_.row(j).data(), table_.cols()};
}

Vec BehavioralGridStrategy::sample_action(const Vec& y, CounterRng& rng) const {
  int j = obs_.locate(y);
  double u = rng.next_uniform();
  double acc = 0.0;
  int last = static_cast<int>(table_.cols()) - 1;
  for (int k = 0; k <= last; ++k) {
    acc += table_(j, k);
    if (u <= acc || k == last) return action_.center(k);
  }
  return action_.center(last);
}

DeterministicGridStrategy BehavioralGridStrategy::argmax() const {
  std::vector<int> lookup(obs_.cell_count());
  for (int j = 0; j < table_.rows(); ++j) {
    int best = 0;
    for (int k = 1; k < table_.cols(); ++k) {
      if (table_(j, k) > table_(j, best)) best = k;
    }
    lookup[j] = best;
  }
  return {obs_, action_, std::move(lookup)};
}

DeterministicGridStrategy::DeterministicGridStrategy(Grid obs, Grid action,
                                                     std::vector<int> lookup)
    : obs_(std::move(obs)), action_(std::move(action)),
      lookup_(std::move(lookup)) {
  if (static_cast<int>(lookup_.size()) != obs_.cell_count()) {
    throw TeamError("deterministic lookup size mismatch");
  }
  for (int k : lookup_) {
    if (k < 0 || k >= action_.cell_count()) {
      throw TeamError("deterministic lookup index out of range");
    }
  }
}

DeterministicGridStrategy DeterministicGridStrategy::constant(
    Grid obs, Grid action, int action_index) {
  std::vector<int> lookup(obs.cell_count(), action_index);
  return {std::move(obs), std::move(action), std::move(lookup)};
}

Vec DeterministicGridStrategy::act(const Vec& y) const {
  return action_.center(lookup_[obs_.locate(y)]);
}

TabularStrategy::TabularStrategy(Grid obs, Mat actions)
    : obs_(std::move(obs)), actions_(std::move(actions)) {
  if (actions_.cols() != obs_.cell_count()) {
    throw TeamError("tabular strategy: one action column per obs cell");
  }
  if (!actions_.allFinite()) {
    throw NonFinite("tabular strategy has non-finite actions");
  }
}

TabularStrategy TabularStrategy::constant(Grid obs, Vec action) {
  Mat a(action.size(), obs.cell_count());
  a.colwise() = action;
  return {std::move(obs), std::move(a)};
}

LinearStrategy LinearStrategy::zero(int obs_dim, int action_dim) {
  return {Mat::Zero(action_dim, obs_dim), Vec::Zero(action_dim)};
}

LinearStrategy LinearStrategy::scalar(double gain_value, double offset_value) {
  return {Mat::Constant(1, 1, gain_value), Vec::Constant(1, offset_value)};
}

StrategyProfile StrategyProfile::zero_profile(const TeamSpec& spec) {
  StrategyProfile p;
  p.slots.resize(spec.num_agents);
  for (int i = 1; i <= spec.num_agents; ++i) {
    for (int t = 1; t <= spec.horizon; ++t) {
      const auto& slot = spec.slot(i, t);
      p.slots[i - 1].push_back(
          LinearStrategy::zero(slot.obs_space.dim, slot.action_space.dim));
    }
  }
  return p;
}

bool is_deterministic(const Strategy& s) {
  return !std::holds_alternative<BehavioralGridStrategy>(s);
}

Vec strategy_act(const Strategy& s, const Vec& y) {
  return std::visit(
      [&](const auto& impl) -> Vec {
        using T = std::decay_t<decltype(impl)>;
        if constexpr (std::is_same_v<T, BehavioralGridStrategy>) {
          throw TeamError("behavioral strategy has no deterministic action");
        } else {
          return impl.act(y);
        }
      },
      s);
}

BehavioralGridStrategy as_behavioral(const DeterministicGridStrategy& det) {
  Mat t = Mat::Zero(det.obs_grid().cell_count(),
                    det.action_grid().cell_count());
  for (int j = 0; j < t.rows(); ++j) t(j, det.lookup()[j]) = 1.0;
  return {det.obs_grid(), det.action_grid(), std::move(t)};
}

DeterministicGridStrategy determinize(const BehavioralGridStrategy& beh,
                                      const Mat& conditional_cost) {
  if (conditional_cost.rows() != beh.table().rows() ||
      conditional_cost.cols() != beh.table().cols()) {
    throw TeamError("determinize: conditional_cost shape mismatch");
  }
  if (!conditional_cost.allFinite()) {
    throw NonFinite("determinize: conditional_cost has non-finite entries");
  }
  std::vector<int> lookup(conditional_cost.rows());
  for (int j = 0; j < conditional_cost.rows(); ++j) {
    int best = 0;
    for (int k = 1; k < conditional_cost.cols(); ++k) {
      if (conditional_cost(j, k) < conditional_cost(j, best)) best = k;
    }
    lookup[j] = best;
  }
  return {beh.obs_grid(), beh.action_grid(), std::move(lookup)};
}

Mat induced_joint(const BehavioralGridStrategy& beh, const Vec& obs_measure) {
  if (obs_measure.size() != beh.table().rows()) {
    throw TeamError("induced_joint: obs_measure size mismatch");
  }
  double mass = obs_measure.sum();
  if (std::abs(mass - 1.0) > kRowTol) {
    throw TeamError("induced_joint: obs_measure does not sum to 1");
  }
  return obs_measure.asDiagonal() * beh.table();
}

namespace {

void write_action_header(std::ostream& os, const Grid& action) {
  for (int k = 0; k < action.cell_count(); ++k) {
    if (k) os << ",";
    Vec c = action.center(k);
    for (int d = 0; d < c.size(); ++d) {
      if (d) os << ";";
      os << c(d);
    }
  }
  os << "\n";
}

}  // namespace

void write_strategy_csv(std::ostream& os, const BehavioralGridStrategy& beh) {
  write_action_header(os, beh.action_grid());
  const Mat& t = beh.table();
  for (int j = 0; j < t.rows(); ++j) {
    for (int k = 0; k < t.cols(); ++k) {
      if (k) os << ",";
      os << t(j, k);
    }
    os << "\n";
  }
}

void write_strategy_csv(std::ostream& os, const DeterministicGridStrategy& d) {
  write_action_header(os, d.action_grid());
  for (int j = 0; j < d.obs_grid().cell_count(); ++j) {
    if (j) os << ",";
    os << d.lookup()[j];
  }
  os << "\n";
}

void write_strategy_csv(std::ostream& os, const TabularStrategy& tab) {
  const Mat& a = tab.actions();
  for (int j = 0; j < a.cols(); ++j) {
    for (int d = 0; d < a.rows(); ++d) {
      if (d) os << ";";
      os << a(d, j);
    }
    os << "\n";
  }
}

}  // namespace teamopt
