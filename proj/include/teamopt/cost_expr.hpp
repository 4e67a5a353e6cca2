#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teamopt/common.hpp"

namespace teamopt {

// ---------------------------------------------------------------------------
// Variables
//
// A team problem is written over a fixed set of vector-valued variables:
//   X1          initial state (a primitive)
//   W0(t)       common dynamics noise at step t (a primitive), t in 1..T
//   State(t)    system state at step t, t in 2..T+1 (defined by the dynamics)
//   Obs(i,t)    observation of agent i at step t
//   Action(i,t) action of agent i at step t
// ---------------------------------------------------------------------------

enum class VarKind { X1, W0, State, Obs, Action };

struct VarId {
  VarKind kind;
  int agent = 0;  // 1-based, Obs/Action only
  int time = 0;   // 1-based

  friend bool operator==(const VarId&, const VarId&) = default;
  friend auto operator<=>(const VarId& a, const VarId& b) {
    if (auto c = a.kind <=> b.kind; c != 0) return c;
    if (auto c = a.time <=> b.time; c != 0) return c;
    return a.agent <=> b.agent;
  }
};

inline VarId var_x1() { return {VarKind::X1, 0, 0}; }
inline VarId var_w0(int t) { return {VarKind::W0, 0, t}; }
inline VarId var_state(int t) { return {VarKind::State, 0, t}; }
inline VarId var_obs(int i, int t) { return {VarKind::Obs, i, t}; }
inline VarId var_action(int i, int t) { return {VarKind::Action, i, t}; }

std::string var_name(const VarId& v);

// Assignment of concrete values to variables during evaluation.
class PointView {
 public:
  void set(const VarId& v, Vec value) { values_[v] = std::move(value); }
  const Vec& get(const VarId& v) const;
  bool has(const VarId& v) const { return values_.count(v) > 0; }

 private:
  std::map<VarId, Vec> values_;
};

// ---------------------------------------------------------------------------
// AffineMap: offset + sum_k coef_k * var_k.
//
// The closed catalog of dynamics, observation and target maps. Closure under
// substitution keeps unrolled costs inside the catalog.
// ---------------------------------------------------------------------------

struct AffineMap {
  Vec offset;  // also fixes the output dimension
  std::vector<std::pair<VarId, Mat>> terms;

  static AffineMap constant(Vec c) { return {std::move(c), {}}; }
  static AffineMap zero(int dim) { return {Vec::Zero(dim), {}}; }
  static AffineMap identity(const VarId& v, int dim) {
    AffineMap m{Vec::Zero(dim), {}};
    m.terms.emplace_back(v, Mat::Identity(dim, dim));
    return m;
  }
  // scalar helper: offset + sum coef*var for 1-d variables
  static AffineMap scalar(double offset,
                          std::vector<std::pair<VarId, double>> lin);

  int dim() const { return static_cast<int>(offset.size()); }
  Vec eval(const PointView& p) const;
  AffineMap& add_term(const VarId& v, Mat coef);
  bool references(VarKind kind) const;
  std::set<VarId> variables() const;

  // Replace every occurrence of `v` by the affine map `by` (dim-checked).
  AffineMap substitute(const VarId& v, const AffineMap& by) const;
};

// ---------------------------------------------------------------------------
// CostExpr: a serializable scalar expression tree.
//
// Node kinds: constant, quadratic form ||lhs - rhs||^2_R over affine maps
// (variable references and affine maps are the degenerate cases), exp of a
// child, and n-ary sums and products.
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { Constant, Quadratic, Affine, Exp, Sum, Product };

  Kind kind;
  double value = 0.0;           // Constant
  AffineMap lhs, rhs;           // Quadratic
  Mat weight;                   // Quadratic: R, positive definite
  AffineMap affine;             // Affine (must be 1-dimensional)
  std::vector<ExprPtr> kids;    // Exp (1 child), Sum, Product

  double eval(const PointView& p) const;
  std::set<VarId> variables() const;
  bool references(VarKind kind) const;
  ExprPtr substitute(const VarId& v, const AffineMap& by) const;
  std::string to_string() const;
};

ExprPtr make_const(double c);
// ||lhs - rhs||^2_R; R defaults to identity
ExprPtr make_quad(AffineMap lhs, AffineMap rhs, Mat R = Mat());
ExprPtr make_affine(AffineMap a);
ExprPtr make_exp(ExprPtr arg);
ExprPtr make_sum(std::vector<ExprPtr> kids);
ExprPtr make_product(std::vector<ExprPtr> kids);

// True if the tree is non-negative by construction (sums/products of
// quadratics, exps, and non-negative constants).
bool syntactically_nonnegative(const ExprPtr& e);

// The ||u^i_t - p(.)||^2_R summand of a cost written as a (nested) sum;
// nullptr when the slot has no such term. The quadratic must have exactly
// the slot's action with identity coefficient and zero offset on its lhs.
ExprPtr slot_quadratic_term(const ExprPtr& e, int agent, int time);

}  // namespace teamopt
