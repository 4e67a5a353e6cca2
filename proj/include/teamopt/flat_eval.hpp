#pragma once

#include <map>

#include "teamopt/reduction.hpp"

namespace teamopt {

// ---------------------------------------------------------------------------
// Flat evaluation
//
// The expression-tree API stores points in a map keyed by VarId, which is
// convenient but far too slow for tensor-quadrature branch sums. A VarLayout
// assigns every variable a contiguous slice of one double buffer; affine
// maps, cost expressions and phi channels are compiled once against the
// layout and then evaluated allocation-free.
// ---------------------------------------------------------------------------

class VarLayout {
 public:
  // Primitives, states (when defined), observations and actions of the team.
  static VarLayout for_spec(const TeamSpec& spec);

  void add(const VarId& v, int d);
  bool has(const VarId& v) const { return table_.count(v) > 0; }
  int offset(const VarId& v) const;
  int dim(const VarId& v) const;
  int total() const { return total_; }

  // Copy every bound variable of the layout from p into x (size total()).
  void load(const PointView& p, double* x) const;
  // Inverse: bind every layout variable from x into p.
  void store(const double* x, PointView& p) const;

 private:
  std::map<VarId, std::pair<int, int>> table_;  // var -> (offset, dim)
  int total_ = 0;
};

struct FlatAffine {
  Vec offset;
  struct Term {
    int src;
    Mat coef;
  };
  std::vector<Term> terms;

  static FlatAffine compile(const AffineMap& m, const VarLayout& layout);
  int dim() const { return static_cast<int>(offset.size()); }
  void eval_into(const double* x, double* out) const;
};

class FlatExpr {
 public:
  static FlatExpr compile(const ExprPtr& e, const VarLayout& layout);
  double eval(const double* x) const;

 private:
  Expr::Kind kind_ = Expr::Kind::Constant;
  double value_ = 0.0;
  FlatAffine lhs_, rhs_;  // Quadratic / Affine (lhs_ only)
  Mat weight_;
  bool weight_identity_ = false;
  std::vector<FlatExpr> kids_;
};

struct FlatChannel {
  int y_off = 0;
  int dim = 0;
  FlatAffine hcheck;
  Vec mean;
  Mat cov_inv;

  double log_phi(const double* x) const;
};

// Compiled reduced team: primitive cost plus phi channels in causal order.
struct FlatReduced {
  VarLayout layout;
  FlatExpr cost;
  std::vector<FlatChannel> channels;  // time-major, agent-minor

  static FlatReduced compile(const ReducedTeam& rt);
  double log_phi(const double* x) const;
  // Product over the first `count` channels in causal order.
  double log_phi_prefix(const double* x, int count) const;
  // c(x) * phi(x); throws NonFinite when the result is not finite.
  double cost_phi(const double* x) const;
};

}  // namespace teamopt
