#include "teamopt/flat_eval.hpp"

#include <cmath>

namespace teamopt {

VarLayout VarLayout::for_spec(const TeamSpec& spec) {
  VarLayout layout;
  if (spec.x1_dim() > 0) {
    layout.add(var_x1(), spec.x1_dim());
    layout.add(var_state(1), spec.x1_dim());
  }
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) layout.add(var_w0(t), spec.w0_dim(t));
  }
  for (int t = 2; t <= spec.horizon + 1; ++t) {
    if (static_cast<int>(spec.dynamics.size()) >= t - 1) {
      layout.add(var_state(t), spec.dynamics[t - 2].dim());
    }
  }
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) {
      const auto& slot = spec.slot(i, t);
      layout.add(var_obs(i, t), slot.obs_space.dim);
      layout.add(var_action(i, t), slot.action_space.dim);
    }
  }
  return layout;
}

void VarLayout::add(const VarId& v, int d) {
  if (d < 1) throw TeamError("layout: variable dimension must be >= 1");
  if (table_.count(v)) throw TeamError("layout: duplicate variable");
  table_[v] = {total_, d};
  total_ += d;
}

int VarLayout::offset(const VarId& v) const {
  auto it = table_.find(v);
  if (it == table_.end()) {
    throw TeamError("layout: unknown variable " + var_name(v));
  }
  return it->second.first;
}

int VarLayout::dim(const VarId& v) const {
  auto it = table_.find(v);
  if (it == table_.end()) {
    throw TeamError("layout: unknown variable " + var_name(v));
  }
  return it->second.second;
}

void VarLayout::load(const PointView& p, double* x) const {
  for (const auto& [v, slot] : table_) {
    if (!p.has(v)) continue;
    const Vec& val = p.get(v);
    if (val.size() != slot.second) {
      throw TeamError("layout load: dimension mismatch for " + var_name(v));
    }
    for (int k = 0; k < slot.second; ++k) x[slot.first + k] = val(k);
  }
}

void VarLayout::store(const double* x, PointView& p) const {
  for (const auto& [v, slot] : table_) {
    Vec val(slot.second);
    for (int k = 0; k < slot.second; ++k) val(k) = x[slot.first + k];
    p.set(v, std::move(val));
  }
}

FlatAffine FlatAffine::compile(const AffineMap& m, const VarLayout& layout) {
  FlatAffine f;
  f.offset = m.offset;
  for (const auto& [v, coef] : m.terms) {
    if (coef.rows() != m.dim() || coef.cols() != layout.dim(v)) {
      throw TeamError("flat affine: coefficient shape mismatch for " +
                      var_name(v));
    }
    f.terms.push_back({layout.offset(v), coef});
  }
  return f;
}

void FlatAffine::eval_into(const double* x, double* out) const {
  const int d = dim();
  for (int r = 0; r < d; ++r) out[r] = offset(r);
  for (const auto& term : terms) {
    const int cols = static_cast<int>(term.coef.cols());
    for (int r = 0; r < d; ++r) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc += term.coef(r, c) * x[term.src + c];
      out[r] += acc;
    }
  }
}

namespace {
constexpr int kMaxAffineDim = 32;
}

FlatExpr FlatExpr::compile(const ExprPtr& e, const VarLayout& layout) {
  if (!e) throw TeamError("flat expr: null expression");
  FlatExpr f;
  f.kind_ = e->kind;
  switch (e->kind) {
    case Expr::Kind::Constant:
      f.value_ = e->value;
      break;
    case Expr::Kind::Quadratic:
      f.lhs_ = FlatAffine::compile(e->lhs, layout);
      f.rhs_ = FlatAffine::compile(e->rhs, layout);
      f.weight_ = e->weight;
      f.weight_identity_ = e->weight.isIdentity(0.0);
      if (f.lhs_.dim() > kMaxAffineDim) {
        throw TeamError("flat expr: quadratic dimension too large");
      }
      break;
    case Expr::Kind::Affine:
      f.lhs_ = FlatAffine::compile(e->affine, layout);
      break;
    case Expr::Kind::Exp:
    case Expr::Kind::Sum:
    case Expr::Kind::Product:
      for (const auto& k : e->kids) {
        f.kids_.push_back(FlatExpr::compile(k, layout));
      }
      break;
  }
  return f;
}

double FlatExpr::eval(const double* x) const {
  switch (kind_) {
    case Expr::Kind::Constant:
      return value_;
    case Expr::Kind::Quadratic: {
      double a[kMaxAffineDim], b[kMaxAffineDim];
      const int d = lhs_.dim();
      lhs_.eval_into(x, a);
      rhs_.eval_into(x, b);
      for (int k = 0; k < d; ++k) a[k] -= b[k];
      if (weight_identity_) {
        double q = 0.0;
        for (int k = 0; k < d; ++k) q += a[k] * a[k];
        return q;
      }
      double q = 0.0;
      for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) q += a[r] * weight_(r, c) * a[c];
      }
      return q;
    }
    case Expr::Kind::Affine: {
      double a[kMaxAffineDim];
      lhs_.eval_into(x, a);
      return a[0];
    }
    case Expr::Kind::Exp:
      return std::exp(kids_[0].eval(x));
    case Expr::Kind::Sum: {
      double s = 0.0;
      for (const auto& k : kids_) s += k.eval(x);
      return s;
    }
    case Expr::Kind::Product: {
      double s = 1.0;
      for (const auto& k : kids_) s *= k.eval(x);
      return s;
    }
  }
  throw TeamError("flat expr: unknown node kind");
}

double FlatChannel::log_phi(const double* x) const {
  double h[kMaxAffineDim];
  hcheck.eval_into(x, h);
  // -1/2 [ (y-h-m)' S (y-h-m) - (y-m)' S (y-m) ], S = covariance inverse
  double q_shift = 0.0, q_base = 0.0;
  for (int r = 0; r < dim; ++r) {
    double dr_s = x[y_off + r] - h[r] - mean(r);
    double dr_b = x[y_off + r] - mean(r);
    double acc_s = 0.0, acc_b = 0.0;
    for (int c = 0; c < dim; ++c) {
      acc_s += cov_inv(r, c) * (x[y_off + c] - h[c] - mean(c));
      acc_b += cov_inv(r, c) * (x[y_off + c] - mean(c));
    }
    q_shift += dr_s * acc_s;
    q_base += dr_b * acc_b;
  }
  return -0.5 * (q_shift - q_base);
}

FlatReduced FlatReduced::compile(const ReducedTeam& rt) {
  FlatReduced f;
  f.layout = VarLayout::for_spec(rt.spec);
  f.cost = FlatExpr::compile(rt.primitive_cost.expr, f.layout);
  for (int t = 1; t <= rt.spec.horizon; ++t) {
    for (int i = 1; i <= rt.spec.num_agents; ++i) {
      const Channel& ch = rt.channel(i, t);
      FlatChannel fc;
      fc.y_off = f.layout.offset(var_obs(i, t));
      fc.dim = ch.noise.dim();
      if (fc.dim > kMaxAffineDim) {
        throw TeamError("flat channel: dimension too large");
      }
      fc.hcheck = FlatAffine::compile(ch.hcheck, f.layout);
      fc.mean = ch.noise.mean;
      Mat L = ch.noise.cholesky();
      fc.cov_inv = L.transpose().triangularView<Eigen::Upper>().solve(
          L.triangularView<Eigen::Lower>().solve(
              Mat::Identity(fc.dim, fc.dim)));
      f.channels.push_back(std::move(fc));
    }
  }
  return f;
}

double FlatReduced::log_phi(const double* x) const {
  return log_phi_prefix(x, static_cast<int>(channels.size()));
}

double FlatReduced::log_phi_prefix(const double* x, int count) const {
  double s = 0.0;
  for (int k = 0; k < count; ++k) s += channels[k].log_phi(x);
  return s;
}

double FlatReduced::cost_phi(const double* x) const {
  double v = cost.eval(x) * std::exp(log_phi(x));
  if (!std::isfinite(v)) {
    throw NonFinite("cost * phi is not finite at an evaluation point");
  }
  return v;
}

}  // namespace teamopt
