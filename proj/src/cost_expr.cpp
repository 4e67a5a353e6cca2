#include "teamopt/cost_expr.hpp"

#include <cmath>
#include <sstream>

namespace teamopt {

std::string var_name(const VarId& v) {
  std::ostringstream os;
  switch (v.kind) {
    case VarKind::X1: os << "x1"; break;
    case VarKind::W0: os << "w0_" << v.time; break;
    case VarKind::State: os << "x_" << v.time; break;
    case VarKind::Obs: os << "y_" << v.agent << "_" << v.time; break;
    case VarKind::Action: os << "u_" << v.agent << "_" << v.time; break;
  }
  return os.str();
}

const Vec& PointView::get(const VarId& v) const {
  auto it = values_.find(v);
  if (it == values_.end()) {
    throw TeamError("unbound variable " + var_name(v));
  }
  return it->second;
}

AffineMap AffineMap::scalar(double offset,
                            std::vector<std::pair<VarId, double>> lin) {
  AffineMap m{Vec::Constant(1, offset), {}};
  for (auto& [v, c] : lin) {
    m.terms.emplace_back(v, Mat::Constant(1, 1, c));
  }
  return m;
}

Vec AffineMap::eval(const PointView& p) const {
  Vec out = offset;
  for (const auto& [v, coef] : terms) {
    out.noalias() += coef * p.get(v);
  }
  return out;
}

AffineMap& AffineMap::add_term(const VarId& v, Mat coef) {
  if (coef.rows() != dim()) {
    throw TeamError("AffineMap term dimension mismatch for " + var_name(v));
  }
  terms.emplace_back(v, std::move(coef));
  return *this;
}

bool AffineMap::references(VarKind kind) const {
  for (const auto& [v, coef] : terms) {
    if (v.kind == kind) return true;
  }
  return false;
}

std::set<VarId> AffineMap::variables() const {
  std::set<VarId> out;
  for (const auto& [v, coef] : terms) out.insert(v);
  return out;
}

AffineMap AffineMap::substitute(const VarId& v, const AffineMap& by) const {
  AffineMap out{offset, {}};
  for (const auto& [w, coef] : terms) {
    if (w == v) {
      if (coef.cols() != by.dim()) {
        throw TeamError("substitute: dimension mismatch at " + var_name(v));
      }
      out.offset += coef * by.offset;
      for (const auto& [bv, bcoef] : by.terms) {
        out.terms.emplace_back(bv, coef * bcoef);
      }
    } else {
      out.terms.emplace_back(w, coef);
    }
  }
  return out;
}

double Expr::eval(const PointView& p) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Quadratic: {
      Vec d = lhs.eval(p) - rhs.eval(p);
      return d.dot(weight * d);
    }
    case Kind::Affine:
      return affine.eval(p)(0);
    case Kind::Exp:
      return std::exp(kids[0]->eval(p));
    case Kind::Sum: {
      double s = 0.0;
      for (const auto& k : kids) s += k->eval(p);
      return s;
    }
    case Kind::Product: {
      double s = 1.0;
      for (const auto& k : kids) s *= k->eval(p);
      return s;
    }
  }
  return 0.0;
}

std::set<VarId> Expr::variables() const {
  std::set<VarId> out;
  if (kind == Kind::Quadratic) {
    auto l = lhs.variables();
    auto r = rhs.variables();
    out.insert(l.begin(), l.end());
    out.insert(r.begin(), r.end());
  } else if (kind == Kind::Affine) {
    out = affine.variables();
  }
  for (const auto& k : kids) {
    auto kv = k->variables();
    out.insert(kv.begin(), kv.end());
  }
  return out;
}

bool Expr::references(VarKind k) const {
  for (const auto& v : variables()) {
    if (v.kind == k) return true;
  }
  return false;
}

ExprPtr Expr::substitute(const VarId& v, const AffineMap& by) const {
  auto out = std::make_shared<Expr>(*this);
  if (kind == Kind::Quadratic) {
    out->lhs = lhs.substitute(v, by);
    out->rhs = rhs.substitute(v, by);
  } else if (kind == Kind::Affine) {
    out->affine = affine.substitute(v, by);
  }
  for (auto& k : out->kids) k = k->substitute(v, by);
  return out;
}

namespace {

std::string affine_str(const AffineMap& a) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, coef] : a.terms) {
    if (!first) os << " + ";
    first = false;
    if (coef.rows() == 1 && coef.cols() == 1) {
      if (coef(0, 0) != 1.0) os << coef(0, 0) << "*";
      os << var_name(v);
    } else {
      os << "A*" << var_name(v);
    }
  }
  if (a.offset.size() == 1 && a.offset(0) != 0.0) {
    if (!first) os << " + ";
    os << a.offset(0);
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

}  // namespace

std::string Expr::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant:
      os << value;
      break;
    case Kind::Quadratic:
      os << "|" << affine_str(lhs) << " - (" << affine_str(rhs) << ")|^2";
      break;
    case Kind::Affine:
      os << affine_str(affine);
      break;
    case Kind::Exp:
      os << "exp(" << kids[0]->to_string() << ")";
      break;
    case Kind::Sum: {
      for (size_t i = 0; i < kids.size(); ++i) {
        if (i) os << " + ";
        os << kids[i]->to_string();
      }
      break;
    }
    case Kind::Product: {
      for (size_t i = 0; i < kids.size(); ++i) {
        if (i) os << " * ";
        os << "(" << kids[i]->to_string() << ")";
      }
      break;
    }
  }
  return os.str();
}

ExprPtr make_const(double c) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Constant;
  e->value = c;
  return e;
}

ExprPtr make_quad(AffineMap lhs, AffineMap rhs, Mat R) {
  if (lhs.dim() != rhs.dim()) {
    throw TeamError("quadratic form: lhs/rhs dimension mismatch");
  }
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Quadratic;
  if (R.size() == 0) R = Mat::Identity(lhs.dim(), lhs.dim());
  if (R.rows() != lhs.dim() || R.cols() != lhs.dim()) {
    throw TeamError("quadratic form: weight dimension mismatch");
  }
  Eigen::LLT<Mat> llt(R);
  if (llt.info() != Eigen::Success) {
    throw TeamError("quadratic form: weight not positive definite");
  }
  e->lhs = std::move(lhs);
  e->rhs = std::move(rhs);
  e->weight = std::move(R);
  return e;
}

ExprPtr make_affine(AffineMap a) {
  if (a.dim() != 1) throw TeamError("affine expression must be scalar");
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Affine;
  e->affine = std::move(a);
  return e;
}

ExprPtr make_exp(ExprPtr arg) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Exp;
  e->kids.push_back(std::move(arg));
  return e;
}

ExprPtr make_sum(std::vector<ExprPtr> kids) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Sum;
  e->kids = std::move(kids);
  return e;
}

ExprPtr make_product(std::vector<ExprPtr> kids) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Product;
  e->kids = std::move(kids);
  return e;
}

ExprPtr slot_quadratic_term(const ExprPtr& e, int agent, int time) {
  if (!e) return nullptr;
  if (e->kind == Expr::Kind::Sum) {
    for (const auto& k : e->kids) {
      if (ExprPtr q = slot_quadratic_term(k, agent, time)) return q;
    }
    return nullptr;
  }
  if (e->kind != Expr::Kind::Quadratic) return nullptr;
  if (e->lhs.terms.size() != 1) return nullptr;
  const auto& [v, coef] = e->lhs.terms[0];
  if (v.kind != VarKind::Action || v.agent != agent || v.time != time) {
    return nullptr;
  }
  if (!e->lhs.offset.isZero(0.0) || !coef.isIdentity(1e-14)) return nullptr;
  return e;
}

bool syntactically_nonnegative(const ExprPtr& e) {
  switch (e->kind) {
    case Expr::Kind::Constant:
      return e->value >= 0.0;
    case Expr::Kind::Quadratic:
    case Expr::Kind::Exp:
      return true;
    case Expr::Kind::Affine:
      return e->affine.terms.empty() && e->affine.offset(0) >= 0.0;
    case Expr::Kind::Sum:
    case Expr::Kind::Product: {
      for (const auto& k : e->kids) {
        if (!syntactically_nonnegative(k)) return false;
      }
      return true;
    }
  }
  return false;
}

}  // namespace teamopt
