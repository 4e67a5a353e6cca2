#include "teamopt/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace teamopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mvn_log_density(const Vec& d, const Mat& prec, double log_norm) {
  return log_norm - 0.5 * d.dot(prec * d);
}

// Tensor grid over a box: calls fn(point) for every node of a
// points-per-dim lattice (cell centers when centered, else including the
// endpoints). Guards the total node count.
void for_each_box_point(const SpaceSpec& box, int per_dim,
                        const std::function<void(const Vec&)>& fn) {
  int d = box.dim;
  double total = std::pow(static_cast<double>(per_dim), d);
  while (total > 2e5 && per_dim > 2) {
    --per_dim;
    total = std::pow(static_cast<double>(per_dim), d);
  }
  std::vector<int> idx(d, 0);
  Vec x(d);
  while (true) {
    for (int j = 0; j < d; ++j) {
      double f = per_dim == 1 ? 0.5 : static_cast<double>(idx[j]) / (per_dim - 1);
      x(j) = box.lower(j) + f * (box.upper(j) - box.lower(j));
    }
    fn(x);
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[j] < per_dim) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }
}

Vec uniform_in_box(const SpaceSpec& box, CounterRng& rng) {
  Vec x(box.dim);
  for (int j = 0; j < box.dim; ++j) {
    x(j) = box.lower(j) + rng.next_uniform() * (box.upper(j) - box.lower(j));
  }
  return x;
}

// Inverse standard normal CDF by bisection on erfc.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw TeamError("normal_quantile: p outside (0,1)");
  auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
  double lo = -40.0, hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// Condition C1
// ---------------------------------------------------------------------------

C1Kernel gaussian_c1_kernel(const Mat& cov, const SpaceSpec& a_box,
                            const SpaceSpec& y_box) {
  int d = static_cast<int>(cov.rows());
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success) {
    throw SingularNoise("gaussian_c1_kernel: covariance not positive definite");
  }
  Mat prec = llt.solve(Mat::Identity(d, d));
  double log_norm = -0.5 * (d * std::log(2.0 * M_PI) +
                            2.0 * Mat(llt.matrixL()).diagonal().array().log().sum());
  C1Kernel k;
  k.name = "gaussian";
  k.a_box = a_box;
  k.y_box = y_box;
  k.eta = [prec, log_norm](const Vec& a, const Vec& y) {
    return std::exp(mvn_log_density(y - a, prec, log_norm));
  };
  // h(a0, y) = max over the unit ball around a0 of ||d eta / d a||_2, with
  // d eta / d a = prec (y - a) eta. Scalar case is closed-form on the
  // interval (interior critical points at |y - a| = sigma); higher
  // dimensions take the max over a deterministic ball sample.
  if (d == 1) {
    double s2 = cov(0, 0);
    k.h = [s2, prec, log_norm](const Vec& a0, const Vec& y) {
      auto g = [&](double z) {
        Vec zv(1);
        zv << z;
        return std::abs(z) / s2 * std::exp(mvn_log_density(zv, prec, log_norm));
      };
      double lo = y(0) - a0(0) - 1.0, hi = y(0) - a0(0) + 1.0;
      double best = std::max(g(lo), g(hi));
      double sig = std::sqrt(s2);
      for (double z : {sig, -sig, 0.0}) {
        if (z > lo && z < hi) best = std::max(best, g(z));
      }
      return best;
    };
  } else {
    k.h = [d, prec, log_norm](const Vec& a0, const Vec& y) {
      double best = 0.0;
      CounterRng rng(0x5EED5A11ULL, 0);
      for (int s = 0; s < 256; ++s) {
        Vec u(d);
        for (int j = 0; j < d; ++j) u(j) = rng.next_gaussian();
        double r = std::pow(rng.next_uniform(), 1.0 / d) / std::max(u.norm(), 1e-300);
        Vec a = s == 0 ? Vec(a0) : Vec(a0 + r * u);
        Vec z = y - a;
        double val = (prec * z).norm() * std::exp(mvn_log_density(z, prec, log_norm));
        best = std::max(best, val);
      }
      return best;
    };
  }
  return k;
}

C1Kernel step_c1_kernel(const SpaceSpec& a_box, const SpaceSpec& y_box) {
  if (a_box.dim != 1 || y_box.dim != 1) {
    throw TeamError("step_c1_kernel: scalar boxes required");
  }
  C1Kernel k;
  k.name = "step";
  k.a_box = a_box;
  k.y_box = y_box;
  k.eta = [](const Vec& a, const Vec& y) { return y(0) > a(0) ? 1.0 : 0.0; };
  k.h = [](const Vec&, const Vec&) { return 1.0; };
  return k;
}

C1Report check_condition_c1(const C1Kernel& kernel, int grid_points,
                            std::vector<double> eps_ladder) {
  if (!kernel.h) throw NoVCFunction("check_condition_c1: kernel has no VC function");
  if (!kernel.eta) throw TeamError("check_condition_c1: kernel has no density");
  C1Report rep;
  rep.domain_note =
      "uniformity checked over the declared a box only; the definition "
      "quantifies over the full space";

  std::vector<Vec> a_pts, y_pts;
  for_each_box_point(kernel.a_box, grid_points,
                     [&](const Vec& a) { a_pts.push_back(a); });
  for_each_box_point(kernel.y_box, grid_points,
                     [&](const Vec& y) { y_pts.push_back(y); });
  std::size_t na = a_pts.size(), ny = y_pts.size();

  Mat eta(na, ny), h(na, ny);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      eta(i, j) = kernel.eta(a_pts[i], y_pts[j]);
      h(i, j) = kernel.h(a_pts[i], y_pts[j]);
    }
  }

  // sup over grid a of the trapezoid integral of h over the y box
  {
    double dvol = 1.0;
    for (int c = 0; c < kernel.y_box.dim; ++c) {
      int per = static_cast<int>(std::round(std::pow(double(ny), 1.0 / kernel.y_box.dim)));
      dvol *= (kernel.y_box.upper(c) - kernel.y_box.lower(c)) / std::max(per - 1, 1);
    }
    for (std::size_t i = 0; i < na; ++i) {
      rep.h_integral_bound = std::max(rep.h_integral_bound, h.row(i).sum() * dvol);
    }
  }

  double spacing = kInf;
  for (int c = 0; c < kernel.a_box.dim; ++c) {
    int per = static_cast<int>(std::round(std::pow(double(na), 1.0 / kernel.a_box.dim)));
    spacing = std::min(spacing, (kernel.a_box.upper(c) - kernel.a_box.lower(c)) /
                                    std::max(per - 1, 1));
  }
  double width = (kernel.a_box.upper - kernel.a_box.lower).norm();

  auto admissible = [&](double delta, double eps) {
    for (std::size_t i0 = 0; i0 < na; ++i0) {
      for (std::size_t i = 0; i < na; ++i) {
        if (i == i0 || (a_pts[i] - a_pts[i0]).norm() >= delta) continue;
        for (std::size_t j = 0; j < ny; ++j) {
          if (std::abs(eta(i, j) - eta(i0, j)) >= eps * h(i0, j)) return false;
        }
      }
    }
    return true;
  };

  rep.pass = true;
  for (double eps : eps_ladder) {
    C1Report::Rung rung;
    rung.eps = eps;
    // Halve from the box diameter down to 1.5x the grid spacing; smaller
    // deltas test no pairs and would pass vacuously, so they count as
    // failure.
    std::vector<double> deltas;
    for (double d0 = width; d0 > 1.5 * spacing; d0 *= 0.5) deltas.push_back(d0);
    deltas.push_back(1.5 * spacing);
    for (double delta : deltas) {
      if (admissible(delta, eps)) {
        rung.found = true;
        rung.delta = delta;
        break;
      }
    }
    if (!rung.found) rep.pass = false;
    rep.ladder.push_back(rung);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// IC class
// ---------------------------------------------------------------------------

int VarGroup::total_dim() const {
  int d = 0;
  for (const auto& [v, dim] : vars) d += dim;
  return d;
}

void VarGroup::bind(PointView& p, const Vec& point) const {
  int off = 0;
  for (const auto& [v, dim] : vars) {
    p.set(v, point.segment(off, dim));
    off += dim;
  }
}

namespace {

struct QuadRoute {
  ExprPtr quad;                   // the ||b - p(a)||^2_R factor
  std::vector<ExprPtr> factors;   // remaining nonnegative cofactors
  VarId b_var;
  AffineMap p;                    // target map over group-A variables
  double lambda_min = 1.0;
};

bool in_group(const VarGroup& g, const VarId& v) {
  for (const auto& [gv, dim] : g.vars) {
    if (gv == v) return true;
  }
  return false;
}

bool references_group(const ExprPtr& e, const VarGroup& g) {
  auto vars = e->variables();
  for (const auto& v : vars) {
    if (in_group(g, v)) return true;
  }
  return false;
}

// Recognizes f = (optional positive factors) * ||b - p(a)||^2_R with b the
// single group-B variable appearing with identity coefficient.
std::optional<QuadRoute> quadratic_route(const ExprPtr& f,
                                         const VarGroup& group_a,
                                         const VarGroup& group_b,
                                         const VarGroup& group_c) {
  if (group_b.vars.size() != 1) return std::nullopt;
  QuadRoute r;
  r.b_var = group_b.vars[0].first;
  ExprPtr quad;
  if (f->kind == Expr::Kind::Quadratic) {
    quad = f;
  } else if (f->kind == Expr::Kind::Product) {
    for (const auto& kid : f->kids) {
      if (kid->kind == Expr::Kind::Quadratic && references_group(kid, group_b) &&
          !quad) {
        quad = kid;
      } else if (!references_group(kid, group_b) &&
                 syntactically_nonnegative(kid)) {
        r.factors.push_back(kid);
      } else {
        return std::nullopt;
      }
    }
    if (!quad) return std::nullopt;
  } else {
    return std::nullopt;
  }
  // lhs must carry exactly the b variable with identity coefficient; every
  // other symbol on either side must be a group-A variable.
  AffineMap p = quad->rhs;
  p.offset -= quad->lhs.offset;
  bool saw_b = false;
  for (const auto& [v, coef] : quad->lhs.terms) {
    if (v == r.b_var) {
      if (saw_b || !coef.isIdentity(1e-12)) return std::nullopt;
      saw_b = true;
    } else if (in_group(group_a, v)) {
      p.add_term(v, -coef);
    } else {
      return std::nullopt;
    }
  }
  if (!saw_b) return std::nullopt;
  for (const auto& [v, coef] : quad->rhs.terms) {
    if (!in_group(group_a, v)) return std::nullopt;
  }
  (void)group_c;
  r.quad = quad;
  r.p = std::move(p);
  Eigen::SelfAdjointEigenSolver<Mat> es(quad->weight);
  r.lambda_min = es.eigenvalues().minCoeff();
  if (!(r.lambda_min > 0.0)) return std::nullopt;
  return r;
}

// Exact interval hull of an affine map over a box in the group-A layout.
void affine_hull(const AffineMap& p, const VarGroup& group_a,
                 const SpaceSpec& k_box, Vec& lo, Vec& hi) {
  int d = p.dim();
  Vec center = 0.5 * (k_box.lower + k_box.upper);
  Vec half = 0.5 * (k_box.upper - k_box.lower);
  PointView pv;
  group_a.bind(pv, center);
  Vec mid = p.eval(pv);
  Vec radius = Vec::Zero(d);
  for (const auto& [v, coef] : p.terms) {
    int off = 0;
    for (const auto& [gv, dim] : group_a.vars) {
      if (gv == v) break;
      off += dim;
    }
    radius += coef.cwiseAbs() * half.segment(off, static_cast<int>(coef.cols()));
  }
  lo = mid - radius;
  hi = mid + radius;
}

double eval_at(const ExprPtr& f, const VarGroup& ga, const Vec& a,
               const VarGroup& gb, const Vec& b, const VarGroup& gc,
               const Vec& c) {
  PointView p;
  ga.bind(p, a);
  gb.bind(p, b);
  if (gc.total_dim() > 0) gc.bind(p, c);
  return f->eval(p);
}

}  // namespace

ICReport check_ic_class(const ExprPtr& f, const VarGroup& group_a,
                        const VarGroup& group_b, const VarGroup& group_c,
                        const SpaceSpec& k_box, const SpaceSpec& c_box,
                        double m_target, const SpaceSpec& search_box) {
  if (group_b.total_dim() <= 0) {
    throw TeamError("check_ic_class: empty group B");
  }
  if (group_a.total_dim() > 0 && k_box.dim != group_a.total_dim()) {
    throw TeamError("check_ic_class: K box dimension mismatch");
  }
  ICReport rep;
  rep.m_target = m_target;
  rep.k_box = k_box;
  int bd = group_b.total_dim();

  Vec c_center = group_c.total_dim() > 0
                     ? Vec(0.5 * (c_box.lower + c_box.upper))
                     : Vec();

  auto sup_over_kc = [&](const Vec& b) {
    double best = -kInf;
    for_each_box_point(k_box, 9, [&](const Vec& a) {
      if (group_c.total_dim() > 0) {
        for_each_box_point(c_box, 9, [&](const Vec& c) {
          best = std::max(best, eval_at(f, group_a, a, group_b, b, group_c, c));
        });
      } else {
        best = std::max(best, eval_at(f, group_a, a, group_b, b, group_c, c_center));
      }
    });
    return best;
  };

  if (auto route = quadratic_route(f, group_a, group_b, group_c)) {
    // Grid lower bound of the positive cofactors over K x C (product
    // closure: inf of the product >= quad inf times the cofactor min).
    double factor_min = 1.0;
    if (!route->factors.empty()) {
      double fmin = kInf;
      auto probe = [&](const Vec& a, const Vec& c) {
        PointView p;
        group_a.bind(p, a);
        if (group_c.total_dim() > 0) group_c.bind(p, c);
        double prod = 1.0;
        for (const auto& g : route->factors) prod *= g->eval(p);
        fmin = std::min(fmin, prod);
      };
      for_each_box_point(k_box, 21, [&](const Vec& a) {
        if (group_c.total_dim() > 0) {
          for_each_box_point(c_box, 21, [&](const Vec& c) { probe(a, c); });
        } else {
          probe(a, c_center);
        }
      });
      factor_min = fmin;
    }
    if (factor_min > 0.0) {
      rep.factor_min = factor_min;
      double m_eff = m_target / factor_min;
      double rho = std::sqrt(m_eff / route->lambda_min) + 1.0;
      Vec lo, hi;
      affine_hull(route->p, group_a, k_box, lo, hi);
      rep.l_box = SpaceSpec::box(Vec(lo.array() - rho), Vec(hi.array() + rho));
      // Closed form: any b outside L has some coordinate at distance >= rho
      // from p(a) for every a in K, so the form is >= lambda_min rho^2.
      rep.certified_inf = factor_min * route->lambda_min * rho * rho;
      rep.analytic = true;
      rep.status = CertStatus::Certified;
      // spot-check the closed form on sampled boundary points
      CounterRng rng(0x1C0FFEEULL, 1);
      double sampled = kInf;
      for (int s = 0; s < 10000; ++s) {
        Vec a = uniform_in_box(k_box, rng);
        Vec b = uniform_in_box(rep.l_box, rng);
        int face = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(bd));
        b(face) = (rng.next_u64() & 1) ? rep.l_box.upper(face) : rep.l_box.lower(face);
        Vec c = group_c.total_dim() > 0 ? uniform_in_box(c_box, rng) : Vec();
        sampled = std::min(sampled, eval_at(f, group_a, a, group_b, b, group_c, c));
      }
      if (sampled < m_target - 1e-9) {
        rep.status = CertStatus::Inconclusive;
        rep.note = "boundary sample fell below M; analytic route rejected";
      } else {
        rep.note = "quadratic closed-form certificate";
      }
      return rep;
    }
  }

  // Generic route: growing boxes, then witness rays.
  double search_half = (search_box.upper - search_box.lower).maxCoeff() / 2.0;
  Vec b_center = 0.5 * (search_box.lower + search_box.upper);
  CounterRng rng(0xB0B0CA7ULL, 2);
  for (double r = 1.0; r <= search_half; r *= 2.0) {
    SpaceSpec cand = SpaceSpec::box(Vec(b_center.array() - r), Vec(b_center.array() + r));
    double worst = kInf;
    bool any = false;
    for (int s = 0; s < 10000 && worst >= m_target; ++s) {
      Vec b = uniform_in_box(search_box, rng);
      if ((b - b_center).cwiseAbs().maxCoeff() <= r) continue;  // inside L
      any = true;
      Vec a = uniform_in_box(k_box, rng);
      Vec c = group_c.total_dim() > 0 ? uniform_in_box(c_box, rng) : Vec();
      worst = std::min(worst, eval_at(f, group_a, a, group_b, b, group_c, c));
    }
    if (any && worst >= m_target) {
      rep.status = CertStatus::Certified;
      rep.l_box = cand;
      rep.certified_inf = worst;
      rep.note = "sampled-shell evidence (not a closed-form proof)";
      return rep;
    }
  }
  // Witness rays: +-axis directions, linear ladder to the search boundary.
  for (int axis = 0; axis < bd; ++axis) {
    for (double sign : {1.0, -1.0}) {
      std::vector<Vec> pts;
      std::vector<double> vals;
      bool escapes = true;
      for (int step = 1; step <= 8; ++step) {
        Vec b = b_center;
        b(axis) += sign * search_half * step / 8.0;
        double v = sup_over_kc(b);
        pts.push_back(b);
        vals.push_back(v);
        if (step > 5 && v >= m_target) escapes = false;
      }
      if (escapes && vals.back() < m_target) {
        rep.status = CertStatus::Witness;
        rep.witness_points.assign(pts.end() - 3, pts.end());
        rep.witness_values.assign(vals.end() - 3, vals.end());
        rep.note = "axis ray escapes below M";
        return rep;
      }
    }
  }
  rep.status = CertStatus::Inconclusive;
  rep.note = "search box exhausted without certificate or witness";
  return rep;
}

// ---------------------------------------------------------------------------
// Generalized Markov inequality
// ---------------------------------------------------------------------------

MarkovBound generalized_markov_bound(double e_phi_on_set, double p_estimate,
                                     double inf_phi_on_set) {
  if (!(inf_phi_on_set > 0.0)) {
    throw ZeroInfimum("generalized_markov_bound: inf over the set must be > 0");
  }
  MarkovBound b;
  b.expectation = e_phi_on_set;
  b.inf_phi = inf_phi_on_set;
  b.p_estimate = p_estimate;
  b.bound = e_phi_on_set / inf_phi_on_set;
  return b;
}

MarkovBound generalized_markov_bound(const std::vector<double>& phi_values,
                                     const std::vector<double>& weights,
                                     const std::vector<char>& in_set,
                                     double inf_phi_on_set) {
  if (phi_values.size() != weights.size() || phi_values.size() != in_set.size()) {
    throw TeamError("generalized_markov_bound: length mismatch");
  }
  double wsum = 0.0, e = 0.0, p = 0.0;
  for (std::size_t i = 0; i < phi_values.size(); ++i) {
    wsum += weights[i];
    if (in_set[i]) {
      e += weights[i] * phi_values[i];
      p += weights[i];
    }
  }
  if (!(wsum > 0.0)) throw TeamError("generalized_markov_bound: zero total weight");
  return generalized_markov_bound(e / wsum, p / wsum, inf_phi_on_set);
}

// ---------------------------------------------------------------------------
// Tightness
// ---------------------------------------------------------------------------

SpaceSpec gaussian_quantile_box(const NoiseSpec& law, double eps) {
  int d = law.dim();
  if (!(eps > 0.0 && eps < 1.0)) throw TeamError("gaussian_quantile_box: eps");
  double z = normal_quantile(1.0 - eps / (2.0 * d));
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    double s = std::sqrt(law.covariance(j, j));
    lo(j) = law.mean(j) - z * s;
    hi(j) = law.mean(j) + z * s;
  }
  return SpaceSpec::box(lo, hi);
}

TightnessCertificate tightness_sets(const ExprPtr& f, const VarGroup& group_a,
                                    const VarGroup& group_b,
                                    const VarGroup& group_c, double k,
                                    double eps, const SpaceSpec& base_tight,
                                    const SpaceSpec& c_box,
                                    const SpaceSpec& search_box) {
  TightnessCertificate cert;
  cert.eps = eps;
  cert.k = k;
  cert.m_level = k / eps;
  cert.k_box = base_tight;
  cert.ic = check_ic_class(f, group_a, group_b, group_c, base_tight, c_box,
                           cert.m_level, search_box);
  if (cert.ic.status != CertStatus::Certified) {
    throw Inconclusive("tightness_sets: IC certificate unavailable: " +
                       cert.ic.note);
  }
  cert.l_box = cert.ic.l_box;
  cert.phi_prefix_min = cert.ic.factor_min;
  cert.tail_bound = 2.0 * eps;
  return cert;
}

std::vector<TightnessCertificate> sequential_tightness(const ReducedTeam& rt,
                                                       double k, double eps) {
  const TeamSpec& spec = rt.spec;
  // Boxes for every exogenous symbol (quantile boxes) and, as the ladder
  // advances, each certified action box.
  std::map<VarId, SpaceSpec> boxes;
  std::map<VarId, int> dims;
  if (spec.x1) {
    boxes.emplace(var_x1(), gaussian_quantile_box(*spec.x1, eps));
    dims[var_x1()] = spec.x1->dim();
  }
  for (int t = 1; t <= spec.horizon; ++t) {
    if (spec.w0_dim(t) > 0) {
      boxes.emplace(var_w0(t), gaussian_quantile_box(spec.w0[t - 1], eps));
      dims[var_w0(t)] = spec.w0_dim(t);
    }
  }
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) {
      boxes.emplace(var_obs(i, t),
                    gaussian_quantile_box(rt.channel(i, t).noise, eps));
      dims[var_obs(i, t)] = rt.channel(i, t).noise.dim();
    }
  }

  std::vector<TightnessCertificate> ladder;
  for (int t = 1; t <= spec.horizon; ++t) {
    for (int i = 1; i <= spec.num_agents; ++i) {
      ExprPtr term = slot_quadratic_term(rt.primitive_cost.expr, i, t);
      if (!term) {
        throw FormMismatch("sequential_tightness: slot (" + std::to_string(i) +
                           "," + std::to_string(t) +
                           ") has no own-action quadratic term");
      }
      // phi prefix: this channel and all causally earlier ones; channels
      // with a constant hcheck contribute the constant factor exactly.
      std::vector<ExprPtr> factors{term};
      std::set<VarId> avars;
      for (const auto& v : term->variables()) {
        if (!(v.kind == VarKind::Action && v.agent == i && v.time == t)) {
          avars.insert(v);
        }
      }
      for (int s = 1; s <= t; ++s) {
        for (int j = 1; j <= spec.num_agents; ++j) {
          if (s == t && j > i) break;
          const Channel& ch = rt.channel(j, s);
          if (ch.hcheck.terms.empty() && ch.hcheck.offset.isZero(0.0)) {
            continue;  // phi identically one
          }
          ExprPtr phi = phi_expr(rt, j, s);
          factors.push_back(phi);
          for (const auto& v : phi->variables()) avars.insert(v);
        }
      }
      ExprPtr f = factors.size() == 1 ? factors[0]
                                      : make_product(std::move(factors));

      VarGroup ga, gb, gc;
      gb.vars.emplace_back(var_action(i, t), spec.slot(i, t).action_space.dim);
      std::vector<double> lo, hi;
      for (const auto& v : avars) {
        if (v.kind == VarKind::Action) {
          if (!strictly_precedes(v.agent, v.time, i, t)) {
            throw FormMismatch(
                "sequential_tightness: slot term references a non-causal "
                "action");
          }
          if (!boxes.count(v)) {
            throw Inconclusive(
                "sequential_tightness: predecessor action not yet certified");
          }
        } else if (!boxes.count(v)) {
          throw FormMismatch("sequential_tightness: unexpected variable " +
                             var_name(v));
        }
        const SpaceSpec& b = boxes.at(v);
        ga.vars.emplace_back(v, b.dim);
        for (int c = 0; c < b.dim; ++c) {
          lo.push_back(b.lower(c));
          hi.push_back(b.upper(c));
        }
      }
      SpaceSpec k_box =
          ga.vars.empty()
              ? SpaceSpec::box(-1.0, 1.0)  // unused: no group-A coordinates
              : SpaceSpec::box(Eigen::Map<Vec>(lo.data(), lo.size()),
                               Eigen::Map<Vec>(hi.data(), hi.size()));

      TightnessCertificate cert;
      cert.agent = i;
      cert.time = t;
      cert.eps = eps;
      cert.k = k;
      cert.m_level = k / eps;
      cert.k_box = boxes.at(var_obs(i, t));
      const SpaceSpec& declared = spec.slot(i, t).action_space;
      SpaceSpec search = SpaceSpec::box(Vec(declared.lower.array() - 1e9),
                                        Vec(declared.upper.array() + 1e9));
      cert.ic = check_ic_class(f, ga, gb, gc, k_box, SpaceSpec::box(-1.0, 1.0),
                               cert.m_level, search);
      if (cert.ic.status != CertStatus::Certified) {
        throw Inconclusive("sequential_tightness: rung (" + std::to_string(i) +
                           "," + std::to_string(t) + "): " + cert.ic.note);
      }
      cert.l_box = cert.ic.l_box;
      cert.phi_prefix_min = cert.ic.factor_min;
      cert.tail_bound = 2.0 * eps;
      for (int c = 0; c < declared.dim; ++c) {
        if (cert.l_box.lower(c) < declared.lower(c) ||
            cert.l_box.upper(c) > declared.upper(c)) {
          cert.extends_declared = true;
        }
      }
      boxes.emplace(var_action(i, t), cert.l_box);
      ladder.push_back(std::move(cert));
    }
  }
  return ladder;
}

TailEstimate empirical_tail(const ReducedTeam& rt,
                            const StrategyProfile& strategies,
                            const TightnessCertificate& cert,
                            std::uint64_t seed, std::size_t n) {
  const TeamSpec& spec = rt.spec;
  VarLayout layout = VarLayout::for_spec(spec);
  BranchWalker bw(spec, layout, strategies);
  PrimitiveDrawer drawer(spec, seed);
  std::vector<double> x(layout.total(), 0.0);
  auto in_box = [](const SpaceSpec& b, const double* p) {
    for (int c = 0; c < b.dim; ++c) {
      if (p[c] < b.lower(c) || p[c] > b.upper(c)) return false;
    }
    return true;
  };
  int y_off = layout.offset(var_obs(cert.agent, cert.time));
  int u_off = layout.offset(var_action(cert.agent, cert.time));
  std::size_t outside = 0;
  auto put = [&](const VarId& v, const Vec& value) {
    Eigen::Map<Vec>(x.data() + layout.offset(v), value.size()) = value;
  };
  for (std::size_t s = 0; s < n; ++s) {
    PrimitiveSample ps = drawer.draw(s);
    std::fill(x.begin(), x.end(), 0.0);
    if (ps.x1.size() > 0) put(var_x1(), ps.x1);
    for (int t = 1; t <= spec.horizon; ++t) {
      if (spec.w0_dim(t) > 0) put(var_w0(t), ps.w0[t - 1]);
      for (int i = 1; i <= spec.num_agents; ++i) {
        put(var_obs(i, t), ps.obs_noise[i - 1][t - 1]);
      }
    }
    bw.sample_actions(x.data(), seed ^ 0x7A117A11ULL, s);
    if (!in_box(cert.k_box, x.data() + y_off) ||
        !in_box(cert.l_box, x.data() + u_off)) {
      ++outside;
    }
  }
  TailEstimate est;
  est.fraction = static_cast<double>(outside) / static_cast<double>(n);
  est.stderr_ = std::sqrt(std::max(est.fraction * (1.0 - est.fraction), 1e-12) /
                          static_cast<double>(n));
  return est;
}

}  // namespace teamopt
