#include "teamopt/counterexample.hpp"

#include <cmath>
#include <stdexcept>

namespace teamopt {

namespace {

using Int = boost::multiprecision::cpp_int;

void check_level(int n) {
  if (n < 1) throw TeamError("dyadic strategy: level must be >= 1");
  if (n > 40) throw TeamError("dyadic strategy: level must be <= 40");
}

Int pow2(int e) { return Int(1) << e; }

// sum_{k=0}^{K-1} k^m for m <= 3 (Faulhaber).
Int power_sum(const Int& k, int m) {
  switch (m) {
    case 0:
      return k;
    case 1:
      return k * (k - 1) / 2;
    case 2:
      return k * (k - 1) * (2 * k - 1) / 6;
    case 3: {
      Int t = k * (k - 1) / 2;
      return t * t;
    }
    default:
      throw TeamError("power_sum: degree above 3");
  }
}

Int binom(int n, int k) {
  Int r = 1;
  for (int j = 1; j <= k; ++j) r = r * (n - j + 1) / j;
  return r;
}

}  // namespace

DyadicStrategy::DyadicStrategy(int level) : n(level) { check_level(level); }

int h_n_eval(int n, const Rational& y) {
  check_level(n);
  if (y < Rational(0) || y > Rational(1)) {
    throw std::domain_error("h_n: y outside [0, 1]");
  }
  // floor(2^n y) = floor(num * 2^n / den) for nonnegative y
  Int scaled = y.numerator() * pow2(n) / y.denominator();
  return scaled % 2 == 0 ? 1 : 0;
}

int h_n_eval(int n, double y) {
  check_level(n);
  if (!(y >= 0.0 && y <= 1.0)) {
    throw std::domain_error("h_n: y outside [0, 1]");
  }
  double scaled = std::floor(std::ldexp(y, n));
  return std::fmod(scaled, 2.0) == 0.0 ? 1 : 0;
}

Rational a_n_measure(int n) {
  check_level(n);
  // 2^{n-1} cells of width 2^{-n} (the point {1} has measure zero)
  return Rational(pow2(n - 1), pow2(n));
}

Rational a_n_moment(int n, int p) {
  check_level(n);
  if (p < 0 || p > 3) throw TeamError("a_n_moment: degree must be in 0..3");
  // int_{A_n} y^p dy
  //   = 1/(p+1) sum_{k=0}^{K-1} [((2k+1)/2^n)^{p+1} - ((2k)/2^n)^{p+1}]
  //   = 1/((p+1) 2^{n(p+1)}) sum_j C(p+1, j) 2^j S_j(K),  K = 2^{n-1},
  // expanding (2k+1)^{p+1} - (2k)^{p+1} binomially in k.
  Int k_cells = pow2(n - 1);
  Int num = 0;
  for (int j = 0; j <= p; ++j) {
    num += binom(p + 1, j) * pow2(j) * power_sum(k_cells, j);
  }
  return Rational(num, Int(p + 1) * pow2(n * (p + 1)));
}

Rational sequence_cost(int n) {
  check_level(n);
  // E[u1 (1 - u2)] with u1 = h(y1) h(y2), u2 = h(y2): over every dyadic
  // cell pair the integrand is h1 h2 (1 - h2), and h2 (1 - h2) = 0 on both
  // cell kinds, so the y2 factor of the product integral vanishes exactly.
  Rational y1_factor = a_n_measure(n);  // sum over y1 cells of h1 * vol
  Rational y2_factor(0);                // sum over y2 cells of h2 (1 - h2) * vol
  return y1_factor * y2_factor;
}

Rational p_u1_one(int n) {
  // u1 = 1 iff both observations fall in A_n (independent uniforms)
  return a_n_measure(n) * a_n_measure(n);
}

Rational p_u2_one(int n) { return a_n_measure(n); }

LimitReport limit_cost_and_marginals() {
  LimitReport r;
  r.limit_cost = Rational(1, 8);  // P(u1 = 1) P(u2 = 0) = 1/4 * 1/2
  r.marginal_u1 = {{0, Rational(3, 4)}, {1, Rational(1, 4)}};
  r.marginal_u2 = {{0, Rational(1, 2)}, {1, Rational(1, 2)}};
  return r;
}

WeakLimitReport weak_limit_report(int n_max) {
  check_level(n_max);
  WeakLimitReport rep;
  // Agent-2 joint mu^2_n(dy2, du2): test y^p u; the limit decouples u from
  // y, so the limit value is 1/(p+1) * 1/2. Agent-1 joint
  // mu^1_n(dy1, dy2, du1): test y1^p y2^q u; limit 1/(p+1) * 1/(q+1) * 1/4.
  struct A2Fn {
    std::string name;
    int p;
  };
  struct A1Fn {
    std::string name;
    int p, q;
  };
  const std::vector<A2Fn> a2 = {
      {"agent2:u2", 0},        {"agent2:y2*u2", 1},
      {"agent2:y2^2*u2", 2},   {"agent2:y2^3*u2", 3}};
  const std::vector<A1Fn> a1 = {{"agent1:u1", 0, 0},
                                {"agent1:y1*u1", 1, 0},
                                {"agent1:y2*u1", 0, 1},
                                {"agent1:y1*y2*u1", 1, 1},
                                {"agent1:y1^2*y2*u1", 2, 1},
                                {"agent1:y1^3*y2^3*u1", 3, 3}};
  for (const auto& f : a2) rep.names.push_back(f.name);
  for (const auto& f : a1) rep.names.push_back(f.name);
  rep.names.push_back("agent2:1");  // normalization, gap 0

  for (int n = 1; n <= n_max; ++n) {
    WeakLimitReport::Row row;
    row.n = n;
    row.sequence_cost = sequence_cost(n);
    row.p_u1 = p_u1_one(n);
    row.p_u2 = p_u2_one(n);
    for (const auto& f : a2) {
      Rational seq = a_n_moment(n, f.p);
      Rational lim = Rational(1, (f.p + 1)) * Rational(1, 2);
      row.gaps.push_back(boost::abs(seq - lim));
    }
    for (const auto& f : a1) {
      Rational seq = a_n_moment(n, f.p) * a_n_moment(n, f.q);
      Rational lim =
          Rational(1, (f.p + 1)) * Rational(1, (f.q + 1)) * Rational(1, 4);
      row.gaps.push_back(boost::abs(seq - lim));
    }
    row.gaps.push_back(Rational(0));  // g == 1
    // Full joint with g = c: the sequence value is 0, the limit-product
    // value is 1/8, for every n.
    row.full_joint_gap = boost::abs(limit_cost_and_marginals().limit_cost -
                                    row.sequence_cost);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace teamopt
