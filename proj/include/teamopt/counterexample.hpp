#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>
#include <string>
#include <vector>

#include "teamopt/common.hpp"

namespace teamopt {

// ---------------------------------------------------------------------------
// Observation-sharing counterexample: two agents observe independent
// uniform[0,1] variables, agent 1 also sees agent 2's observation, actions
// are binary, and the cost is c = u1 (1 - u2). The dyadic strategies
//   u1 = h_n(y1) h_n(y2),  u2 = h_n(y2)
// have cost exactly 0 for every n, while the weak* limit of the joint
// measures prices the product of the limit marginals at exactly 1/8.
// All integrals here are exact rationals over dyadic cells.
// ---------------------------------------------------------------------------

using Rational = boost::rational<boost::multiprecision::cpp_int>;

// Level-n dyadic strategy h_n(y) = 1 iff floor(2^n y) is even; the level
// set A_n = {1} together with the even dyadic cells has measure 1/2.
struct DyadicStrategy {
  int n = 1;  // invariant: n >= 1

  explicit DyadicStrategy(int level);
};

// h_n at y, with h_n(1) = 1 (the point {1} belongs to A_n). Throws
// std::domain_error outside [0, 1] and TeamError for n < 1.
int h_n_eval(int n, const Rational& y);
int h_n_eval(int n, double y);

// Lebesgue measure of A_n: exactly 1/2 for every n.
Rational a_n_measure(int n);

// int_{A_n} y^p dy by closed-form dyadic power sums, exact for p <= 3.
Rational a_n_moment(int n, int p);

// Exact team cost of the level-n strategy pair: identically zero, because
// the integrand is h_n(y1) h_n(y2) (1 - h_n(y2)).
Rational sequence_cost(int n);

// Exact action marginals of the level-n pair: P(U1 = 1) = 1/4 and
// P(U2 = 1) = 1/2 for every n.
Rational p_u1_one(int n);
Rational p_u2_one(int n);

struct LimitReport {
  Rational limit_cost;  // 1/8
  // (action value, probability) tables of the weak* limit marginals
  std::vector<std::pair<int, Rational>> marginal_u1;  // {(0,3/4), (1,1/4)}
  std::vector<std::pair<int, Rational>> marginal_u2;  // {(0,1/2), (1,1/2)}
};

LimitReport limit_cost_and_marginals();

// Weak* gap table: for each n up to n_max, the gap |int g dmu_n - int g
// dmu_0| for a catalog of polynomial test functions (degree <= 3 and
// products) on the per-agent joints, plus the full-joint gap with g = c,
// which is exactly 1/8 at every n.
struct WeakLimitReport {
  std::vector<std::string> names;  // catalog labels, one per gap column
  struct Row {
    int n = 0;
    Rational sequence_cost;  // 0
    Rational p_u1;           // 1/4
    Rational p_u2;           // 1/2
    std::vector<Rational> gaps;  // per catalog entry; shrink to 0 in n
    Rational full_joint_gap;     // 1/8
  };
  std::vector<Row> rows;
};

// n_max <= 40 (exactness guard; everything is closed-form, not enumerated).
WeakLimitReport weak_limit_report(int n_max);

}  // namespace teamopt
