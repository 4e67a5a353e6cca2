#include <doctest.h>

#include "teamopt/cost_expr.hpp"

using namespace teamopt;

TEST_SUITE_BEGIN("cost_expr");

namespace {

PointView point(std::initializer_list<std::pair<VarId, double>> vals) {
  PointView p;
  for (const auto& [v, x] : vals) p.set(v, Vec::Constant(1, x));
  return p;
}

}  // namespace

TEST_CASE("affine map evaluates offset plus linear terms") {
  AffineMap m = AffineMap::scalar(
      1.5, {{var_x1(), 2.0}, {var_action(1, 1), -1.0}});
  PointView p = point({{var_x1(), 3.0}, {var_action(1, 1), 0.5}});
  CHECK(m.eval(p)(0) == doctest::Approx(1.5 + 6.0 - 0.5).epsilon(1e-15));
}

TEST_CASE("quadratic node is ||lhs - rhs||^2_R") {
  Mat R = Mat::Constant(1, 1, 2.0);
  ExprPtr q = make_quad(AffineMap::identity(var_action(1, 1), 1),
                        AffineMap::identity(var_obs(1, 1), 1), R);
  PointView p = point({{var_action(1, 1), 4.0}, {var_obs(1, 1), 1.0}});
  CHECK(q->eval(p) == doctest::Approx(2.0 * 9.0).epsilon(1e-15));
}

TEST_CASE("sum, product, exp and const compose") {
  ExprPtr e = make_sum(
      {make_const(1.0),
       make_product({make_const(2.0),
                     make_exp(make_affine(AffineMap::scalar(
                         0.0, {{var_x1(), 1.0}})))})});
  PointView p = point({{var_x1(), 0.5}});
  CHECK(e->eval(p) == doctest::Approx(1.0 + 2.0 * std::exp(0.5)));
}

TEST_CASE("substitution unrolls a one-step linear system") {
  // x2 = x1 + u1, cost x2^2 -> (x1 + u1)^2
  ExprPtr cost = make_quad(AffineMap::identity(var_state(2), 1),
                           AffineMap::zero(1));
  AffineMap dyn = AffineMap::scalar(
      0.0, {{var_x1(), 1.0}, {var_action(1, 1), 1.0}});
  ExprPtr unrolled = cost->substitute(var_state(2), dyn);
  CHECK_FALSE(unrolled->references(VarKind::State));
  for (double x : {-1.0, 0.0, 2.5}) {
    for (double u : {-0.5, 0.0, 3.0}) {
      PointView p = point({{var_x1(), x}, {var_action(1, 1), u}});
      CHECK(unrolled->eval(p) == doctest::Approx((x + u) * (x + u)));
    }
  }
}

TEST_CASE("variables reports every referenced leaf") {
  ExprPtr e = make_sum({make_quad(AffineMap::identity(var_action(2, 1), 1),
                                  AffineMap::identity(var_action(1, 1), 1)),
                        make_affine(AffineMap::scalar(
                            0.0, {{var_obs(1, 1), 3.0}}))});
  auto vars = e->variables();
  CHECK(vars.count(var_action(1, 1)) == 1);
  CHECK(vars.count(var_action(2, 1)) == 1);
  CHECK(vars.count(var_obs(1, 1)) == 1);
  CHECK(vars.count(var_x1()) == 0);
}

TEST_CASE("syntactic nonnegativity") {
  ExprPtr q = make_quad(AffineMap::identity(var_x1(), 1), AffineMap::zero(1));
  CHECK(syntactically_nonnegative(make_sum({q, make_const(2.0)})));
  CHECK(syntactically_nonnegative(make_product({q, make_exp(q)})));
  CHECK_FALSE(syntactically_nonnegative(make_const(-1.0)));
  CHECK_FALSE(syntactically_nonnegative(
      make_affine(AffineMap::scalar(0.0, {{var_x1(), 1.0}}))));
}

TEST_CASE("slot_quadratic_term extracts the per-slot summand") {
  ExprPtr cost = make_sum(
      {make_quad(AffineMap::identity(var_action(1, 1), 1),
                 AffineMap::identity(var_obs(1, 1), 1)),
       make_quad(AffineMap::identity(var_action(2, 1), 1),
                 AffineMap::identity(var_action(1, 1), 1))});
  ExprPtr t1 = slot_quadratic_term(cost, 1, 1);
  ExprPtr t2 = slot_quadratic_term(cost, 2, 1);
  REQUIRE(t1);
  REQUIRE(t2);
  PointView p = point({{var_obs(1, 1), 1.0},
                       {var_action(1, 1), 3.0},
                       {var_action(2, 1), 0.0}});
  CHECK(t1->eval(p) == doctest::Approx(4.0));
  CHECK(t2->eval(p) == doctest::Approx(9.0));
  CHECK(slot_quadratic_term(cost, 3, 1) == nullptr);
  CHECK(slot_quadratic_term(cost, 1, 2) == nullptr);
}

TEST_SUITE_END();
