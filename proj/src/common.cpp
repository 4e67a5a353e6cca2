#include "teamopt/common.hpp"

namespace teamopt {

namespace {

// Orthonormal probabilists' Hermite values p_0..p_{n}(x) and the derivative
// p_n'(x), by the stable three-term recurrence
//   sqrt(k+1) p_{k+1} = x p_k - sqrt(k) p_{k-1}.
void hermite_eval(int n, double x, double* p, double* dpn) {
  p[0] = 1.0;
  if (n >= 1) p[1] = x;
  for (int k = 1; k < n; ++k) {
    p[k + 1] =
        (x * p[k] - std::sqrt(static_cast<double>(k)) * p[k - 1]) /
        std::sqrt(static_cast<double>(k + 1));
  }
  // p_n' = sqrt(n) p_{n-1}
  *dpn = n >= 1 ? std::sqrt(static_cast<double>(n)) * p[n - 1] : 0.0;
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
  if (order < 1) throw TeamError("quadrature order must be >= 1");
  // Jacobi matrix of the probabilists' Hermite recurrence gives reliable
  // node estimates via Golub-Welsch ...
  Mat J = Mat::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    double b = std::sqrt(static_cast<double>(k));
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  if (es.info() != Eigen::Success) {
    throw TeamError("gauss_hermite: eigen decomposition failed");
  }
  // ... but the eigenvector-based weights lose relative accuracy in the
  // tails at higher orders, which matters whenever the integrand grows
  // exponentially (reweighting factors do). Polish each node by Newton on
  // the orthonormal polynomial and recompute the weight from the
  // Christoffel function, w_k = 1 / sum_j p_j(x_k)^2, which is accurate to
  // machine relative precision.
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  std::vector<double> p(order + 1);
  double wsum = 0.0;
  for (int k = 0; k < order; ++k) {
    double x = es.eigenvalues()(k);
    for (int it = 0; it < 8; ++it) {
      double dpn;
      hermite_eval(order, x, p.data(), &dpn);
      double step = p[order] / dpn;
      x -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
    }
    double dpn;
    hermite_eval(order, x, p.data(), &dpn);
    double s = 0.0;
    for (int j = 0; j < order; ++j) s += p[j] * p[j];
    rule.nodes[k] = x;
    rule.weights[k] = 1.0 / s;
    wsum += rule.weights[k];
  }
  // Enforce exact unit mass (the zeroth moment) after rounding.
  for (double& w : rule.weights) w /= wsum;
  return rule;
}

}  // namespace teamopt
