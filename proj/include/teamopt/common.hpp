#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace teamopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct TeamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : TeamError {
  using TeamError::TeamError;
};

struct SingularNoise : ValidationError {
  using ValidationError::ValidationError;
};

struct NotReducible : TeamError {
  using TeamError::TeamError;
};

struct DimensionTooLarge : TeamError {
  using TeamError::TeamError;
};

struct NonFinite : TeamError {
  using TeamError::TeamError;
};

struct NonQuadratic : TeamError {
  using TeamError::TeamError;
};

struct FormMismatch : TeamError {
  using TeamError::TeamError;
};

struct Inconclusive : TeamError {
  using TeamError::TeamError;
};

struct ZeroInfimum : TeamError {
  using TeamError::TeamError;
};

struct NoVCFunction : TeamError {
  using TeamError::TeamError;
};

struct UnknownBenchmark : TeamError {
  using TeamError::TeamError;
};

// ---------------------------------------------------------------------------
// Counter-based random streams.
//
// Every sample index gets its own generator state derived from (seed, index)
// through splitmix64, so draws are bit-reproducible independently of batching
// or evaluation order.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t counter)
      : state_(splitmix64(seed ^ splitmix64(counter))) {}

  std::uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  // uniform in (0,1), never exactly 0 or 1
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  // Box-Muller; deterministic across platforms, unlike
  // std::normal_distribution.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Gauss-Hermite nodes for N(0,1): int f(x) N(x) dx ~= sum w_k f(x_k).
// ---------------------------------------------------------------------------

struct QuadratureRule {
  std::vector<double> nodes;    // standard-normal abscissae
  std::vector<double> weights;  // sum to 1
};

// Golub-Welsch via symmetric tridiagonal eigenproblem, rescaled so the rule
// integrates against the standard normal density.
QuadratureRule gauss_hermite(int order);

}  // namespace teamopt
