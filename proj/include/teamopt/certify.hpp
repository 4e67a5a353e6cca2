#pragma once

#include <functional>

#include "teamopt/optimize.hpp"
#include "teamopt/reduction.hpp"

namespace teamopt {

// ---------------------------------------------------------------------------
// Condition C1: regular observation kernels
//
// A kernel is a density y |-> eta(a, y) against Lebesgue measure on the
// declared y box, together with a variation-control function h(a0, y): the
// check searches, for each epsilon, a delta such that
//   |eta(a, y) - eta(a0, y)| < epsilon * h(a0, y)
// whenever |a - a0| < delta, uniformly over the declared a box.
// ---------------------------------------------------------------------------

struct C1Kernel {
  std::string name;
  SpaceSpec a_box;
  SpaceSpec y_box;
  std::function<double(const Vec& a, const Vec& y)> eta;
  // Variation-control function; empty signals NoVCFunction.
  std::function<double(const Vec& a0, const Vec& y)> h;
};

// Additive Gaussian kernel y = a + w, w ~ N(0, cov), with the analytic
// control function h(a0, y) = max_{|a - a0| <= 1} ||d eta / d a||_2.
C1Kernel gaussian_c1_kernel(const Mat& cov, const SpaceSpec& a_box,
                            const SpaceSpec& y_box);
// Discontinuous step kernel eta(a, y) = 1{y > a} on scalar boxes (a known
// failing case; h = 1).
C1Kernel step_c1_kernel(const SpaceSpec& a_box, const SpaceSpec& y_box);

struct C1Report {
  struct Rung {
    double eps = 0.0;
    double delta = 0.0;  // admissible delta found (0 when none)
    bool found = false;
  };
  bool pass = false;
  std::vector<Rung> ladder;
  double h_integral_bound = 0.0;  // estimate of sup_a int h(a, .) dy
  // The definition quantifies over all of A; the check covers only the
  // declared box, and says so.
  std::string domain_note;
};

// For each epsilon in the ladder, halve delta from the box width down to the
// grid spacing until the inequality holds on every tested grid pair; a delta
// below the grid spacing tests no pairs and counts as failure, never as a
// vacuous pass. Throws NoVCFunction when the kernel has no h.
C1Report check_condition_c1(const C1Kernel& kernel, int grid_points = 201,
                            std::vector<double> eps_ladder = {0.5, 0.25, 0.1,
                                                              0.05});

// ---------------------------------------------------------------------------
// IC class: coercivity of a cost slice in its group-B variables
// ---------------------------------------------------------------------------

// Variables with their dimensions, concatenated in order into box coords.
struct VarGroup {
  std::vector<std::pair<VarId, int>> vars;

  int total_dim() const;
  // writes the flat box point into the view
  void bind(PointView& p, const Vec& point) const;
};

enum class CertStatus { Certified, Witness, Inconclusive };

struct ICReport {
  CertStatus status = CertStatus::Inconclusive;
  double m_target = 0.0;        // required infimum level M
  SpaceSpec k_box;              // compact set K in the group-A variables
  SpaceSpec l_box;              // certified compact set L (Certified only)
  double certified_inf = 0.0;   // analytic/sampled inf over K x L-complement
  bool analytic = false;        // quadratic closed-form route
  double factor_min = 1.0;      // grid lower bound of a positive cofactor
  std::vector<Vec> witness_points;   // group-B points escaping to infinity
  std::vector<double> witness_values;  // sup over K x C of f at those points
  std::string note;
};

// Checks membership of f in IC(A, B): for the given M and compact K, find a
// compact box L in the B variables with inf over K x L-complement x C >= M.
//
// Quadratic route (exact): when f is ||b - p(a)||^2_R, optionally times
// positive factors free of b, L is the interval hull of p over K inflated by
// rho = sqrt(M' / lambda_min(R)) + 1 with M' = M / (factor lower bound), and
// the certified infimum lambda_min * rho^2 * factor_min >= M is closed-form.
// Generic route: grow candidate boxes up to search_box, sampling shell
// points; when every box fails, probe rays to the search boundary for a
// witness sequence with sup over K x C below M. Returns Inconclusive status
// when neither succeeds.
ICReport check_ic_class(const ExprPtr& f, const VarGroup& group_a,
                        const VarGroup& group_b, const VarGroup& group_c,
                        const SpaceSpec& k_box, const SpaceSpec& c_box,
                        double m_target, const SpaceSpec& search_box);

// ---------------------------------------------------------------------------
// Generalized Markov inequality: P(A) <= E[phi 1_A] / inf_A phi
// ---------------------------------------------------------------------------

struct MarkovBound {
  double bound = 0.0;        // expectation / inf
  double p_estimate = 0.0;   // weighted frequency of A
  double expectation = 0.0;  // E[phi 1_A]
  double inf_phi = 0.0;
};

// Exact-moment form. Throws ZeroInfimum unless inf_phi_on_set > 0.
MarkovBound generalized_markov_bound(double e_phi_on_set, double p_estimate,
                                     double inf_phi_on_set);
// Weighted-sample form: expectation and frequency from (phi value, weight,
// indicator) triples.
MarkovBound generalized_markov_bound(const std::vector<double>& phi_values,
                                     const std::vector<double>& weights,
                                     const std::vector<char>& in_set,
                                     double inf_phi_on_set);

// ---------------------------------------------------------------------------
// Tightness certificates
// ---------------------------------------------------------------------------

struct TightnessCertificate {
  int agent = 0, time = 0;
  double eps = 0.0;
  double k = 0.0;        // certified bound on int of the weighted slice
  double m_level = 0.0;  // k / eps
  SpaceSpec k_box;       // exogenous-observation quantile box, mass >= 1-eps
  SpaceSpec l_box;       // action box from the IC certificate
  bool extends_declared = false;  // l_box exceeds the declared action space
  double phi_prefix_min = 1.0;    // grid lower bound over certified boxes
  ICReport ic;
  // certified: measure outside k_box x l_box < 2 eps (given the earlier
  // rungs' boxes; the ladder is a union bound)
  double tail_bound = 0.0;
};

// Box containing at least 1 - eps of the Gaussian mass, from per-coordinate
// quantiles at tail eps / dim (union bound).
SpaceSpec gaussian_quantile_box(const NoiseSpec& law, double eps);

// Single-rung construction: re-runs the IC check at M = k / eps over the
// quantile box and emits (K_eps, L_eps) with tail bound 2 eps. Propagates
// Inconclusive from the IC check.
TightnessCertificate tightness_sets(const ExprPtr& f, const VarGroup& group_a,
                                    const VarGroup& group_b,
                                    const VarGroup& group_c, double k,
                                    double eps, const SpaceSpec& base_tight,
                                    const SpaceSpec& c_box,
                                    const SpaceSpec& search_box);

// Causal ladder over all slots: rung (i, t) certifies the slot's action box
// using the slot cost term times the phi prefix of its channel and all
// earlier channels, with the prefix lower-bounded on the previously
// certified boxes (exogenous quantile boxes for primitives and observations,
// earlier rungs' L boxes for actions). Throws FormMismatch when a slot has
// no own-action quadratic cost term.
std::vector<TightnessCertificate> sequential_tightness(const ReducedTeam& rt,
                                                       double k, double eps);

// Empirical complement: fraction of exogenous-measure samples with the
// slot's (observation, action) outside k_box x l_box under the given
// strategies, with a binomial standard error.
struct TailEstimate {
  double fraction = 0.0;
  double stderr_ = 0.0;
};
TailEstimate empirical_tail(const ReducedTeam& rt,
                            const StrategyProfile& strategies,
                            const TightnessCertificate& cert,
                            std::uint64_t seed, std::size_t n);

}  // namespace teamopt
