#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "pwolff/measure.hpp"

namespace pwolff {

// Parameters shared by the potential evaluators and the level iteration.
struct PotentialParams {
  double p = 3.0;
  int N = 1;
  double lambda = 0.25;  // in (0, min{1/(p-1), 1/N}]
  double kappa = 0.1;    // in (0,1)
  double m = 6.0;        // >= 2p

  double tau_min = 1e-9;
  double tau_max = 1e9;
  int tau_points_per_decade = 64;
  int dyadic_max_terms = 48;
  double term_tolerance = 1e-10;

  static double lambda_cap(double p, int N);
  void validate() const;  // throws std::invalid_argument on any violation
};

// Decreasing time-aspect cost in the per-scale optimization. For p = 2 it is
// the hard constraint tau >= 1 (+inf below, 0 at and above).
double ip(double p, double tau);

// (p-2)^(p-2) for p > 2, 1 at p = 2; continuous in p.
double eps_p(double p);

struct DpResult {
  double value = 0.0;
  double tau_star = std::numeric_limits<double>::infinity();
  double ip_part = 0.0;    // ip(tau_star), 0 when tau_star = +inf
  double mass_part = 0.0;  // weighted mass term at tau_star
  bool at_infinity = false;      // infimum approached only as tau -> inf
  bool scan_converged = true;    // false: bracket exhausted at tau_min
};

// Per-scale value: minimize ip(tau) + rho^{-N} mu(Q_{rho, tau rho^p}) / (2(p-1)^{p-1})
// over tau in (0, inf]. tau_star is the largest minimizer (plateau edges are
// refined by bisection). p = 2 takes the exact path: value = rho^{-N} mu(Q_{rho,rho^2})/2,
// tau_star = 1.
DpResult dp(const PotentialParams& params, const SpaceTimeMeasure& mu,
            std::span<const double> x0, double t0, double rho);
// Same optimization against |mu| = plus + minus.
DpResult dp_abs(const PotentialParams& params, const SignedMeasure& mu,
                std::span<const double> x0, double t0, double rho);

struct ScaleTerm {
  int j = 0;
  double rho_j = 0.0;
  DpResult dp;
  double partial_sum = 0.0;
};

struct PotentialResult {
  double value = 0.0;
  std::vector<ScaleTerm> per_scale;
  int truncated_at = 0;        // last dyadic index evaluated
  double tail_estimate = 0.0;  // last term * dyadic_max_terms; reported, never added
};

// Dyadic sum of per-scale values over rho_j = 2^{-j} rho, truncated at
// dyadic_max_terms or when a term drops below term_tolerance.
PotentialResult parabolic_potential(const PotentialParams& params,
                                    const SpaceTimeMeasure& mu,
                                    std::span<const double> x0, double t0, double rho);
PotentialResult parabolic_potential_abs(const PotentialParams& params,
                                        const SignedMeasure& mu,
                                        std::span<const double> x0, double t0,
                                        double rho);

// Truncated elliptic potential: sum over j of
// (nu(B_{rho_j}(x0)) / rho_j^{N - beta p})^{1/(p-1)}, truncated like the
// parabolic sum.
double wolff_potential(const SpatialMeasure& nu, std::span<const double> x0,
                       double rho, double beta, double p, int max_terms = 48,
                       double term_tolerance = 1e-10);

struct RieszResult {
  double value = 0.0;
  // Mass still present at the lower quadrature cutoff; the integrand then
  // scales like rho^{-N} and the full integral diverges.
  bool divergent_at_zero = false;
};

// log-spaced quadrature of rho^{-N} mu(Q_{rho,rho^2}) drho/rho over
// (r 2^{-max_terms}, r); the p = 2 companion of the dyadic sum.
RieszResult riesz_integral(const SpaceTimeMeasure& mu, std::span<const double> x0,
                           double t0, double r, int quadrature_steps,
                           int max_terms = 48);

// (rho^{-N} mu(Q_{rho,rho^p}))^{-(p-2)/(p-1)}; +inf when the mass vanishes.
double tau_heuristic(const PotentialParams& params, const SpaceTimeMeasure& mu,
                     std::span<const double> x0, double t0, double rho);

// Dyadic sum of (rho_j^{-N} mu(Q_{rho_j,rho_j^p}))^{1/(p-1)}
//             + rho_j^{-N} mu(Q_{rho_j, tau(rho_j) rho_j^p}).
double upper_bound_sum(const PotentialParams& params, const SpaceTimeMeasure& mu,
                       std::span<const double> x0, double t0, double rho);

struct SampleBox {
  std::vector<double> lo, hi;  // spatial box
  double t_lo = 0.0, t_hi = 0.0;
};

// Max over a sample lattice in the box of the parabolic potential of |mu|.
double sup_potential(const PotentialParams& params, const SignedMeasure& mu,
                     const SampleBox& region, double rho, int samples_per_axis,
                     int t_samples);

namespace detail {
// Scan core shared by dp and tests: mass_of_halfheight(s) must be
// nondecreasing in s; mass_at_inf is its limit (may be +inf).
DpResult dp_scan(const PotentialParams& params, double rho,
                 const std::function<double(double)>& mass_of_halfheight,
                 double mass_at_inf);
}  // namespace detail

}  // namespace pwolff
