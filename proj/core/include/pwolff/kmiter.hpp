#pragma once

#include <span>
#include <vector>

#include "pwolff/measure.hpp"
#include "pwolff/pde.hpp"
#include "pwolff/potential.hpp"

namespace pwolff {

// Scalar auxiliary functions of the level iteration. lambda in (0,1],
// p >= 2. Derivatives are the true closed forms (checked against finite
// differences in the tests).
struct ScalarFns {
  double p = 3.0;
  double lambda = 0.25;

  void validate() const;
  double G(double s) const;          // min(s_+^2, s_+)
  double psi(double s) const;        // (1+s_+)^{1-(1+lambda)/p} - 1
  double psi_prime(double s) const;  // (1-(1+lambda)/p)(1+s_+)^{-(1+lambda)/p}
  double phi(double s) const;        // (1-(1+s_+)^{-lambda})/lambda
  double phi_prime(double s) const;  // (1+s_+)^{-1-lambda}
  double phi_sup() const { return 1.0 / lambda; }
  double Phi(double s) const;        // integral of phi from 0 to s, closed form
};

// Scaled cutoff: separable C^2 bump worth 1 on the inner half cylinder and 0
// outside B_{rho}(y) x (s-hh, s+hh); the unit profile has |slope| <= 3.75 < 4.
double cutoff_xi(double x_dist, double t_offset, double rho, double time_halfheight);

struct KmParams {
  PotentialParams pot;        // p, N, lambda, kappa, m and scan controls
  int j_max = 60;
  double delta_stop_rel = 1e-8;  // stop once delta_j < rel*(l_j + delta_rho_theta + 1)
  double root_match_rel = 1e-6;  // |A(delta_j) - kappa| <= rel*kappa on root branch
  void validate() const;
};

// Level functional A_j(delta): space-time level-set energy plus the sup over
// time slices of the clipped level mass, both weighted by the scaled cutoff.
double a_functional(const GridSolution& u, double y, double s, double level,
                    double delta, double rho_j, const PotentialParams& prm);

enum class KmBranch { accepted, root };

struct IterationState {
  int j = 0;
  double rho_j = 0.0;
  double level = 0.0;      // l_j entering the step
  double tau = 0.0;        // tau_j (may be +inf)
  double ip_tau = 0.0;     // ip(p, tau_j)
  double delta_hat = 0.0;  // max(delta_{j-1}/2, ip_tau)
  double delta = 0.0;      // delta_j
  double a_value = 0.0;    // A_j(delta_j)
  KmBranch branch = KmBranch::accepted;
  double time_halfheight = 0.0;  // eps_p delta^{2-p} rho_j^p
};

IterationState next_level(const GridSolution& u, const SpaceTimeMeasure& mu_plus,
                          double y, double s, double rho, int j, double level,
                          double delta_prev, const KmParams& prm);

struct IterationResult {
  std::vector<IterationState> states;
  double l_inf = 0.0;        // sum of the emitted delta_j
  bool truncated_by_jmax = false;
  double delta_rho_theta = 0.0;
  // companion bound components at (y,s,rho,theta)
  double avg_term = 0.0;        // cylinder_average_power of u_+ over Q_{rho,theta}
  double potential_term = 0.0;  // parabolic potential of mu_plus
};

// The level/step recursion from (l_0 = 0, delta_{-1} = 2 delta_{rho,theta});
// delta_{rho,theta} = (eps_p rho^p / theta)^{1/(p-2)} for p > 2, 0 for p = 2
// (where additionally rho^2 <= theta is required).
IterationResult run(const GridSolution& u, const SpaceTimeMeasure& mu_plus,
                    double y, double s, double rho, double theta,
                    const KmParams& prm);

struct TheoremCheck {
  LebesguePointEstimate lhs_plus, lhs_minus;
  double eps_rho_theta = 0.0;  // rho^{p/(p-2)} theta^{-1/(p-2)}, 0 for p = 2
  double avg_plus = 0.0, avg_minus = 0.0;
  double pot_plus = 0.0, pot_minus = 0.0;
  double ratio_plus = 0.0, ratio_minus = 0.0;  // lhs / (eps + avg + pot)
};

// Pointwise-estimate audit: both signs, pairing u_+ with mu_+ and u_- with
// mu_-; ratios are the empirically measured comparison constants.
TheoremCheck theorem_check(const GridSolution& u, const SignedMeasure& mu, double y,
                           double s, double rho, double theta, const KmParams& prm);

}  // namespace pwolff
