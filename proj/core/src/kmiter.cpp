#include "pwolff/kmiter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pwolff/bump.hpp"
#include "pwolff/error.hpp"

namespace pwolff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double overlap(double lo, double hi, double a, double b) {
  const double l = std::max(lo, a);
  const double h = std::min(hi, b);
  return h > l ? h - l : 0.0;
}

// max of u - level over the quadrature nodes that carry positive cutoff
// weight inside B_rho(y) x (s-H, s+H)
double cylinder_excess(const GridSolution& u, double y, double s, double level,
                       double rho, double H) {
  double excess = 0.0;
  for (int n = 0; n <= u.nt; ++n) {
    const double xi_t = BumpProfile::value((u.t(n) - s) / H);
    if (xi_t <= 0.0) continue;
    for (int i = 0; i <= u.nx; ++i) {
      if (BumpProfile::value(std::abs(u.x(i) - y) / rho) <= 0.0) continue;
      excess = std::max(excess, u.at(i, n) - level);
    }
  }
  return excess;
}

}  // namespace

void ScalarFns::validate() const {
  if (!(p >= 2.0)) throw std::invalid_argument("ScalarFns: p must be >= 2");
  if (!(lambda > 0.0) || !(lambda <= 1.0))
    throw std::invalid_argument("ScalarFns: lambda must lie in (0,1]");
}

double ScalarFns::G(double s) const {
  if (s <= 0.0) return 0.0;
  return std::min(s * s, s);
}

double ScalarFns::psi(double s) const {
  if (s <= 0.0) return 0.0;
  return std::pow(1.0 + s, 1.0 - (1.0 + lambda) / p) - 1.0;
}

double ScalarFns::psi_prime(double s) const {
  const double sp = std::max(s, 0.0);
  return (1.0 - (1.0 + lambda) / p) * std::pow(1.0 + sp, -(1.0 + lambda) / p);
}

double ScalarFns::phi(double s) const {
  if (s <= 0.0) return 0.0;
  return (1.0 - std::pow(1.0 + s, -lambda)) / lambda;
}

double ScalarFns::phi_prime(double s) const {
  const double sp = std::max(s, 0.0);
  return std::pow(1.0 + sp, -1.0 - lambda);
}

double ScalarFns::Phi(double s) const {
  if (s <= 0.0) return 0.0;
  if (lambda == 1.0) return s - std::log1p(s);
  return (s - (std::pow(1.0 + s, 1.0 - lambda) - 1.0) / (1.0 - lambda)) / lambda;
}

double cutoff_xi(double x_dist, double t_offset, double rho, double time_halfheight) {
  return BumpProfile::value(x_dist / rho) *
         BumpProfile::value(t_offset / time_halfheight);
}

void KmParams::validate() const {
  pot.validate();
  if (j_max < 0) throw std::invalid_argument("KmParams: j_max must be >= 0");
  if (!(delta_stop_rel >= 0.0))
    throw std::invalid_argument("KmParams: delta_stop_rel must be >= 0");
  if (!(root_match_rel > 0.0))
    throw std::invalid_argument("KmParams: root_match_rel must be positive");
}

double a_functional(const GridSolution& u, double y, double s, double level,
                    double delta, double rho_j, const PotentialParams& prm) {
  if (!(delta > 0.0)) throw std::invalid_argument("a_functional: delta must be positive");
  if (!(rho_j > 0.0)) throw std::invalid_argument("a_functional: rho must be positive");
  const double p = prm.p;
  const double ep = eps_p(p);
  const double H = ep * std::pow(delta, 2.0 - p) * std::pow(rho_j, p);
  if (y - rho_j < u.x_lo - 1e-12 || y + rho_j > u.x_hi() + 1e-12 ||
      s - H < u.t_lo - 1e-12 || s + H > u.t_hi() + 1e-12)
    throw std::invalid_argument("a_functional: cylinder exits the solution grid");
  if (u.geometry == Geometry::radial && std::abs(y) > 1e-12)
    throw std::invalid_argument("a_functional: radial grids center at 0");

  const double q = (1.0 + prm.lambda) * (p - 1.0);
  const double area = u.geometry == Geometry::radial ? u.N * unit_ball_volume(u.N) : 1.0;
  ScalarFns fns{p, prm.lambda};

  double term1 = 0.0;  // space-time integral, scaled below
  double term2 = 0.0;  // sup over slices
  for (int n = 0; n <= u.nt; ++n) {
    const double toff = u.t(n) - s;
    const double xi_t = BumpProfile::value(toff / H);
    if (xi_t <= 0.0) continue;
    const double tw = overlap(u.t(n) - 0.5 * u.k, u.t(n) + 0.5 * u.k, s - H, s + H);
    double slice1 = 0.0, slice2 = 0.0;
    for (int i = 0; i <= u.nx; ++i) {
      double xw;
      if (u.geometry == Geometry::line) {
        xw = overlap(std::max(u.x_lo, u.x(i) - 0.5 * u.h),
                     std::min(u.x_hi(), u.x(i) + 0.5 * u.h), y - rho_j, y + rho_j);
      } else {
        const double rl = std::max(0.0, u.x(i) - 0.5 * u.h);
        const double rr = std::min({u.x_hi(), u.x(i) + 0.5 * u.h, rho_j});
        xw = rr > rl ? area * (std::pow(rr, u.N) - std::pow(rl, u.N)) / u.N : 0.0;
      }
      if (xw <= 0.0) continue;
      const double excess = u.at(i, n) - level;
      if (excess <= 0.0) continue;
      const double ratio = excess / delta;
      const double xi = BumpProfile::value(std::abs(u.x(i) - y) / rho_j) * xi_t;
      if (xi <= 0.0) continue;
      slice1 += xw * std::pow(ratio, q) * std::pow(xi, prm.m - p);
      slice2 += xw * fns.G(ratio) * std::pow(xi, prm.m);
    }
    term1 += tw * slice1;
    term2 = std::max(term2, slice2 / std::pow(rho_j, u.N));
  }
  term1 *= std::pow(delta, p - 2.0) / (eps_p(p) * std::pow(rho_j, u.N + p));
  return term1 + term2;
}

IterationState next_level(const GridSolution& u, const SpaceTimeMeasure& mu_plus,
                          double y, double s, double rho, int j, double level,
                          double delta_prev, const KmParams& prm) {
  prm.validate();
  const double p = prm.pot.p;
  IterationState st;
  st.j = j;
  st.level = level;
  st.rho_j = std::ldexp(rho, -j);

  const DpResult d = dp(prm.pot, mu_plus, std::vector<double>{y}, s, st.rho_j);
  st.tau = d.tau_star;
  st.ip_tau = std::isinf(d.tau_star) ? 0.0 : ip(p, d.tau_star);
  st.delta_hat = std::max(0.5 * delta_prev, st.ip_tau);

  auto halfheight = [&](double delta) {
    return eps_p(p) * std::pow(delta, 2.0 - p) * std::pow(st.rho_j, p);
  };
  auto A = [&](double delta) {
    return a_functional(u, y, s, level, delta, st.rho_j, prm.pot);
  };
  const double kappa = prm.pot.kappa;

  double delta_lo = st.delta_hat;
  if (delta_lo == 0.0) {
    // p = 2 cold start: delta_hat can vanish. If nothing sits above the
    // level inside the cylinder the functional is identically zero and the
    // step degenerates to delta = 0.
    const double excess = cylinder_excess(u, y, s, level, st.rho_j, halfheight(1.0));
    if (excess <= 0.0) {
      st.delta = 0.0;
      st.a_value = 0.0;
      st.branch = KmBranch::accepted;
      st.time_halfheight = halfheight(1.0);  // p = 2: delta-independent
      return st;
    }
    delta_lo = 1e-12 * (1.0 + excess);
    while (A(delta_lo) <= kappa && delta_lo > 1e-250) delta_lo *= 0.0625;
  } else {
    const double a_hat = A(delta_lo);
    if (a_hat <= kappa) {
      st.delta = delta_lo;
      st.a_value = a_hat;
      st.branch = KmBranch::accepted;
      st.time_halfheight = halfheight(st.delta);
      return st;
    }
  }

  // Root branch: geometric bracket upward, then bisection until the
  // functional matches kappa to the configured relative tolerance.
  double lo = delta_lo, hi = delta_lo;
  bool bracketed = false;
  for (int k = 0; k < 60; ++k) {
    hi *= 2.0;
    if (hi > 1e12 * std::max(st.delta_hat, delta_lo))
      throw NumericsError("next_level: root bracket exhausted beyond 1e12 delta_hat");
    if (A(hi) <= kappa) {
      bracketed = true;
      break;
    }
    lo = hi;
  }
  if (!bracketed) throw NumericsError("next_level: no root bracket found");
  double a_mid = 0.0, mid = hi;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    a_mid = A(mid);
    if (std::abs(a_mid - kappa) <= prm.root_match_rel * kappa * 0.5) break;
    if (a_mid > kappa)
      lo = mid;
    else
      hi = mid;
  }
  if (std::abs(a_mid - kappa) > prm.root_match_rel * kappa)
    throw NumericsError("next_level: bisection failed to match the target level");
  st.delta = mid;
  st.a_value = a_mid;
  st.branch = KmBranch::root;
  st.time_halfheight = halfheight(st.delta);
  return st;
}

IterationResult run(const GridSolution& u, const SpaceTimeMeasure& mu_plus, double y,
                    double s, double rho, double theta, const KmParams& prm) {
  prm.validate();
  u.validate();
  const double p = prm.pot.p;
  if (!(rho > 0.0) || !(theta > 0.0))
    throw std::invalid_argument("run: rho and theta must be positive");
  if (p == 2.0 && rho * rho > theta * (1.0 + 1e-12))
    throw std::invalid_argument("run: p = 2 requires rho^2 <= theta");
  if (y - rho < u.x_lo - 1e-12 || y + rho > u.x_hi() + 1e-12 ||
      s - theta < u.t_lo - 1e-12 || s + theta > u.t_hi() + 1e-12)
    throw std::invalid_argument("run: Q_{rho,theta} leaves the solution grid");

  IterationResult res;
  res.delta_rho_theta =
      p > 2.0 ? std::pow(eps_p(p) * std::pow(rho, p) / theta, 1.0 / (p - 2.0)) : 0.0;

  double level = 0.0;
  double delta_prev = 2.0 * res.delta_rho_theta;
  for (int j = 0; j < prm.j_max; ++j) {
    IterationState st = next_level(u, mu_plus, y, s, rho, j, level, delta_prev, prm);
    res.states.push_back(st);
    level += st.delta;
    delta_prev = st.delta;
    if (st.delta < prm.delta_stop_rel * (level + res.delta_rho_theta + 1.0)) break;
    if (j + 1 == prm.j_max) res.truncated_by_jmax = true;
  }
  res.l_inf = level;

  res.avg_term = cylinder_average_power(u, y, s, rho, theta, prm.pot.lambda, p,
                                        Sign::plus);
  res.potential_term =
      parabolic_potential(prm.pot, mu_plus, std::vector<double>{y}, s, rho).value;
  return res;
}

TheoremCheck theorem_check(const GridSolution& u, const SignedMeasure& mu, double y,
                           double s, double rho, double theta, const KmParams& prm) {
  prm.validate();
  mu.validate();
  const double p = prm.pot.p;
  std::vector<double> rhos;
  for (int i = 0; i < 6; ++i) rhos.push_back(std::ldexp(rho, -i));

  TheoremCheck tc;
  GridSolution up = apply_pointwise(u, [](double v) { return std::max(v, 0.0); });
  GridSolution um = apply_pointwise(u, [](double v) { return std::max(-v, 0.0); });
  tc.lhs_plus = lebesgue_point_value(up, y, s, rhos);
  tc.lhs_minus = lebesgue_point_value(um, y, s, rhos);
  tc.eps_rho_theta =
      p > 2.0 ? std::pow(rho, p / (p - 2.0)) * std::pow(theta, -1.0 / (p - 2.0)) : 0.0;
  tc.avg_plus = cylinder_average_power(u, y, s, rho, theta, prm.pot.lambda, p, Sign::plus);
  tc.avg_minus = cylinder_average_power(u, y, s, rho, theta, prm.pot.lambda, p, Sign::minus);
  tc.pot_plus = parabolic_potential(prm.pot, mu.plus, std::vector<double>{y}, s, rho).value;
  tc.pot_minus = parabolic_potential(prm.pot, mu.minus, std::vector<double>{y}, s, rho).value;
  const double den_p = tc.eps_rho_theta + tc.avg_plus + tc.pot_plus;
  const double den_m = tc.eps_rho_theta + tc.avg_minus + tc.pot_minus;
  tc.ratio_plus = tc.lhs_plus.value > 0.0 && den_p > 0.0 ? tc.lhs_plus.value / den_p : 0.0;
  tc.ratio_minus = tc.lhs_minus.value > 0.0 && den_m > 0.0 ? tc.lhs_minus.value / den_m : 0.0;
  return tc;
}

}  // namespace pwolff
