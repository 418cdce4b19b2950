#include "pwolff/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pwolff/error.hpp"

namespace pwolff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double mass_coefficient(double p) { return 0.5 / std::pow(p - 1.0, p - 1.0); }

}  // namespace

double PotentialParams::lambda_cap(double p, int N) {
  const double a = p > 2.0 ? 1.0 / (p - 1.0) : 1.0;
  return std::min(a, 1.0 / static_cast<double>(N));
}

void PotentialParams::validate() const {
  if (!(p >= 2.0)) throw std::invalid_argument("params: p must be >= 2");
  if (N < 1) throw std::invalid_argument("params: N must be a positive integer");
  const double cap = lambda_cap(p, N);
  if (!(lambda > 0.0) || !(lambda <= cap))
    throw std::invalid_argument("params: lambda must lie in (0, min{1/(p-1), 1/N}]");
  if (!(kappa > 0.0) || !(kappa < 1.0))
    throw std::invalid_argument("params: kappa must lie in (0,1)");
  if (!(m >= 2.0 * p)) throw std::invalid_argument("params: m must be >= 2p");
  if (!(tau_min > 0.0) || !(tau_max > tau_min))
    throw std::invalid_argument("params: need 0 < tau_min < tau_max");
  if (tau_points_per_decade < 2)
    throw std::invalid_argument("params: tau_points_per_decade must be >= 2");
  if (dyadic_max_terms < 1)
    throw std::invalid_argument("params: dyadic_max_terms must be >= 1");
  if (!(term_tolerance >= 0.0))
    throw std::invalid_argument("params: term_tolerance must be >= 0");
}

double ip(double p, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("ip: tau must be positive");
  if (!(p >= 2.0)) throw std::invalid_argument("ip: p must be >= 2");
  if (p == 2.0) return tau < 1.0 ? kInf : 0.0;
  return (p - 2.0) * std::pow(tau, -1.0 / (p - 2.0));
}

double eps_p(double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("eps_p: p must be >= 2");
  if (p == 2.0) return 1.0;
  return std::pow(p - 2.0, p - 2.0);
}

namespace detail {

DpResult dp_scan(const PotentialParams& params, double rho,
                 const std::function<double(double)>& mass_of_halfheight,
                 double mass_at_inf) {
  const double p = params.p;
  const double coef = mass_coefficient(p) * std::pow(rho, -static_cast<double>(params.N));
  const double rho_p = std::pow(rho, p);

  if (p == 2.0) {
    // tau restricted to [1, inf) where ip vanishes; the mass term is
    // nondecreasing, so the minimum sits at tau = 1.
    DpResult r;
    r.tau_star = 1.0;
    r.ip_part = 0.0;
    r.mass_part = coef * mass_of_halfheight(rho_p);  // rho^p = rho^2 here
    r.value = r.mass_part;
    return r;
  }

  auto objective = [&](double tau) { return ip(p, tau) + coef * mass_of_halfheight(tau * rho_p); };

  const double lmin = std::log10(params.tau_min), lmax = std::log10(params.tau_max);
  const int npts =
      static_cast<int>(std::ceil((lmax - lmin) * params.tau_points_per_decade)) + 1;
  std::vector<double> taus(npts), vals(npts);
  int best = 0;
  for (int i = 0; i < npts; ++i) {
    const double l = lmin + (lmax - lmin) * i / (npts - 1);
    taus[i] = std::pow(10.0, l);
    vals[i] = objective(taus[i]);
    if (vals[i] < vals[best]) best = i;
  }

  const double limit_value = coef * mass_at_inf;  // ip -> 0 as tau -> inf
  DpResult r;
  if (best == npts - 1 && limit_value <= vals[best]) {
    // Infimum approached only in the tau -> inf limit.
    r.at_infinity = true;
    r.tau_star = kInf;
    r.ip_part = 0.0;
    r.mass_part = limit_value;
    r.value = limit_value;
    return r;
  }
  if (best == 0) {
    // Decreasing into the lower bracket end: the scan did not stabilize.
    r.scan_converged = false;
    r.tau_star = taus[0];
    r.ip_part = ip(p, taus[0]);
    r.mass_part = vals[0] - r.ip_part;
    r.value = vals[0];
    return r;
  }

  // Golden-section refinement in log tau on the bracketing triple.
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(taus[best - 1]);
  double b = std::log(taus[std::min(best + 1, npts - 1)]);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = objective(std::exp(x1)), f2 = objective(std::exp(x2));
  for (int it = 0; it < 90 && (b - a) > 1e-13; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = objective(std::exp(x1));
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = objective(std::exp(x2));
    }
  }
  double tau_star = std::exp(0.5 * (a + b));
  double fmin = std::min({objective(tau_star), vals[best], f1, f2});

  // Largest minimizer: extend across any grid plateau whose objective ties
  // the minimum within term_tolerance, then bisect the plateau edge. This is
  // what picks the right edge of flat stretches produced by atomic masses.
  const double tie = fmin + params.term_tolerance * std::max(std::abs(fmin), 1e-300);
  int hi = best;
  while (hi + 1 < npts && vals[hi + 1] <= tie) ++hi;
  if (hi > best) {
    double lo_t = taus[hi];
    double hi_t = hi + 1 < npts ? taus[hi + 1] : taus[hi];
    for (int it = 0; it < 200 && (hi_t - lo_t) > 1e-13 * hi_t; ++it) {
      const double mid = std::sqrt(lo_t * hi_t);
      if (objective(mid) <= tie)
        lo_t = mid;
      else
        hi_t = mid;
    }
    tau_star = lo_t;
  }

  r.tau_star = tau_star;
  r.ip_part = ip(p, tau_star);
  r.mass_part = coef * mass_of_halfheight(tau_star * rho_p);
  r.value = fmin;
  return r;
}

}  // namespace detail

namespace {

DpResult dp_impl(const PotentialParams& params,
                 const std::function<double(double)>& mass_of_halfheight,
                 double mass_at_inf, double rho) {
  params.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("dp: rho must be positive");
  return detail::dp_scan(params, rho, mass_of_halfheight, mass_at_inf);
}

std::function<double(double)> mass_fn(const SpaceTimeMeasure& mu,
                                      std::span<const double> x0, double t0,
                                      double rho) {
  // TimeProduct mass is linear in the halfheight; evaluate the spatial factor
  // once so the tau scan is pure arithmetic.
  if (mu.kind() == SpaceTimeMeasure::Kind::time_product) {
    const double ball = mu.spatial().ball_mass(x0, rho);
    return [ball](double s) { return std::isinf(s) && ball > 0.0 ? kInf : ball * 2.0 * s; };
  }
  std::vector<double> x(x0.begin(), x0.end());
  return [&mu, x = std::move(x), t0, rho](double s) {
    return mu.cylinder_mass(Cylinder(x, t0, rho, s));
  };
}

double mass_at_infinity(const SpaceTimeMeasure& mu, std::span<const double> x0,
                        double t0, double rho) {
  switch (mu.kind()) {
    case SpaceTimeMeasure::Kind::time_product:
      return mu.spatial().ball_mass(x0, rho) > 0.0 ? kInf : 0.0;
    case SpaceTimeMeasure::Kind::atom_list:
    case SpaceTimeMeasure::Kind::grid_density:
      return mu.cylinder_mass(Cylinder(std::vector<double>(x0.begin(), x0.end()), t0,
                                       rho, kInf));
  }
  return 0.0;
}

}  // namespace

DpResult dp(const PotentialParams& params, const SpaceTimeMeasure& mu,
            std::span<const double> x0, double t0, double rho) {
  if (static_cast<int>(x0.size()) != mu.dim())
    throw std::invalid_argument("dp: query dimension mismatch");
  if (mu.is_zero()) {
    params.validate();
    if (!(rho > 0.0)) throw std::invalid_argument("dp: rho must be positive");
    DpResult r;
    if (params.p == 2.0) r.tau_star = 1.0;
    else r.at_infinity = true;
    return r;
  }
  return dp_impl(params, mass_fn(mu, x0, t0, rho), mass_at_infinity(mu, x0, t0, rho), rho);
}

DpResult dp_abs(const PotentialParams& params, const SignedMeasure& mu,
                std::span<const double> x0, double t0, double rho) {
  mu.validate();
  auto fp = mass_fn(mu.plus, x0, t0, rho);
  auto fm = mass_fn(mu.minus, x0, t0, rho);
  const double minf =
      mass_at_infinity(mu.plus, x0, t0, rho) + mass_at_infinity(mu.minus, x0, t0, rho);
  return dp_impl(params, [fp, fm](double s) { return fp(s) + fm(s); }, minf, rho);
}

namespace {

template <typename TermFn>
PotentialResult dyadic_sum(int max_terms, double term_tolerance, double rho,
                           TermFn&& term) {
  PotentialResult res;
  res.per_scale.reserve(static_cast<std::size_t>(max_terms));
  double last = 0.0;
  for (int j = 0; j < max_terms; ++j) {
    const double rho_j = std::ldexp(rho, -j);
    DpResult d = term(j, rho_j);
    res.value += d.value;
    res.per_scale.push_back({j, rho_j, d, res.value});
    res.truncated_at = j;
    last = d.value;
    if (d.value < term_tolerance) break;
  }
  res.tail_estimate = last * max_terms;
  return res;
}

}  // namespace

PotentialResult parabolic_potential(const PotentialParams& params,
                                    const SpaceTimeMeasure& mu,
                                    std::span<const double> x0, double t0,
                                    double rho) {
  params.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("parabolic_potential: rho must be positive");
  return dyadic_sum(params.dyadic_max_terms, params.term_tolerance, rho,
                    [&](int, double rho_j) { return dp(params, mu, x0, t0, rho_j); });
}

PotentialResult parabolic_potential_abs(const PotentialParams& params,
                                        const SignedMeasure& mu,
                                        std::span<const double> x0, double t0,
                                        double rho) {
  params.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("parabolic_potential: rho must be positive");
  return dyadic_sum(params.dyadic_max_terms, params.term_tolerance, rho,
                    [&](int, double rho_j) { return dp_abs(params, mu, x0, t0, rho_j); });
}

double wolff_potential(const SpatialMeasure& nu, std::span<const double> x0,
                       double rho, double beta, double p, int max_terms,
                       double term_tolerance) {
  if (!(rho > 0.0)) throw std::invalid_argument("wolff_potential: rho must be positive");
  if (!(p > 1.0)) throw std::invalid_argument("wolff_potential: p must exceed 1");
  double sum = 0.0;
  for (int j = 0; j < max_terms; ++j) {
    const double rho_j = std::ldexp(rho, -j);
    const double ball = nu.ball_mass(x0, rho_j);
    const double term =
        ball > 0.0
            ? std::pow(ball / std::pow(rho_j, static_cast<double>(nu.dim()) - beta * p),
                       1.0 / (p - 1.0))
            : 0.0;
    sum += term;
    if (term < term_tolerance) break;
  }
  return sum;
}

RieszResult riesz_integral(const SpaceTimeMeasure& mu, std::span<const double> x0,
                           double t0, double r, int quadrature_steps, int max_terms) {
  if (!(r > 0.0)) throw std::invalid_argument("riesz_integral: r must be positive");
  if (quadrature_steps < 4)
    throw std::invalid_argument("riesz_integral: need at least 4 quadrature steps");
  std::vector<double> x(x0.begin(), x0.end());
  auto g = [&](double rho) {
    return std::pow(rho, -static_cast<double>(mu.dim())) *
           mu.cylinder_mass(Cylinder(x, t0, rho, rho * rho));
  };
  // Composite Simpson, uniform in log rho over (r 2^{-max_terms}, r).
  const double l_lo = std::log(r) - max_terms * std::log(2.0);
  const double l_hi = std::log(r);
  const int m2 = quadrature_steps % 2 == 0 ? quadrature_steps : quadrature_steps + 1;
  const double h = (l_hi - l_lo) / m2;
  double s = g(std::exp(l_lo)) + g(std::exp(l_hi));
  for (int i = 1; i < m2; ++i) s += g(std::exp(l_lo + i * h)) * (i % 2 == 1 ? 4.0 : 2.0);
  RieszResult res;
  res.value = s * h / 3.0;
  res.divergent_at_zero = g(std::exp(l_lo)) > 0.0;
  return res;
}

double tau_heuristic(const PotentialParams& params, const SpaceTimeMeasure& mu,
                     std::span<const double> x0, double t0, double rho) {
  params.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("tau_heuristic: rho must be positive");
  std::vector<double> x(x0.begin(), x0.end());
  const double mass =
      mu.cylinder_mass(Cylinder(x, t0, rho, std::pow(rho, params.p)));
  const double normalized = std::pow(rho, -static_cast<double>(params.N)) * mass;
  if (normalized <= 0.0) return kInf;
  if (params.p == 2.0) return 1.0;  // exponent degenerates to 0
  return std::pow(normalized, -(params.p - 2.0) / (params.p - 1.0));
}

double upper_bound_sum(const PotentialParams& params, const SpaceTimeMeasure& mu,
                       std::span<const double> x0, double t0, double rho) {
  params.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("upper_bound_sum: rho must be positive");
  std::vector<double> x(x0.begin(), x0.end());
  double sum = 0.0;
  for (int j = 0; j < params.dyadic_max_terms; ++j) {
    const double rho_j = std::ldexp(rho, -j);
    const double rN = std::pow(rho_j, -static_cast<double>(params.N));
    const double rho_p = std::pow(rho_j, params.p);
    const double m1 = rN * mu.cylinder_mass(Cylinder(x, t0, rho_j, rho_p));
    const double tau = m1 > 0.0 && params.p > 2.0
                           ? std::pow(m1, -(params.p - 2.0) / (params.p - 1.0))
                           : 1.0;
    double term = m1 > 0.0 ? std::pow(m1, 1.0 / (params.p - 1.0)) : 0.0;
    if (m1 > 0.0)
      term += rN * mu.cylinder_mass(Cylinder(x, t0, rho_j, tau * rho_p));
    sum += term;
    if (term < params.term_tolerance) break;
  }
  return sum;
}

double sup_potential(const PotentialParams& params, const SignedMeasure& mu,
                     const SampleBox& region, double rho, int samples_per_axis,
                     int t_samples) {
  params.validate();
  mu.validate();
  if (samples_per_axis < 1 || t_samples < 1)
    throw std::invalid_argument("sup_potential: sample grid must be nonempty");
  const int n = mu.dim();
  if (static_cast<int>(region.lo.size()) != n || static_cast<int>(region.hi.size()) != n)
    throw std::invalid_argument("sup_potential: region dimension mismatch");
  std::vector<int> ix(n, 0);
  std::vector<double> x(n);
  double best = 0.0;
  for (;;) {
    for (int d = 0; d < n; ++d) {
      x[d] = samples_per_axis == 1
                 ? 0.5 * (region.lo[d] + region.hi[d])
                 : region.lo[d] + (region.hi[d] - region.lo[d]) * ix[d] / (samples_per_axis - 1);
    }
    for (int it = 0; it < t_samples; ++it) {
      const double t = t_samples == 1
                           ? 0.5 * (region.t_lo + region.t_hi)
                           : region.t_lo + (region.t_hi - region.t_lo) * it / (t_samples - 1);
      best = std::max(best, parabolic_potential_abs(params, mu, x, t, rho).value);
    }
    int d = 0;
    while (d < n) {
      if (++ix[d] < samples_per_axis) break;
      ix[d] = 0;
      ++d;
    }
    if (d >= n) break;
  }
  return best;
}

}  // namespace pwolff
