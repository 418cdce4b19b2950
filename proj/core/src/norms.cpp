#include "pwolff/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pwolff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integer(double x) { return std::abs(x - std::round(x)) < 1e-12 && x < 64.0; }

// integral of s^{e-1} over [lo, hi], hi may be +inf (needs e < 0 then)
double power_integral(double e, double lo, double hi) {
  if (std::isinf(hi)) {
    if (e >= 0.0) return kInf;
    return -std::pow(lo, e) / e;
  }
  if (lo <= 0.0) {
    if (e <= 0.0) return hi > 0.0 ? kInf : 0.0;
    return std::pow(hi, e) / e;
  }
  if (e == 0.0) return std::log(hi / lo);
  return (std::pow(hi, e) - std::pow(lo, e)) / e;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double flm = f(0.5 * (a + m)), frm = f(0.5 * (m + b));
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double scale = std::max({std::abs(whole), 1e-300});
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, rel_tol * scale, 48);
}

// integral over [lo,hi] of s^{c-1} (a + b/s)^alpha ds with a,b >= 0.
double segment_integral(double c, double a, double b, double alpha, double lo,
                        double hi) {
  if (a == 0.0 && b == 0.0) return 0.0;
  if (b == 0.0) return std::pow(a, alpha) * power_integral(c, lo, hi);
  if (a == 0.0) return std::pow(b, alpha) * power_integral(c - alpha, lo, hi);
  if (is_integer(alpha)) {
    const int n = static_cast<int>(std::round(alpha));
    double acc = 0.0;
    for (int i = 0; i <= n; ++i)
      acc += binomial(n, i) * std::pow(a, n - i) * std::pow(b, i) *
             power_integral(c - i, lo, hi);
    return acc;
  }
  auto f = [&](double s) { return std::pow(s, c - 1.0) * std::pow(a + b / s, alpha); };
  return integrate_adaptive(f, lo, hi, 1e-12);
}

// sup over [lo,hi] of s^{1/q} (a + b/s); hi may be +inf.
double segment_sup(double invq, double a, double b, double lo, double hi) {
  auto g = [&](double s) { return std::pow(s, invq) * (a + b / s); };
  if (a == 0.0 && b == 0.0) return 0.0;
  double best = 0.0;
  if (std::isinf(hi)) {
    // behavior at infinity: a s^{1/q} dominates if a>0 and 1/q>0; b s^{1/q - 1}
    if ((a > 0.0 && invq > 0.0) || (b > 0.0 && invq > 1.0)) return kInf;
    if (a > 0.0 && invq == 0.0) best = std::max(best, a);
    best = std::max(best, g(lo));
    return best;
  }
  best = std::max(lo > 0.0 ? g(lo) : 0.0, g(hi));
  if (a > 0.0 && b > 0.0 && invq > 0.0 && invq < 1.0) {
    const double s_crit = b * (1.0 - invq) / (a * invq);
    if (s_crit > lo && s_crit < hi) best = std::max(best, g(s_crit));
  }
  return best;
}

}  // namespace

void GridFunction::validate() const {
  spec.validate();
  if (values.size() != spec.value_count())
    throw std::invalid_argument("GridFunction: value count does not match grid");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument("GridFunction: non-finite value");
}

Rearrangement rearrange_weighted(std::span<const double> values,
                                 std::span<const double> volumes) {
  if (values.size() != volumes.size())
    throw std::invalid_argument("rearrange_weighted: size mismatch");
  std::vector<std::pair<double, double>> items;
  items.reserve(values.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double a = std::abs(values[i]);
    if (!(volumes[i] > 0.0))
      throw std::invalid_argument("rearrange_weighted: volumes must be positive");
    if (a > 0.0) {
      items.emplace_back(a, volumes[i]);
      mass += a * volumes[i];
    }
  }
  std::sort(items.begin(), items.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  Rearrangement r;
  r.breakpoints.push_back(0.0);
  double cum = 0.0;
  for (std::size_t i = 0; i < items.size();) {
    const double v = items[i].first;
    double vol = 0.0;
    while (i < items.size() && items[i].first == v) vol += items[i++].second;
    cum += vol;
    r.values.push_back(v);
    r.breakpoints.push_back(cum);
  }
  r.total_mass = mass;
  r.positive_measure = cum;
  return r;
}

Rearrangement rearrange(const GridFunction& f) {
  f.validate();
  std::vector<double> vols(f.values.size(), f.spec.cell_volume());
  return rearrange_weighted(f.values, vols);
}

double Rearrangement::value_at(double s) const {
  if (s < 0.0) throw std::invalid_argument("value_at: s must be >= 0");
  // f* is right-continuous: value[k] on [breakpoints[k], breakpoints[k+1])
  auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - breakpoints.begin());
  if (k == 0) return values.empty() ? 0.0 : values[0];
  if (k > values.size()) return 0.0;
  return values[k - 1];
}

double Rearrangement::integral_to(double s) const {
  if (s <= 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double lo = breakpoints[k], hi = breakpoints[k + 1];
    if (s <= lo) break;
    acc += values[k] * (std::min(s, hi) - lo);
  }
  return acc;
}

double double_star(const Rearrangement& r, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("double_star: s must be positive");
  return r.integral_to(s) / s;
}

double lorentz_norm(const Rearrangement& r, double q, double alpha) {
  if (!(q > 0.0)) throw std::invalid_argument("lorentz_norm: q must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("lorentz_norm: alpha must be positive");
  if (r.values.empty()) return 0.0;
  const double invq = std::isinf(q) ? 0.0 : 1.0 / q;

  // f**(s) = a_k + b_k / s on each step segment, M/s past the support.
  const std::size_t K = r.values.size();
  std::vector<double> a(K + 1), b(K + 1), lo(K + 1), hi(K + 1);
  double cum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    a[k] = r.values[k];
    b[k] = cum - r.values[k] * r.breakpoints[k];
    lo[k] = r.breakpoints[k];
    hi[k] = r.breakpoints[k + 1];
    cum += r.values[k] * (hi[k] - lo[k]);
  }
  a[K] = 0.0;
  b[K] = r.total_mass;
  lo[K] = r.breakpoints.back();
  hi[K] = kInf;

  if (std::isinf(alpha)) {
    double best = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
      best = std::max(best, segment_sup(invq, a[k], b[k], lo[k], hi[k]));
      if (std::isinf(best)) return kInf;
    }
    return best;
  }
  double total = 0.0;
  for (std::size_t k = 0; k <= K; ++k) {
    total += segment_integral(alpha * invq, a[k], b[k], alpha, lo[k], hi[k]);
    if (!std::isfinite(total)) return kInf;
  }
  return std::pow(total, 1.0 / alpha);
}

double lorentz_norm(const GridFunction& f, double q, double alpha) {
  return lorentz_norm(rearrange(f), q, alpha);
}

double mixed_norm(const GridFunction& f, double inner_exponent, AxisGroup inner_axis,
                  double outer_exponent) {
  f.validate();
  if (!(inner_exponent >= 1.0) || !(outer_exponent >= 1.0))
    throw std::invalid_argument("mixed_norm: exponents must be >= 1 (inf allowed)");
  const GridSpec& s = f.spec;
  const int n = s.dim();
  double vol_x = 1.0;
  for (double sp : s.spacing) vol_x *= sp;
  std::size_t nx = 1;
  for (int c : s.cells) nx *= static_cast<std::size_t>(c);

  auto reduce = [](std::span<const double> vals, std::span<const double> weights,
                   double exp_) {
    if (std::isinf(exp_)) {
      double mx = 0.0;
      for (double v : vals) mx = std::max(mx, std::abs(v));
      return mx;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i)
      acc += std::pow(std::abs(vals[i]), exp_) * weights[i];
    return std::pow(acc, 1.0 / exp_);
  };

  // Flatten spatial index; values are laid out x-fastest within each slice.
  std::vector<double> slice_norms;
  if (inner_axis == AxisGroup::space) {
    slice_norms.resize(static_cast<std::size_t>(s.t_cells));
    std::vector<double> wx(nx, vol_x);
    for (int it = 0; it < s.t_cells; ++it) {
      std::span<const double> vals(f.values.data() + static_cast<std::size_t>(it) * nx, nx);
      slice_norms[static_cast<std::size_t>(it)] = reduce(vals, wx, inner_exponent);
    }
    std::vector<double> wt(slice_norms.size(), s.t_spacing);
    return reduce(slice_norms, wt, outer_exponent);
  }
  // inner over time per spatial cell
  slice_norms.resize(nx);
  std::vector<double> tmp(static_cast<std::size_t>(s.t_cells));
  std::vector<double> wt(tmp.size(), s.t_spacing);
  for (std::size_t ixf = 0; ixf < nx; ++ixf) {
    for (int it = 0; it < s.t_cells; ++it)
      tmp[static_cast<std::size_t>(it)] = f.values[static_cast<std::size_t>(it) * nx + ixf];
    slice_norms[ixf] = reduce(tmp, wt, inner_exponent);
  }
  std::vector<double> wx(nx, vol_x);
  (void)n;
  return reduce(slice_norms, wx, outer_exponent);
}

namespace {

// D_p upper bound from a mass bound of the form mu-term <= B tau^b:
// minimize (p-2) tau^{-1/(p-2)} + B tau^b; for b <= 0 fall back to the
// balance point of the two terms.
double optimized_tau_bound(double p, double B, double b) {
  if (B == 0.0) return 0.0;
  if (p == 2.0) return B;  // tau restricted to [1,inf), mass bound nondecreasing
  const double a = 1.0 / (p - 2.0);
  const double E = a + b;
  const double alpha = a / E;
  if (b > 0.0)
    return std::pow(B, alpha) * std::pow(b, -b / E) * (1.0 + (p - 2.0) * b);
  return 2.0 * std::pow(p - 2.0, 1.0 - alpha) * std::pow(B, alpha);
}

}  // namespace

double remark_bound_lebesgue(const PotentialParams& params, double mixed_norm_qr,
                             double rho, double q, double r) {
  params.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("remark_bound_lebesgue: rho must be positive");
  if (!(r > 1.0)) throw std::invalid_argument("remark_bound_lebesgue: requires r > 1");
  if (!(q > params.N / params.p))
    throw std::invalid_argument("remark_bound_lebesgue: requires q > N/p");
  if (!(mixed_norm_qr >= 0.0))
    throw std::invalid_argument("remark_bound_lebesgue: norm must be >= 0");
  const double p = params.p;
  const double invr = std::isinf(r) ? 0.0 : 1.0 / r;
  const double invq = std::isinf(q) ? 0.0 : 1.0 / q;
  const double omega = unit_ball_volume(params.N);
  const double gamma_mass = std::pow(2.0, 1.0 - invr) * std::pow(omega, 1.0 - invq);
  const double K = std::pow(rho, p - p * invr - params.N * invq) * mixed_norm_qr;
  const double B = gamma_mass * K / (2.0 * std::pow(p - 1.0, p - 1.0));
  return optimized_tau_bound(p, B, 1.0 - invr);
}

LorentzBoundResult remark_bound_lorentz(const PotentialParams& params,
                                        const GridFunction& density, double rho,
                                        double r) {
  params.validate();
  density.validate();
  if (!(rho > 0.0)) throw std::invalid_argument("remark_bound_lorentz: rho must be positive");
  const double p = params.p;
  if (!(r > (p - 2.0) / (p - 1.0)))
    throw std::invalid_argument("remark_bound_lorentz: requires r > (p-2)/(p-1)");
  const GridSpec& s = density.spec;
  std::size_t nx = 1;
  for (int c : s.cells) nx *= static_cast<std::size_t>(c);

  // ||f(x,.)||_{r,inf} per spatial cell.
  std::vector<double> g(nx), tvals(static_cast<std::size_t>(s.t_cells)),
      tvols(static_cast<std::size_t>(s.t_cells), s.t_spacing);
  for (std::size_t ixf = 0; ixf < nx; ++ixf) {
    for (int it = 0; it < s.t_cells; ++it)
      tvals[static_cast<std::size_t>(it)] = density.values[static_cast<std::size_t>(it) * nx + ixf];
    g[ixf] = lorentz_norm(rearrange_weighted(tvals, tvols), r, kInf);
  }
  double vol_x = 1.0;
  for (double sp : s.spacing) vol_x *= sp;
  std::vector<double> xvols(nx, vol_x);
  const Rearrangement gr = rearrange_weighted(g, xvols);

  const double invr = std::isinf(r) ? 0.0 : 1.0 / r;
  const double omega = unit_ball_volume(params.N);
  const double alpha = 1.0 / (p - 1.0 - (p - 2.0) * invr);
  const double coef = std::pow(2.0, 1.0 - invr) * omega / (2.0 * std::pow(p - 1.0, p - 1.0));

  auto bound_at = [&](double radius) {
    const double gss = double_star(gr, omega * std::pow(radius, params.N));
    const double B = coef * std::pow(radius, p - p * invr) * gss;
    return optimized_tau_bound(p, B, 1.0 - invr);
  };

  LorentzBoundResult out;
  out.q = p - p * invr > 0.0 ? params.N / (p - p * invr) : kInf;
  out.alpha = alpha;
  out.norm_rstar = double_star(gr, omega * std::pow(rho, params.N));
  out.per_radius = bound_at(rho);
  // integrated form: per-radius bound against d radius / radius, uniform in
  // log radius down to the dyadic floor.
  const int steps = 512;
  const double l_lo = std::log(rho) - params.dyadic_max_terms * std::log(2.0);
  const double h = (std::log(rho) - l_lo) / steps;
  double acc = bound_at(std::exp(l_lo)) + bound_at(rho);
  for (int i = 1; i < steps; ++i)
    acc += bound_at(std::exp(l_lo + i * h)) * (i % 2 == 1 ? 4.0 : 2.0);
  out.integrated = acc * h / 3.0;
  return out;
}

}  // namespace pwolff
