#include "pwolff/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "pwolff/kmiter.hpp"
#include "pwolff/measure.hpp"
#include "pwolff/norms.hpp"
#include "pwolff/pde.hpp"
#include "pwolff/potential.hpp"

namespace pwolff {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

SpatialMeasure random_spatial(std::mt19937_64& rng, int N) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (u01(rng) < 0.35) {
    std::uniform_real_distribution<double> dens(0.2, 3.0);
    return SpatialMeasure::lebesgue(N, dens(rng));
  }
  std::uniform_int_distribution<int> count(3, 12);
  std::uniform_real_distribution<double> pos(-2.0, 2.0), w(0.1, 5.0), w0(0.5, 2.0);
  const int n = count(rng);
  std::vector<double> xs, ws;
  // one atom pinned at the query center so every dyadic ball is charged
  xs.insert(xs.end(), static_cast<std::size_t>(N), 0.0);
  ws.push_back(w0(rng));
  for (int i = 1; i < n; ++i) {
    for (int d = 0; d < N; ++d) xs.push_back(pos(rng));
    ws.push_back(w(rng));
  }
  return SpatialMeasure::atoms(N, std::move(xs), std::move(ws));
}

PotentialParams params_for(double p, int N) {
  PotentialParams prm;
  prm.p = p;
  prm.N = N;
  prm.lambda = 0.5 * PotentialParams::lambda_cap(p, N);
  prm.m = 2.0 * p;
  return prm;
}

SuiteResult suite_autonomous(const VerifyOptions& opt) {
  SuiteResult res{"autonomous", true, "", {}};
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> rad(0.5, 2.0);
  double worst = 0.0;
  const int cases = opt.quick ? 5 : opt.cases;
  for (double p : {2.5, 3.0, 4.0}) {
    for (int N : {1, 2, 3}) {
      PotentialParams prm = params_for(p, N);
      for (int c = 0; c < cases; ++c) {
        const SpatialMeasure nu = random_spatial(rng, N);
        const double rho = rad(rng);
        std::vector<double> x0(N, 0.0);
        const auto mu = SpaceTimeMeasure::time_product(nu);
        const double P = parabolic_potential(prm, mu, x0, 0.0, rho).value;
        const double W = wolff_potential(nu, x0, rho, 1.0, p, prm.dyadic_max_terms,
                                         prm.term_tolerance);
        const double rel = std::abs(P - W) / std::max(W, 1e-300);
        worst = std::max(worst, rel);
      }
    }
  }
  res.metrics.emplace_back("max_rel_dev", worst);
  res.passed = worst <= 1e-6;
  res.detail = "max |P_p - W_p|/W_p = " + fmt(worst);
  return res;
}

SuiteResult suite_p2_exact(const VerifyOptions& opt) {
  SuiteResult res{"p2-exact", true, "", {}};
  std::mt19937_64 rng(opt.seed + 17);
  std::uniform_real_distribution<double> rad(0.3, 1.5), tq(-0.5, 0.5);
  double worst = 0.0;
  for (int c = 0; c < 12; ++c) {
    const int N = 1 + static_cast<int>(c % 3);
    PotentialParams prm = params_for(2.0, N);
    const SpatialMeasure nu = random_spatial(rng, N);
    const auto mu = SpaceTimeMeasure::time_product(nu);
    std::vector<double> x0(N, 0.0);
    const double rho = rad(rng);
    const double t0 = tq(rng);
    const DpResult d = dp(prm, mu, x0, t0, rho);
    const double direct = 0.5 * std::pow(rho, -N) *
                          mu.cylinder_mass(Cylinder(x0, t0, rho, rho * rho));
    worst = std::max(worst, std::abs(d.value - direct));
    if (d.tau_star != 1.0) {
      res.passed = false;
      res.detail = "tau_star != 1 on a p = 2 fixture";
      return res;
    }
  }
  res.metrics.emplace_back("max_abs_dev", worst);
  res.passed = worst == 0.0;
  res.detail = "p=2 closed form abs deviation = " + fmt(worst);
  return res;
}

SuiteResult suite_tau_scan(const VerifyOptions& opt) {
  SuiteResult res{"tau-scan", true, "", {}};
  std::mt19937_64 rng(opt.seed + 29);
  std::uniform_real_distribution<double> rad(0.5, 2.0);
  double worst_tau = 0.0, worst_val = 0.0;
  const int cases = opt.quick ? 5 : opt.cases;
  for (double p : {2.5, 3.0, 4.0}) {
    for (int N : {1, 2, 3}) {
      PotentialParams prm = params_for(p, N);
      for (int c = 0; c < cases; ++c) {
        const SpatialMeasure nu = random_spatial(rng, N);
        const double rho = rad(rng);
        std::vector<double> x0(N, 0.0);
        const double ball = nu.ball_mass(x0, rho);
        if (ball <= 0.0) continue;
        const auto mu = SpaceTimeMeasure::time_product(nu);
        const DpResult d = dp(prm, mu, x0, 0.0, rho);
        const double A = std::pow(rho, p - N) * ball / std::pow(p - 1.0, p - 1.0);
        const double tau_oracle = std::pow(A, -(p - 2.0) / (p - 1.0));
        const double val_oracle = std::pow(std::pow(rho, p - N) * ball, 1.0 / (p - 1.0));
        worst_tau = std::max(worst_tau, std::abs(d.tau_star - tau_oracle) / tau_oracle);
        worst_val = std::max(worst_val, std::abs(d.value - val_oracle) / val_oracle);
      }
    }
  }
  res.metrics.emplace_back("max_rel_tau", worst_tau);
  res.metrics.emplace_back("max_rel_value", worst_val);
  res.passed = worst_tau <= 1e-6 && worst_val <= 1e-6;
  res.detail = "tau dev " + fmt(worst_tau) + ", value dev " + fmt(worst_val);
  return res;
}

SuiteResult suite_scaling(const VerifyOptions& opt) {
  SuiteResult res{"scaling", true, "", {}};
  std::mt19937_64 rng(opt.seed + 31);
  double worst = 0.0;
  for (double p : {2.5, 3.0, 4.0}) {
    for (double c : {0.1, 10.0}) {
      const int N = 2;
      PotentialParams prm = params_for(p, N);
      const SpatialMeasure nu = random_spatial(rng, N);
      std::vector<double> x0(N, 0.0);
      const auto mu = SpaceTimeMeasure::time_product(nu);
      const auto mu_c = mu.scaled(c);
      const double v1 = dp(prm, mu, x0, 0.0, 1.0).value;
      const double v2 = dp(prm, mu_c, x0, 0.0, 1.0).value;
      if (v1 <= 0.0) continue;
      const double expected = std::pow(c, 1.0 / (p - 1.0)) * v1;
      worst = std::max(worst, std::abs(v2 - expected) / expected);
    }
  }
  res.metrics.emplace_back("max_rel_dev", worst);
  res.passed = worst <= 1e-6;
  res.detail = "dp scaling c^{1/(p-1)} dev = " + fmt(worst);
  return res;
}

GridSpec unit_grid(int N, int nx, int nt, double half_extent) {
  GridSpec s;
  s.origin.assign(N, -half_extent);
  s.spacing.assign(N, 2.0 * half_extent / nx);
  s.cells.assign(N, nx);
  s.t_origin = -half_extent;
  s.t_spacing = 2.0 * half_extent / nt;
  s.t_cells = nt;
  return s;
}

std::vector<SpaceTimeMeasure> riesz_fixtures(int N, bool quick) {
  const int nx = N == 1 ? 64 : (quick ? 16 : 24);
  const int nt = N == 1 ? 64 : (quick ? 16 : 24);
  GridSpec spec = unit_grid(N, nx, nt, 1.0);
  auto fill = [&](auto&& profile) {
    std::vector<double> v(spec.value_count());
    std::vector<int> ix(N, 0);
    for (int it = 0; it < spec.t_cells; ++it) {
      std::fill(ix.begin(), ix.end(), 0);
      for (;;) {
        double r2 = 0.0;
        for (int d = 0; d < N; ++d) {
          const double x = spec.origin[d] + (ix[d] + 0.5) * spec.spacing[d];
          r2 += x * x;
        }
        const double t = spec.t_origin + (it + 0.5) * spec.t_spacing;
        v[spec.index(ix, it)] = profile(std::sqrt(r2), t);
        int d = 0;
        while (d < N) {
          if (++ix[d] < spec.cells[d]) break;
          ix[d] = 0;
          ++d;
        }
        if (d >= N) break;
      }
    }
    return SpaceTimeMeasure::grid_density(spec, std::move(v));
  };
  std::vector<SpaceTimeMeasure> out;
  out.push_back(fill([](double, double) { return 1.0; }));
  out.push_back(fill([](double r, double) { return std::exp(-4.0 * r * r); }));
  out.push_back(fill([](double r, double) {
    return std::exp(-16.0 * (r - 0.5) * (r - 0.5));
  }));
  out.push_back(fill([](double r, double) { return 1.0 / (1.0 + 4.0 * r); }));
  out.push_back(fill([](double r, double t) {
    return (1.0 + 0.9 * std::sin(3.0 * t)) * std::exp(-2.0 * r);
  }));
  return out;
}

SuiteResult suite_riesz(const VerifyOptions& opt) {
  SuiteResult res{"riesz", true, "", {}};
  double worst_gamma = 0.0;
  for (int N : {1, 2}) {
    PotentialParams prm = params_for(2.0, N);
    std::vector<double> x0(N, 0.0);
    const double gamma_cap = std::pow(2.0, N + 2);
    const auto fixtures = riesz_fixtures(N, opt.quick);
    for (std::size_t f = 0; f < fixtures.size(); ++f) {
      const auto& mu = fixtures[f];
      const double P = parabolic_potential(prm, mu, x0, 0.0, 1.0).value;
      const int steps = N == 1 ? 1024 : 256;
      const double I = riesz_integral(mu, x0, 0.0, 1.0, steps).value;
      if (P <= 0.0 || I <= 0.0) continue;
      const double g = std::max(I / P, P / I);
      worst_gamma = std::max(worst_gamma, g);
      if (g > gamma_cap) {
        res.passed = false;
        res.detail = "comparability factor " + fmt(g) + " exceeds 2^(N+2) at N=" +
                     std::to_string(N) + " fixture " + std::to_string(f);
      }
      if (N == 1 && f == 0) {
        const double dev_p = std::abs(P - 8.0 / 3.0) / (8.0 / 3.0);
        const double dev_i = std::abs(I - 2.0) / 2.0;
        res.metrics.emplace_back("const_density_P2_dev", dev_p);
        res.metrics.emplace_back("const_density_riesz_dev", dev_i);
        if (dev_p > 1e-4 || dev_i > 1e-4) {
          res.passed = false;
          res.detail = "constant-density hand values missed";
        }
      }
    }
  }
  res.metrics.emplace_back("max_gamma", worst_gamma);
  if (res.passed) res.detail = "max comparability factor = " + fmt(worst_gamma);
  return res;
}

SuiteResult suite_upper_bound(const VerifyOptions& opt) {
  SuiteResult res{"upper-bound", true, "", {}};
  std::mt19937_64 rng(opt.seed + 41);
  std::uniform_real_distribution<double> rad(0.5, 2.0);
  const int cases = opt.quick ? 5 : opt.cases;
  for (double p : {2.0, 2.5, 3.0, 4.0}) {
    double rmin = 1e300, rmax = 0.0;
    PotentialParams prm = params_for(p, 2);
    for (int c = 0; c < cases; ++c) {
      const SpatialMeasure nu = random_spatial(rng, 2);
      std::vector<double> x0(2, 0.0);
      const auto mu = SpaceTimeMeasure::time_product(nu);
      const double rho = rad(rng);
      const double P = parabolic_potential(prm, mu, x0, 0.0, rho).value;
      const double U = upper_bound_sum(prm, mu, x0, 0.0, rho);
      if (P <= 0.0) continue;
      const double ratio = U / P;
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
      if (U + 1e-12 < P) {
        res.passed = false;
        res.detail = "upper bound fell below the potential";
      }
    }
    res.metrics.emplace_back("ratio_min_p" + fmt(p), rmin);
    res.metrics.emplace_back("ratio_max_p" + fmt(p), rmax);
    // the ratio is a measured constant; it must be stable across the suite
    if (rmax > 0.0 && (rmax - rmin) / rmax > 0.2) {
      res.passed = false;
      res.detail = "upper/potential ratio unstable (spread > ±10%) at p=" + fmt(p);
    }
  }
  if (res.passed) res.detail = "upper_bound_sum/P ratios stable";
  return res;
}

SuiteResult suite_rearrangement(const VerifyOptions& opt) {
  SuiteResult res{"rearrangement", true, "", {}};
  std::mt19937_64 rng(opt.seed + 53);
  std::uniform_real_distribution<double> val(0.0, 3.0);
  for (int c = 0; c < 10 && res.passed; ++c) {
    GridSpec spec = unit_grid(1, 16, 8, 0.5);
    GridFunction f{spec, {}};
    f.values.resize(spec.value_count());
    for (auto& v : f.values) v = val(rng) - 1.0;  // signed data
    const Rearrangement r = rearrange(f);
    // mass identity
    double mass = 0.0;
    for (double v : f.values) mass += std::abs(v) * spec.cell_volume();
    if (std::abs(mass - r.total_mass) > 1e-12 * std::max(1.0, mass)) {
      res.passed = false;
      res.detail = "mass identity violated";
      break;
    }
    // equimeasurability at the step thresholds
    for (double t : {0.1, 0.5, 1.0, 1.7}) {
      double lvl = 0.0;
      for (double v : f.values)
        if (std::abs(v) > t) lvl += spec.cell_volume();
      double lvl_r = 0.0;
      for (std::size_t k = 0; k < r.values.size(); ++k)
        if (r.values[k] > t) lvl_r += r.breakpoints[k + 1] - r.breakpoints[k];
      if (std::abs(lvl - lvl_r) > 1e-12) {
        res.passed = false;
        res.detail = "equimeasurability violated at t=" + fmt(t);
        break;
      }
    }
    // f* <= f** on a sample
    for (double s : {0.01, 0.1, 0.3, 0.9}) {
      if (r.value_at(s) > double_star(r, s) + 1e-14) {
        res.passed = false;
        res.detail = "f* exceeded f**";
        break;
      }
    }
  }
  if (res.passed) res.detail = "rearrangement identities exact on step data";
  return res;
}

SuiteResult suite_remark_bounds(const VerifyOptions& opt) {
  SuiteResult res{"remark-bounds", true, "", {}};
  std::mt19937_64 rng(opt.seed + 67);
  std::uniform_real_distribution<double> val(0.0, 2.0);
  const int cases = opt.quick ? 5 : opt.cases;
  double min_margin_leb = 1e300, min_margin_lor = 1e300;
  for (int c = 0; c < cases; ++c) {
    GridSpec spec;
    spec.origin = {0.0};
    spec.spacing = {1.0 / 16};
    spec.cells = {16};
    spec.t_origin = 0.0;
    spec.t_spacing = 1.0 / 16;
    spec.t_cells = 16;
    std::vector<double> v(spec.value_count());
    for (auto& x : v) x = val(rng);
    GridFunction f{spec, v};
    const auto mu = SpaceTimeMeasure::grid_density(spec, std::move(v));
    PotentialParams prm = params_for(3.0, 1);
    std::vector<double> x0{0.5};
    for (double rho : {0.25, 0.5}) {
      const double dval = dp(prm, mu, x0, 0.5, rho).value;
      for (auto [q, r] : {std::pair{2.0, 2.0}, {4.0, 2.0}, {2.0, 4.0}}) {
        const double nrm = mixed_norm(f, q, AxisGroup::space, r);
        const double bound = remark_bound_lebesgue(prm, nrm, rho, q, r);
        if (dval > 0.0) min_margin_leb = std::min(min_margin_leb, bound / dval);
        if (bound + 1e-12 < dval) {
          res.passed = false;
          res.detail = "Lebesgue remark bound violated";
        }
      }
      const auto lb = remark_bound_lorentz(prm, f, rho, 2.0);
      if (dval > 0.0) min_margin_lor = std::min(min_margin_lor, lb.per_radius / dval);
      if (lb.per_radius + 1e-12 < dval) {
        res.passed = false;
        res.detail = "Lorentz remark bound violated";
      }
    }
  }
  res.metrics.emplace_back("min_margin_lebesgue", min_margin_leb);
  res.metrics.emplace_back("min_margin_lorentz", min_margin_lor);
  if (res.passed) res.detail = "both remark bounds dominate dp";
  return res;
}

GridSolution negative_fixture() {
  GridSolution g;
  g.geometry = Geometry::line;
  g.N = 1;
  g.p = 3.0;
  g.x_lo = -1.0;
  g.h = 0.025;
  g.nx = 80;
  g.t_lo = 0.0;
  g.k = 0.025;
  g.nt = 80;
  g.u.assign(static_cast<std::size_t>(g.nx + 1) * (g.nt + 1), -1.0);
  return g;
}

SuiteResult suite_km_zero(const VerifyOptions&) {
  SuiteResult res{"km-zero", true, "", {}};
  GridSolution g = negative_fixture();
  KmParams prm;
  prm.pot = params_for(3.0, 1);
  prm.j_max = 60;
  prm.delta_stop_rel = 0.0;
  const double rho = 0.5, theta = 0.5;
  const auto r = run(g, SpaceTimeMeasure::zero(1), 0.0, 1.0, rho, theta, prm);
  const double expect = 2.0 * r.delta_rho_theta;
  const double dev = std::abs(r.l_inf - expect);
  res.metrics.emplace_back("l_inf_dev", dev);
  res.passed = dev <= 1e-10;
  res.detail = "l_inf deviation from 2 delta_{rho,theta} = " + fmt(dev);
  return res;
}

SuiteResult suite_km_invariants(const VerifyOptions& opt) {
  SuiteResult res{"km-invariants", true, "", {}};
  const int nx = opt.quick ? 96 : 160, nt = opt.quick ? 96 : 200;
  struct Fixture {
    GridSolution u;
    double p;
  };
  std::vector<Fixture> fixtures;
  fixtures.push_back({sample_exact(ExactSolution::heat(1), Geometry::line, -2.0, 2.0,
                                   nx, 0.5, 2.5, nt),
                      2.0});
  fixtures.push_back({sample_exact(ExactSolution::barenblatt_profile(3.0, 1, 0.6),
                                   Geometry::line, -2.0, 2.0, nx, 0.5, 2.5, nt),
                      3.0});
  int root_steps = 0;
  for (auto& fx : fixtures) {
    KmParams prm;
    prm.pot = params_for(fx.p, 1);
    prm.j_max = 30;
    const double rho = 0.4;
    const double theta = fx.p == 2.0 ? 0.2 : 0.4;
    const auto r = run(fx.u, SpaceTimeMeasure::zero(1), 0.3, 1.5, rho, theta, prm);
    double prev_delta = 2.0 * r.delta_rho_theta;
    double prev_hh = fx.p > 2.0
                         ? eps_p(fx.p) * std::pow(prev_delta, 2.0 - fx.p) * std::pow(rho, fx.p)
                         : 0.0;
    for (const auto& st : r.states) {
      if (st.delta + 1e-15 < 0.5 * prev_delta) {
        res.passed = false;
        res.detail = "delta_j >= delta_{j-1}/2 violated at j=" + std::to_string(st.j);
      }
      if (st.j > 0 && st.delta > 0.0 && prev_hh > 0.0 &&
          st.time_halfheight > 0.25 * prev_hh * (1.0 + 1e-12)) {
        res.passed = false;
        res.detail = "cylinder embedding Q_j in half Q_{j-1} violated";
      }
      if (st.delta > 0.0 && !std::isinf(st.tau) &&
          eps_p(fx.p) * std::pow(st.delta, 2.0 - fx.p) > st.tau * (1.0 + 1e-12)) {
        res.passed = false;
        res.detail = "cylinder embedding in Q_{rho_j,tau_j rho_j^p} violated";
      }
      if (st.branch == KmBranch::root) {
        ++root_steps;
        if (std::abs(st.a_value - prm.pot.kappa) > 1e-6 * prm.pot.kappa) {
          res.passed = false;
          res.detail = "root branch missed kappa";
        }
      }
      prev_delta = st.delta;
      prev_hh = st.time_halfheight;
    }
    // proof-side guarantee at a Lebesgue point
    const double val = fx.u.interp(0.3, 1.5);
    if (r.l_inf + 1e-9 < val) {
      res.passed = false;
      res.detail = "l_inf fell below u_+(y,s)";
    }
  }
  res.metrics.emplace_back("root_steps", root_steps);
  if (res.passed) res.detail = "per-step invariants hold on heat/barenblatt traces";
  return res;
}

}  // namespace

std::vector<SuiteResult> run_verify_suites(const VerifyOptions& opt) {
  std::vector<SuiteResult> all;
  auto want = [&](const std::string& n) {
    return opt.suites.empty() ||
           std::find(opt.suites.begin(), opt.suites.end(), n) != opt.suites.end();
  };
  if (want("autonomous")) all.push_back(suite_autonomous(opt));
  if (want("p2-exact")) all.push_back(suite_p2_exact(opt));
  if (want("tau-scan")) all.push_back(suite_tau_scan(opt));
  if (want("scaling")) all.push_back(suite_scaling(opt));
  if (want("riesz")) all.push_back(suite_riesz(opt));
  if (want("upper-bound")) all.push_back(suite_upper_bound(opt));
  if (want("rearrangement")) all.push_back(suite_rearrangement(opt));
  if (want("remark-bounds")) all.push_back(suite_remark_bounds(opt));
  if (want("km-zero")) all.push_back(suite_km_zero(opt));
  if (want("km-invariants")) all.push_back(suite_km_invariants(opt));
  return all;
}

}  // namespace pwolff
