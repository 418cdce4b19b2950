#include "pwolff/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
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

double sphere_area(int n) { return n * unit_ball_volume(n); }

}  // namespace

void GridSolution::validate() const {
  if (nx < 1 || nt < 1 || !(h > 0.0) || !(k > 0.0))
    throw std::invalid_argument("GridSolution: empty or degenerate grid");
  if (geometry == Geometry::radial && x_lo != 0.0)
    throw std::invalid_argument("GridSolution: radial grids start at r = 0");
  if (geometry == Geometry::line && N != 1)
    throw std::invalid_argument("GridSolution: line geometry is 1-D");
  if (u.size() != static_cast<std::size_t>(nx + 1) * (nt + 1))
    throw std::invalid_argument("GridSolution: value count mismatch");
  for (double v : u)
    if (!std::isfinite(v)) throw std::invalid_argument("GridSolution: non-finite value");
}

double GridSolution::interp(double xq, double tq) const {
  const double fi = std::clamp((xq - x_lo) / h, 0.0, static_cast<double>(nx));
  const double fn = std::clamp((tq - t_lo) / k, 0.0, static_cast<double>(nt));
  const int i = std::min(static_cast<int>(fi), nx - 1);
  const int n = std::min(static_cast<int>(fn), nt - 1);
  const double ax = fi - i, at_ = fn - n;
  return (1 - ax) * (1 - at_) * at(i, n) + ax * (1 - at_) * at(i + 1, n) +
         (1 - ax) * at_ * at(i, n + 1) + ax * at_ * at(i + 1, n + 1);
}

double GridSolution::max_abs() const {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

GridSolution apply_pointwise(const GridSolution& g,
                             const std::function<double(double)>& f) {
  GridSolution out = g;
  for (double& v : out.u) v = f(v);
  return out;
}

double heat_kernel(int N, double r, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be positive");
  if (N < 1) throw std::invalid_argument("heat_kernel: N must be positive");
  return std::pow(4.0 * std::numbers::pi * t, -0.5 * N) * std::exp(-r * r / (4.0 * t));
}

double barenblatt(double p, int N, double C, double r, double t) {
  if (!(p > 2.0)) throw std::invalid_argument("barenblatt: requires p > 2");
  if (!(t > 0.0)) throw std::invalid_argument("barenblatt: t must be positive");
  const double L = N * (p - 2.0) + p;
  const double kp = (p - 2.0) / p * std::pow(L, -1.0 / (p - 1.0));
  const double xi = std::abs(r) * std::pow(t, -1.0 / L);
  const double core = C - kp * std::pow(xi, p / (p - 1.0));
  if (core <= 0.0) return 0.0;
  return std::pow(t, -static_cast<double>(N) / L) * std::pow(core, (p - 1.0) / (p - 2.0));
}

ExactSolution ExactSolution::heat(int N) {
  ExactSolution e;
  e.kind = Kind::heat_kernel;
  e.p = 2.0;
  e.N = N;
  return e;
}

ExactSolution ExactSolution::barenblatt_profile(double p, int N, double C) {
  if (!(p > 2.0)) throw std::invalid_argument("ExactSolution: barenblatt requires p > 2");
  ExactSolution e;
  e.kind = Kind::barenblatt;
  e.p = p;
  e.N = N;
  e.C = C;
  return e;
}

double ExactSolution::operator()(double r, double t) const {
  return kind == Kind::heat_kernel ? heat_kernel(N, r, t) : barenblatt(p, N, C, r, t);
}

GridSolution sample_exact(const ExactSolution& ex, Geometry geom, double x_lo,
                          double x_hi, int nx, double t_lo, double t_hi, int nt) {
  GridSolution g;
  g.geometry = geom;
  g.N = geom == Geometry::line ? 1 : ex.N;
  g.p = ex.p;
  g.x_lo = x_lo;
  g.h = (x_hi - x_lo) / nx;
  g.nx = nx;
  g.t_lo = t_lo;
  g.k = (t_hi - t_lo) / nt;
  g.nt = nt;
  g.eps_reg = 0.0;
  g.u.resize(static_cast<std::size_t>(nx + 1) * (nt + 1));
  for (int n = 0; n <= nt; ++n)
    for (int i = 0; i <= nx; ++i) g.at(i, n) = ex(std::abs(g.x(i)), g.t(n));
  g.validate();
  return g;
}

void SolveConfig::validate() const {
  if (!(p >= 2.0)) throw std::invalid_argument("solve: p must be >= 2");
  if (nx < 3 || nt < 1) throw std::invalid_argument("solve: grid too small");
  if (!(x_hi > x_lo) || !(t_hi > t_lo))
    throw std::invalid_argument("solve: empty domain");
  if (geometry == Geometry::radial && x_lo != 0.0)
    throw std::invalid_argument("solve: radial domain must start at r = 0");
  if (geometry == Geometry::line && N != 1)
    throw std::invalid_argument("solve: line geometry is 1-D");
  if (max_sweeps < 1) throw std::invalid_argument("solve: max_sweeps must be >= 1");
}

namespace {

// Tridiagonal solve (Thomas); diag is strictly dominant for the implicit step.
void thomas(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
            std::vector<double>& d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

struct CellGeom {
  std::vector<double> cv;    // cell "volume" per node (radial: shell/sphere-area)
  std::vector<double> face;  // face weight r^{N-1} (line: 1), size nx
};

CellGeom make_cells(const SolveConfig& cfg) {
  CellGeom g;
  const int nx = cfg.nx;
  const double h = (cfg.x_hi - cfg.x_lo) / nx;
  g.cv.resize(nx + 1);
  g.face.resize(nx);
  if (cfg.geometry == Geometry::line) {
    for (int i = 0; i <= nx; ++i) g.cv[i] = (i == 0 || i == nx) ? 0.5 * h : h;
    std::fill(g.face.begin(), g.face.end(), 1.0);
    return g;
  }
  const int N = cfg.N;
  auto rp = [&](int i) {  // face radius i+1/2 clipped to the domain
    return std::clamp((i + 0.5) * h, 0.0, cfg.x_hi);
  };
  for (int i = 0; i <= nx; ++i) {
    const double r_lo = i == 0 ? 0.0 : rp(i - 1);
    const double r_hi = i == nx ? cfg.x_hi : rp(i);
    g.cv[i] = (std::pow(r_hi, N) - std::pow(r_lo, N)) / N;
  }
  for (int i = 0; i < nx; ++i) g.face[i] = std::pow(rp(i), N - 1);
  return g;
}

// Mass of the measure in node cell i over the open time window (t_a, t_b).
double cell_source_mass(const SpaceTimeMeasure& mu, const SolveConfig& cfg,
                        const CellGeom& cells, int i, double t_a, double t_b) {
  if (mu.is_zero() || mu.kind() == SpaceTimeMeasure::Kind::atom_list) return 0.0;
  const double h = (cfg.x_hi - cfg.x_lo) / cfg.nx;
  const double tc = 0.5 * (t_a + t_b), th = 0.5 * (t_b - t_a);
  if (cfg.geometry == Geometry::line) {
    const double xl = std::max(cfg.x_lo, cfg.x_lo + (i - 0.5) * h);
    const double xr = std::min(cfg.x_hi, cfg.x_lo + (i + 0.5) * h);
    return mu.cylinder_mass(
        Cylinder({0.5 * (xl + xr)}, tc, 0.5 * (xr - xl), th));
  }
  // radial shell = difference of centered balls; divide by the sphere area so
  // that deposits are in the same per-"cv" units as the line case.
  const double r_lo = i == 0 ? 0.0 : std::clamp((i - 0.5) * h, 0.0, cfg.x_hi);
  const double r_hi = i == cfg.nx ? cfg.x_hi : std::clamp((i + 0.5) * h, 0.0, cfg.x_hi);
  std::vector<double> c0(cfg.N, 0.0);
  const double outer = mu.cylinder_mass(Cylinder(c0, tc, r_hi, th));
  const double inner = r_lo > 0.0 ? mu.cylinder_mass(Cylinder(c0, tc, r_lo, th)) : 0.0;
  return (outer - inner) / sphere_area(cfg.N);
}

// Atom deposits: instantaneous additions at the first node time >= atom time.
void deposit_atoms(const SpaceTimeMeasure& mu, double sign, const SolveConfig& cfg,
                   const CellGeom& cells, double t_prev, double t_now,
                   std::vector<double>& u, bool include_left_end) {
  if (mu.kind() != SpaceTimeMeasure::Kind::atom_list) return;
  const double h = (cfg.x_hi - cfg.x_lo) / cfg.nx;
  const double area = cfg.geometry == Geometry::radial ? sphere_area(cfg.N) : 1.0;
  for (std::size_t a = 0; a < mu.atom_count(); ++a) {
    const double ta = mu.atom_time(a);
    const bool in_window = include_left_end ? (ta >= t_prev && ta <= t_now)
                                            : (ta > t_prev && ta <= t_now);
    if (!in_window) continue;
    auto pos = mu.atom_position(a);
    double r = 0.0;
    if (cfg.geometry == Geometry::radial) {
      for (double c : pos) r += c * c;
      r = std::sqrt(r);
    } else {
      r = pos[0];
    }
    if (r < cfg.x_lo - 0.5 * h || r > cfg.x_hi + 0.5 * h) continue;
    const int i = std::clamp(static_cast<int>(std::lround((r - cfg.x_lo) / h)), 0, cfg.nx);
    u[static_cast<std::size_t>(i)] += sign * mu.atom_weight(a) / (cells.cv[i] * area);
  }
}

}  // namespace

GridSolution solve(const SolveConfig& cfg, const SignedMeasure& mu, SolveStats* stats) {
  cfg.validate();
  mu.validate();
  if ((cfg.geometry == Geometry::line && mu.dim() != 1) ||
      (cfg.geometry == Geometry::radial && mu.dim() != cfg.N))
    throw std::invalid_argument("solve: measure dimension does not match geometry");

  const int nx = cfg.nx, nt = cfg.nt;
  const double h = (cfg.x_hi - cfg.x_lo) / nx;
  const double k = (cfg.t_hi - cfg.t_lo) / nt;
  const double eps = cfg.eps_reg < 0.0 ? h : cfg.eps_reg;
  const CellGeom cells = make_cells(cfg);

  GridSolution g;
  g.geometry = cfg.geometry;
  g.N = cfg.N;
  g.p = cfg.p;
  g.x_lo = cfg.x_lo;
  g.h = h;
  g.nx = nx;
  g.t_lo = cfg.t_lo;
  g.k = k;
  g.nt = nt;
  g.eps_reg = eps;
  g.u.assign(static_cast<std::size_t>(nx + 1) * (nt + 1), 0.0);

  std::vector<double> cur(nx + 1, 0.0);
  for (int i = 0; i <= nx; ++i)
    cur[i] = cfg.initial ? cfg.initial(cfg.x_lo + i * h) : 0.0;
  deposit_atoms(mu.plus, +1.0, cfg, cells, cfg.t_lo, cfg.t_lo, cur, true);
  deposit_atoms(mu.minus, -1.0, cfg, cells, cfg.t_lo, cfg.t_lo, cur, true);
  for (int i = 0; i <= nx; ++i) g.at(i, 0) = cur[i];

  auto coeff = [&](double grad) {
    return std::pow(grad * grad + eps * eps, 0.5 * (cfg.p - 2.0));
  };

  std::vector<double> w(nx + 1), lo(nx + 1), dg(nx + 1), up(nx + 1), rhs(nx + 1),
      af(nx);
  SolveStats st;

  for (int n = 0; n < nt; ++n) {
    const double t_prev = cfg.t_lo + n * k;
    const double t_now = t_prev + k;
    deposit_atoms(mu.plus, +1.0, cfg, cells, t_prev, t_now, cur, false);
    deposit_atoms(mu.minus, -1.0, cfg, cells, t_prev, t_now, cur, false);

    std::vector<double> base = cur;  // after deposits, before diffusion
    for (int i = 0; i <= nx; ++i) {
      const double src = cell_source_mass(mu.plus, cfg, cells, i, t_prev, t_now) -
                         cell_source_mass(mu.minus, cfg, cells, i, t_prev, t_now);
      base[i] += src / cells.cv[i];
    }

    w = cur;
    double update = kInf;
    int sweep = 0;
    for (; sweep < cfg.max_sweeps; ++sweep) {
      for (int i = 0; i < nx; ++i) af[i] = cells.face[i] * coeff((w[i + 1] - w[i]) / h);
      const bool dirichlet = cfg.boundary == BoundaryKind::dirichlet;
      // Assemble cv_i u_i - (k/h)[af_i (u_{i+1}-u_i) - af_{i-1}(u_i - u_{i-1})] = cv_i base_i
      for (int i = 0; i <= nx; ++i) {
        const double fl = i > 0 ? af[i - 1] : 0.0;
        const double fr = i < nx ? af[i] : 0.0;
        lo[i] = -k / h * fl;
        up[i] = -k / h * fr;
        dg[i] = cells.cv[i] + k / h * (fl + fr);
        rhs[i] = cells.cv[i] * base[i];
      }
      if (dirichlet) {
        const double bl = cfg.boundary_value ? cfg.boundary_value(cfg.x_lo, t_now) : 0.0;
        const double br = cfg.boundary_value ? cfg.boundary_value(cfg.x_hi, t_now) : 0.0;
        // Radial grids have a symmetry (no-flux) condition at r = 0.
        if (cfg.geometry == Geometry::line) {
          dg[0] = 1.0;
          up[0] = 0.0;
          rhs[0] = bl;
        }
        dg[nx] = 1.0;
        lo[nx] = 0.0;
        rhs[nx] = br;
      }
      std::vector<double> la = lo, lb = dg, lc = up, ld = rhs;
      thomas(la, lb, lc, ld);
      update = 0.0;
      double scale = 1.0;
      for (int i = 0; i <= nx; ++i) {
        update = std::max(update, std::abs(ld[i] - w[i]));
        scale = std::max(scale, std::abs(ld[i]));
        w[i] = ld[i];
      }
      ++st.total_sweeps;
      if (!std::isfinite(update))
        throw SolverError("solve: fixed-point sweep diverged at step " + std::to_string(n));
      if (update <= cfg.sweep_tol * scale) {
        ++sweep;
        break;
      }
    }
    st.max_sweeps_in_step = std::max(st.max_sweeps_in_step, sweep);
    st.last_update = update;
    cur = w;
    for (int i = 0; i <= nx; ++i) {
      if (!std::isfinite(cur[i]))
        throw SolverError("solve: NaN detected at step " + std::to_string(n + 1));
      g.at(i, n + 1) = cur[i];
    }
  }
  if (stats) *stats = st;
  return g;
}

double spatial_integral(const GridSolution& g, int time_index) {
  if (time_index < 0 || time_index > g.nt)
    throw std::invalid_argument("spatial_integral: time index out of range");
  SolveConfig cfg;
  cfg.geometry = g.geometry;
  cfg.N = g.N;
  cfg.p = g.p;
  cfg.x_lo = g.x_lo;
  cfg.x_hi = g.x_hi();
  cfg.nx = g.nx;
  const CellGeom cells = make_cells(cfg);
  const double area = g.geometry == Geometry::radial ? sphere_area(g.N) : 1.0;
  double acc = 0.0;
  for (int i = 0; i <= g.nx; ++i) acc += g.at(i, time_index) * cells.cv[i] * area;
  return acc;
}

double TestBump::value(double x, double t) const {
  return BumpProfile::value((x - center_x) / rx) * BumpProfile::value((t - center_t) / rt);
}

double TestBump::dx(double x, double t) const {
  return BumpProfile::slope((x - center_x) / rx) / rx *
         BumpProfile::value((t - center_t) / rt);
}

double TestBump::dt(double x, double t) const {
  return BumpProfile::value((x - center_x) / rx) *
         BumpProfile::slope((t - center_t) / rt) / rt;
}

double weak_residual(const GridSolution& g, const SignedMeasure& mu,
                     const TestBump& theta) {
  g.validate();
  const double sup_lo = theta.center_x - theta.rx, sup_hi = theta.center_x + theta.rx;
  if (g.geometry == Geometry::line &&
      (sup_lo < g.x_lo - 1e-12 || sup_hi > g.x_hi() + 1e-12))
    throw std::invalid_argument("weak_residual: bump support exceeds the domain");
  if (g.geometry == Geometry::radial && sup_hi > g.x_hi() + 1e-12)
    throw std::invalid_argument("weak_residual: bump support exceeds the domain");
  const double t1 = std::max(g.t_lo, theta.center_t - theta.rt);
  const double t2 = std::min(g.t_hi(), theta.center_t + theta.rt);
  if (!(t2 > t1)) return 0.0;

  const double area = g.geometry == Geometry::radial ? sphere_area(g.N) : 1.0;
  auto node_weight = [&](int i) {
    const double half = 0.5 * g.h;
    const double xl = std::max(g.x_lo, g.x(i) - half);
    const double xr = std::min(g.x_hi(), g.x(i) + half);
    if (g.geometry == Geometry::line) return xr - xl;
    return area * (std::pow(xr, g.N) - std::pow(std::max(xl, 0.0), g.N)) / g.N;
  };

  // boundary terms of the time slab
  auto slice_term = [&](double t) {
    double acc = 0.0;
    for (int i = 0; i <= g.nx; ++i)
      acc += node_weight(i) * g.interp(g.x(i), t) * theta.value(g.x(i), t);
    return acc;
  };

  double grad_term = 0.0, ut_term = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    const double tw = overlap(g.t(n) - 0.5 * g.k, g.t(n) + 0.5 * g.k, t1, t2);
    if (tw <= 0.0) continue;
    const double tn = g.t(n);
    for (int i = 0; i < g.nx; ++i) {
      const double xm = g.x(i) + 0.5 * g.h;
      const double grad = (g.at(i + 1, n) - g.at(i, n)) / g.h;
      const double flux = std::pow(std::abs(grad), g.p - 2.0) * grad;
      const double fw = g.geometry == Geometry::line
                            ? g.h
                            : area * std::pow(xm, g.N - 1) * g.h;
      grad_term += tw * fw * flux * theta.dx(xm, tn);
    }
    for (int i = 0; i <= g.nx; ++i)
      ut_term += tw * node_weight(i) * g.at(i, n) * theta.dt(g.x(i), tn);
  }

  // theta d(mu) over the slab
  std::vector<double> blo, bhi;
  if (g.geometry == Geometry::line) {
    blo = {std::max(g.x_lo, sup_lo)};
    bhi = {std::min(g.x_hi(), sup_hi)};
  } else {
    blo.assign(g.N, -sup_hi);
    bhi.assign(g.N, sup_hi);
  }
  auto theta_fn = [&](std::span<const double> xv, double t) {
    double r = 0.0;
    if (g.geometry == Geometry::radial) {
      for (double c : xv) r += c * c;
      r = std::sqrt(r);
    } else {
      r = xv[0];
    }
    return theta.value(r, t);
  };
  const double mu_term = mu.plus.integrate(theta_fn, blo, bhi, t1, t2, 96) -
                         mu.minus.integrate(theta_fn, blo, bhi, t1, t2, 96);

  return slice_term(t2) - slice_term(t1) + grad_term - mu_term - ut_term;
}

namespace {

// average of u over B_rho(y) x (s-hh, s+hh), node-cell midpoint quadrature
double cylinder_average(const GridSolution& g, double y, double s, double rho,
                        double hh, double* oscillation) {
  const double area = g.geometry == Geometry::radial ? sphere_area(g.N) : 1.0;
  if (g.geometry == Geometry::radial && std::abs(y) > 1e-12 * (std::abs(y) + 1))
    throw std::invalid_argument("cylinder averages on radial grids must center at 0");
  double wsum = 0.0, acc = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    const double tw = overlap(g.t(n) - 0.5 * g.k, g.t(n) + 0.5 * g.k, s - hh, s + hh);
    if (tw <= 0.0) continue;
    for (int i = 0; i <= g.nx; ++i) {
      double xw;
      if (g.geometry == Geometry::line) {
        xw = overlap(std::max(g.x_lo, g.x(i) - 0.5 * g.h),
                     std::min(g.x_hi(), g.x(i) + 0.5 * g.h), y - rho, y + rho);
      } else {
        const double rl = std::max(0.0, g.x(i) - 0.5 * g.h);
        const double rr = std::min({g.x_hi(), g.x(i) + 0.5 * g.h, rho});
        xw = rr > rl ? area * (std::pow(rr, g.N) - std::pow(rl, g.N)) / g.N : 0.0;
      }
      if (xw <= 0.0) continue;
      acc += tw * xw * g.at(i, n);
      wsum += tw * xw;
    }
  }
  const double avg = wsum > 0.0 ? acc / wsum : 0.0;
  if (oscillation) {
    double osc = 0.0;
    for (int n = 0; n <= g.nt; ++n) {
      const double tw = overlap(g.t(n) - 0.5 * g.k, g.t(n) + 0.5 * g.k, s - hh, s + hh);
      if (tw <= 0.0) continue;
      for (int i = 0; i <= g.nx; ++i) {
        double xw;
        if (g.geometry == Geometry::line) {
          xw = overlap(std::max(g.x_lo, g.x(i) - 0.5 * g.h),
                       std::min(g.x_hi(), g.x(i) + 0.5 * g.h), y - rho, y + rho);
        } else {
          const double rl = std::max(0.0, g.x(i) - 0.5 * g.h);
          const double rr = std::min({g.x_hi(), g.x(i) + 0.5 * g.h, rho});
          xw = rr > rl ? area * (std::pow(rr, g.N) - std::pow(rl, g.N)) / g.N : 0.0;
        }
        if (xw <= 0.0) continue;
        osc += tw * xw * std::abs(g.at(i, n) - avg);
      }
    }
    *oscillation = wsum > 0.0 ? osc / wsum : 0.0;
  }
  return avg;
}

}  // namespace

LebesguePointEstimate lebesgue_point_value(const GridSolution& g, double y, double s,
                                           std::span<const double> rhos) {
  g.validate();
  if (rhos.empty()) throw std::invalid_argument("lebesgue_point_value: empty scale list");
  std::vector<double> avgs;
  double osc_first = 0.0, osc_last = 0.0;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    const double rho = rhos[i];
    if (!(rho > 0.0)) throw std::invalid_argument("lebesgue_point_value: rho must be > 0");
    const double hh = std::pow(rho, g.p);
    if (y - rho < g.x_lo - 1e-12 || y + rho > g.x_hi() + 1e-12 ||
        s - hh < g.t_lo - 1e-12 || s + hh > g.t_hi() + 1e-12)
      throw std::invalid_argument("lebesgue_point_value: cylinder leaves the grid");
    double osc = 0.0;
    avgs.push_back(cylinder_average(g, y, s, rho, hh, &osc));
    if (i == 0) osc_first = osc;
    osc_last = osc;
  }
  LebesguePointEstimate est;
  est.oscillation = osc_last;
  const std::size_t m = avgs.size();
  if (m >= 3) {
    const double d1 = avgs[m - 2] - avgs[m - 3];
    const double d2 = avgs[m - 1] - avgs[m - 2];
    const double den = d2 - d1;
    est.value = std::abs(den) > 1e-14 * (std::abs(d1) + std::abs(d2) + 1e-300)
                    ? avgs[m - 1] - d2 * d2 / den
                    : avgs[m - 1];
    if (!std::isfinite(est.value)) est.value = avgs[m - 1];
  } else {
    est.value = avgs[m - 1];
  }
  const double scale = g.max_abs() + 1e-300;
  est.stable = osc_last <= 0.5 * osc_first + 1e-10 * scale || osc_last <= 1e-8 * scale;
  return est;
}

double cylinder_average_power(const GridSolution& g, double y, double s, double rho,
                              double theta, double lambda, double p, Sign sign) {
  g.validate();
  if (!(rho > 0.0) || !(theta > 0.0))
    throw std::invalid_argument("cylinder_average_power: rho, theta must be positive");
  if (p == 2.0 && rho * rho > theta * (1.0 + 1e-12))
    throw std::invalid_argument("cylinder_average_power: p = 2 requires rho^2 <= theta");
  if (y - rho < g.x_lo - 1e-12 || y + rho > g.x_hi() + 1e-12 ||
      s - theta < g.t_lo - 1e-12 || s + theta > g.t_hi() + 1e-12)
    throw std::invalid_argument("cylinder_average_power: cylinder leaves the grid");
  const double q = (1.0 + lambda) * (p - 1.0);
  const double area = g.geometry == Geometry::radial ? sphere_area(g.N) : 1.0;
  double acc = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    const double tw = overlap(g.t(n) - 0.5 * g.k, g.t(n) + 0.5 * g.k, s - theta, s + theta);
    if (tw <= 0.0) continue;
    for (int i = 0; i <= g.nx; ++i) {
      double xw;
      if (g.geometry == Geometry::line) {
        xw = overlap(std::max(g.x_lo, g.x(i) - 0.5 * g.h),
                     std::min(g.x_hi(), g.x(i) + 0.5 * g.h), y - rho, y + rho);
      } else {
        if (std::abs(y) > 1e-12)
          throw std::invalid_argument("cylinder_average_power: radial grids center at 0");
        const double rl = std::max(0.0, g.x(i) - 0.5 * g.h);
        const double rr = std::min({g.x_hi(), g.x(i) + 0.5 * g.h, rho});
        xw = rr > rl ? area * (std::pow(rr, g.N) - std::pow(rl, g.N)) / g.N : 0.0;
      }
      if (xw <= 0.0) continue;
      const double v = sign == Sign::plus ? std::max(g.at(i, n), 0.0)
                                          : std::max(-g.at(i, n), 0.0);
      if (v > 0.0) acc += tw * xw * std::pow(v, q);
    }
  }
  const double inner = std::pow(rho, -(g.N + p)) * acc;
  return inner > 0.0 ? std::pow(inner, 1.0 / (1.0 + lambda * (p - 1.0))) : 0.0;
}

// ---------------------------------------------------------------------------
// io

void save_solution(const GridSolution& g, const std::string& path) {
  g.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << "pwolff-solution v1\n";
  out << (g.geometry == Geometry::line ? "line" : "radial") << "\n";
  out << g.N << " " << num(g.p) << "\n";
  out << num(g.x_lo) << " " << num(g.h) << " " << g.nx << "\n";
  out << num(g.t_lo) << " " << num(g.k) << " " << g.nt << "\n";
  out << num(g.eps_reg) << "\n";
  for (std::size_t i = 0; i < g.u.size(); ++i)
    out << num(g.u[i]) << ((i + 1) % 8 == 0 || i + 1 == g.u.size() ? "\n" : " ");
}

GridSolution load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open solution file: " + path);
  std::string magic;
  std::getline(in, magic);
  if (magic != "pwolff-solution v1")
    throw ParseError("bad magic line in " + path);
  GridSolution g;
  std::string geom;
  in >> geom;
  if (geom == "line")
    g.geometry = Geometry::line;
  else if (geom == "radial")
    g.geometry = Geometry::radial;
  else
    throw ParseError("bad geometry '" + geom + "' in " + path);
  in >> g.N >> g.p >> g.x_lo >> g.h >> g.nx >> g.t_lo >> g.k >> g.nt >> g.eps_reg;
  if (!in) throw ParseError("truncated solution header in " + path);
  g.u.resize(static_cast<std::size_t>(g.nx + 1) * (g.nt + 1));
  for (auto& v : g.u)
    if (!(in >> v)) throw ParseError("truncated solution values in " + path);
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(e.what()) + " in " + path);
  }
  return g;
}

void save_snapshots_csv(const GridSolution& g, const std::string& path,
                        int time_stride) {
  if (time_stride < 1) throw std::invalid_argument("save_snapshots_csv: bad stride");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  out << "t,x,u\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (int n = 0; n <= g.nt; n += time_stride)
    for (int i = 0; i <= g.nx; ++i)
      out << num(g.t(n)) << "," << num(g.x(i)) << "," << num(g.at(i, n)) << "\n";
}

}  // namespace pwolff
