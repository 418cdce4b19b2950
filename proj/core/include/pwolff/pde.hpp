#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pwolff/measure.hpp"

namespace pwolff {

enum class Geometry { line, radial };
enum class BoundaryKind { dirichlet, zero_flux };
enum class Sign { plus, minus };

// Node-based space-time solution grid. Nodes x_i = x_lo + i h (i = 0..nx) and
// t_n = t_lo + n k (n = 0..nt); node (i,n) owns the cell
// [x_i - h/2, x_i + h/2] x [t_n - k/2, t_n + k/2] clipped to the domain.
// For radial geometry x is the radius and x_lo must be 0.
struct GridSolution {
  Geometry geometry = Geometry::line;
  int N = 1;
  double p = 2.0;
  double x_lo = 0.0;
  double h = 0.0;
  int nx = 0;
  double t_lo = 0.0;
  double k = 0.0;
  int nt = 0;
  double eps_reg = 0.0;
  std::vector<double> u;  // (nt+1) * (nx+1), time-major

  double x(int i) const { return x_lo + i * h; }
  double t(int n) const { return t_lo + n * k; }
  double x_hi() const { return x_lo + nx * h; }
  double t_hi() const { return t_lo + nt * k; }
  double& at(int i, int n) { return u[static_cast<std::size_t>(n) * (nx + 1) + i]; }
  double at(int i, int n) const { return u[static_cast<std::size_t>(n) * (nx + 1) + i]; }
  double interp(double xq, double tq) const;  // bilinear
  double max_abs() const;
  void validate() const;
};

GridSolution apply_pointwise(const GridSolution& g,
                             const std::function<double(double)>& f);

struct ExactSolution {
  enum class Kind { heat_kernel, barenblatt };
  Kind kind = Kind::heat_kernel;
  double p = 2.0;
  int N = 1;
  double C = 1.0;  // barenblatt profile parameter

  static ExactSolution heat(int N);
  static ExactSolution barenblatt_profile(double p, int N, double C);
  double operator()(double r, double t) const;  // r = |x|
};

// (4 pi t)^{-N/2} exp(-r^2 / 4t), t > 0.
double heat_kernel(int N, double r, double t);

// Compactly supported self-similar source solution for p > 2:
//   t^{-N/L} (C - k_p (r t^{-1/L})^{p/(p-1)})_+^{(p-1)/(p-2)},
// L = N(p-2) + p, k_p = ((p-2)/p) L^{-1/(p-1)}. Constants are validated by
// the strong-form residual tests before anything relies on them.
double barenblatt(double p, int N, double C, double r, double t);

GridSolution sample_exact(const ExactSolution& ex, Geometry geom, double x_lo,
                          double x_hi, int nx, double t_lo, double t_hi, int nt);

struct SolveConfig {
  Geometry geometry = Geometry::line;
  int N = 1;
  double p = 2.0;
  double x_lo = -1.0, x_hi = 1.0;
  int nx = 100;
  double t_lo = 0.0, t_hi = 1.0;
  int nt = 100;
  double eps_reg = -1.0;  // < 0: defaults to h
  int max_sweeps = 50;
  double sweep_tol = 1e-10;
  BoundaryKind boundary = BoundaryKind::dirichlet;
  std::function<double(double x, double t)> boundary_value;  // defaults to 0
  std::function<double(double x)> initial;                   // defaults to 0
  void validate() const;
};

struct SolveStats {
  int total_sweeps = 0;
  int max_sweeps_in_step = 0;
  double last_update = 0.0;
};

// Backward Euler with the nonlinear coefficient lagged and fixed-point sweeps
// per step; degeneracy regularized by (|grad u|^2 + eps^2)^{(p-2)/2}.
// Space-time atoms are deposited as instantaneous data at the first node time
// past the atom; persistent densities become per-cell step sources.
GridSolution solve(const SolveConfig& cfg, const SignedMeasure& mu,
                   SolveStats* stats = nullptr);

// Integral of u(.,t_n) over the spatial domain (radial weight included).
double spatial_integral(const GridSolution& g, int time_index);

// C^2 separable space-time bump built from quintic smoothstep profiles;
// equals 1 on the inner half of its support box.
struct TestBump {
  double center_x = 0.0;
  double center_t = 0.0;
  double rx = 1.0;
  double rt = 1.0;
  double value(double x, double t) const;
  double dx(double x, double t) const;
  double dt(double x, double t) const;
};

// LHS - RHS of the weak formulation against theta over the bump's time
// window; near zero certifies weak-solution quality at scheme accuracy.
double weak_residual(const GridSolution& g, const SignedMeasure& mu,
                     const TestBump& theta);

struct LebesguePointEstimate {
  double value = 0.0;       // extrapolated cylinder-average limit
  bool stable = false;      // averages settled and oscillation decayed
  double oscillation = 0.0; // mean |u - avg| over the last cylinder
};

// Shrinking cylinder averages Q_{rho_i, rho_i^p} at (y,s), extrapolated from
// the last three scales (Aitken).
LebesguePointEstimate lebesgue_point_value(const GridSolution& g, double y, double s,
                                           std::span<const double> rhos);

// (rho^{-(N+p)} integral over Q_{rho,theta} of u_sign^{(1+lambda)(p-1)})
// ^{1/(1+lambda(p-1))}. For p = 2 requires rho^2 <= theta.
double cylinder_average_power(const GridSolution& g, double y, double s, double rho,
                              double theta, double lambda, double p, Sign sign);

// Solution container file format (documented in README).
void save_solution(const GridSolution& g, const std::string& path);
GridSolution load_solution(const std::string& path);
// Snapshot rows t,x,u for external post-processing.
void save_snapshots_csv(const GridSolution& g, const std::string& path,
                        int time_stride = 1);

}  // namespace pwolff
