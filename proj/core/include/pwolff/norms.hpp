#pragma once

#include <span>
#include <vector>

#include "pwolff/measure.hpp"
#include "pwolff/potential.hpp"

namespace pwolff {

// Scalar function sampled on a rectangular space-time grid (cell values).
struct GridFunction {
  GridSpec spec;
  std::vector<double> values;
  void validate() const;
  double cell_value(std::span<const int> ix, int it) const {
    return values[spec.index(ix, it)];
  }
};

// Step representation of the nonincreasing rearrangement f* of |f|:
// f* = value[k] on [breakpoints[k], breakpoints[k+1]), 0 beyond the last
// breakpoint. Values are strictly decreasing and positive.
struct Rearrangement {
  std::vector<double> breakpoints;  // size K+1, breakpoints[0] = 0
  std::vector<double> values;       // size K
  double total_mass = 0.0;          // integral of f* == integral of |f|
  double positive_measure = 0.0;    // |{ |f| > 0 }| == breakpoints.back()

  double value_at(double s) const;     // f*(s)
  double integral_to(double s) const;  // exact integral of f* over [0,s]
};

// Exact step rearrangement of weighted samples (value, volume).
Rearrangement rearrange_weighted(std::span<const double> values,
                                 std::span<const double> volumes);
Rearrangement rearrange(const GridFunction& f);

// f**(s) = (1/s) integral_0^s f*; exact on the step representation.
double double_star(const Rearrangement& r, double s);

// [ integral_0^inf (s^{1/q} f**(s))^alpha ds/s ]^{1/alpha}; sup for
// alpha = inf. Segment-exact for integer alpha; interior segments with
// non-integer alpha fall back to adaptive quadrature at 1e-12 relative.
// Divergent integrals return +inf.
double lorentz_norm(const Rearrangement& r, double q, double alpha);
double lorentz_norm(const GridFunction& f, double q, double alpha);

enum class AxisGroup { space, time };

// Nested norm: inner exponent over the inner axis group per slice, outer
// exponent across slices. Exponents in [1, inf], inf meaning sup.
double mixed_norm(const GridFunction& f, double inner_exponent, AxisGroup inner_axis,
                  double outer_exponent);

// Upper bound for the per-scale value dp(rho) from a mixed Lebesgue norm
// ||mu||_{L^r_t L^q_x}; the multiplicative constant is derived by optimizing
// the Hoelder mass bound inside the tau infimum (see README for the closed
// form). Requires r > 1, q > N/p.
double remark_bound_lebesgue(const PotentialParams& params, double mixed_norm_qr,
                             double rho, double q, double r);

struct LorentzBoundResult {
  double per_radius = 0.0;   // bound for dp at the given rho
  double integrated = 0.0;   // integral of the per-radius bound, d rho / rho
  double q = 0.0;            // derived spatial exponent N/(p - p/r)
  double alpha = 0.0;        // derived exponent 1/(p-1-(p-2)/r)
  double norm_rstar = 0.0;   // ||mu||_{r,inf}** evaluated at omega_N rho^N
};

// Lorentz-refined bound: time-slice (r,inf) quasinorms per spatial cell,
// spatial rearrangement of the result, then the same optimized tau bound.
// Requires r > (p-2)/(p-1).
LorentzBoundResult remark_bound_lorentz(const PotentialParams& params,
                                        const GridFunction& density, double rho,
                                        double r);

}  // namespace pwolff
