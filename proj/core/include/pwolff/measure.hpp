#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pwolff {

double unit_ball_volume(int n);

// Space-time cylinder: closed spatial ball {|x - center_x| <= radius} times
// the open time interval (center_t - halfheight, center_t + halfheight).
// halfheight may be +inf for saturation queries.
struct Cylinder {
  std::vector<double> center_x;
  double center_t = 0.0;
  double radius = 0.0;
  double halfheight = 0.0;

  Cylinder() = default;
  Cylinder(std::vector<double> x, double t, double rho, double s)
      : center_x(std::move(x)), center_t(t), radius(rho), halfheight(s) {}
  static Cylinder centered1d(double x, double t, double rho, double s) {
    return Cylinder({x}, t, rho, s);
  }
  int dim() const { return static_cast<int>(center_x.size()); }
};

// Rectangular space-time lattice of cells. Values are stored row-major with
// the time index slowest and the first spatial index fastest:
//   index = ((it * cells[N-1] + i[N-1]) * ... ) * cells[0] + i[0]
struct GridSpec {
  std::vector<double> origin;   // spatial lower corner, size N
  std::vector<double> spacing;  // cell sizes, size N
  std::vector<int> cells;       // cell counts, size N
  double t_origin = 0.0;
  double t_spacing = 0.0;
  int t_cells = 0;

  int dim() const { return static_cast<int>(origin.size()); }
  std::size_t value_count() const;
  std::size_t index(std::span<const int> ix, int it) const;
  double cell_volume() const;  // spatial volume * t_spacing
  void validate() const;
};

// Time-independent spatial measure; the spatial factor of TimeProduct and
// the query object of the elliptic potential.
class SpatialMeasure {
 public:
  enum class Kind { atoms, lebesgue };

  static SpatialMeasure atoms(int dim, std::vector<double> positions_flat,
                              std::vector<double> weights);
  static SpatialMeasure lebesgue(int dim, double density = 1.0);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_zero() const;
  std::size_t atom_count() const { return weights_.size(); }
  std::span<const double> atom_position(std::size_t i) const;
  double atom_weight(std::size_t i) const { return weights_[i]; }
  double density() const { return density_; }

  // Mass of the closed ball {|x - x0| <= rho}.
  double ball_mass(std::span<const double> x0, double rho) const;
  double total_mass() const;  // +inf for lebesgue

 private:
  SpatialMeasure() = default;
  Kind kind_ = Kind::atoms;
  int dim_ = 1;
  std::vector<double> positions_;  // flat, atom i at [i*dim, (i+1)*dim)
  std::vector<double> weights_;    // all > 0
  double density_ = 0.0;           // lebesgue only, >= 0
};

// Nonnegative space-time Radon measure, one of three variants. Immutable
// after construction; all queries are const and thread-safe.
class SpaceTimeMeasure {
 public:
  enum class Kind { atom_list, grid_density, time_product };

  static SpaceTimeMeasure zero(int dim);
  static SpaceTimeMeasure atom_list(int dim, std::vector<double> positions_flat,
                                    std::vector<double> times,
                                    std::vector<double> weights);
  static SpaceTimeMeasure grid_density(GridSpec spec, std::vector<double> values);
  static SpaceTimeMeasure time_product(SpatialMeasure spatial);
  // Atom-list union (for additivity properties and Jordan pairs built in code).
  static SpaceTimeMeasure merged_atoms(const SpaceTimeMeasure& a,
                                       const SpaceTimeMeasure& b);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool is_zero() const;

  // mu(Q): closed spatial ball, open time interval. AtomList exact,
  // GridDensity by cell-overlap quadrature (relative error <= 1e-8 per cell),
  // TimeProduct = nu(B_rho) * 2s.
  double cylinder_mass(const Cylinder& q) const;
  double total_mass() const;  // may be +inf
  SpaceTimeMeasure scaled(double c) const;  // c >= 0

  using PointFn = std::function<double(std::span<const double> x, double t)>;
  // Quadrature of f d(mu) over box x [t_lo, t_hi]; exact for atoms, cell
  // midpoint for densities, composite Simpson in t for TimeProduct atoms.
  double integrate(const PointFn& f, std::span<const double> box_lo,
                   std::span<const double> box_hi, double t_lo, double t_hi,
                   int quad_per_axis = 64) const;

  std::size_t atom_count() const { return weights_.size(); }
  std::span<const double> atom_position(std::size_t i) const;
  double atom_time(std::size_t i) const { return times_[i]; }
  double atom_weight(std::size_t i) const { return weights_[i]; }
  const GridSpec& grid() const { return spec_; }
  const std::vector<double>& grid_values() const { return values_; }
  const SpatialMeasure& spatial() const { return spatial_; }

 private:
  SpaceTimeMeasure() = default;
  Kind kind_ = Kind::atom_list;
  int dim_ = 1;
  // atom_list
  std::vector<double> positions_;
  std::vector<double> times_;
  std::vector<double> weights_;
  // grid_density
  GridSpec spec_;
  std::vector<double> values_;
  // time_product
  SpatialMeasure spatial_ = SpatialMeasure::lebesgue(1, 0.0);
};

// Signed measure stored as an explicit Jordan pair; no decomposition is
// ever computed.
struct SignedMeasure {
  SpaceTimeMeasure plus = SpaceTimeMeasure::zero(1);
  SpaceTimeMeasure minus = SpaceTimeMeasure::zero(1);

  int dim() const { return plus.dim(); }
  void validate() const;  // dimensions must agree
  double cylinder_mass_abs(const Cylinder& q) const {
    return plus.cylinder_mass(q) + minus.cylinder_mass(q);
  }
  static SignedMeasure zero(int dim) {
    return {SpaceTimeMeasure::zero(dim), SpaceTimeMeasure::zero(dim)};
  }
};

enum class MeasureFormat { atoms_csv, grid_density };

// Measure file formats are documented in the top-level README.
SignedMeasure load_measure(const std::string& path, MeasureFormat format);
void save_atoms_csv(const SignedMeasure& mu, const std::string& path);
SpaceTimeMeasure load_grid_density(const std::string& path);
void save_grid_density(const SpaceTimeMeasure& mu, const std::string& path);

// Overlap volume of an axis-aligned box with the closed ball (center, r),
// computed by dimension-recursive adaptive quadrature (exact in 1-D).
double box_ball_overlap(std::span<const double> lo, std::span<const double> hi,
                        std::span<const double> center, double r,
                        double rel_tol = 1e-9);

}  // namespace pwolff
