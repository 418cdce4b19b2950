#include "pwolff/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pwolff/error.hpp"

namespace pwolff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq(double x) { return x * x; }

double dist2(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += sq(a[i] - b[i]);
  return d;
}

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string("non-finite ") + what);
}

// Overlap length of [lo, hi] with the open interval (a, b); open vs closed
// endpoints do not change Lebesgue length.
double interval_overlap(double lo, double hi, double a, double b) {
  const double l = std::max(lo, a);
  const double h = std::min(hi, b);
  return h > l ? h - l : 0.0;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int depth = 32) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace

double unit_ball_volume(int n) {
  if (n <= 0) throw std::invalid_argument("unit_ball_volume: n must be positive");
  return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

double box_ball_overlap(std::span<const double> lo, std::span<const double> hi,
                        std::span<const double> center, double r, double rel_tol) {
  const int n = static_cast<int>(lo.size());
  if (r <= 0.0) return 0.0;
  double near2 = 0.0, far2 = 0.0, vol = 1.0;
  for (int d = 0; d < n; ++d) {
    const double below = lo[d] - center[d];
    const double above = center[d] - hi[d];
    near2 += sq(std::max({below, above, 0.0}));
    far2 += sq(std::max(center[d] - lo[d], hi[d] - center[d]));
    vol *= hi[d] - lo[d];
  }
  if (near2 >= r * r) return 0.0;
  if (far2 <= r * r) return vol;
  if (n == 1) return interval_overlap(lo[0], hi[0], center[0] - r, center[0] + r);

  // Slice along the last axis; each slice is an (n-1)-dim overlap with the
  // ball of reduced radius.
  const double a = std::max(lo[n - 1], center[n - 1] - r);
  const double b = std::min(hi[n - 1], center[n - 1] + r);
  if (!(b > a)) return 0.0;
  std::vector<double> slo(lo.begin(), lo.end() - 1), shi(hi.begin(), hi.end() - 1),
      sc(center.begin(), center.end() - 1);
  const double cz = center[n - 1];
  auto slice = [&](double z) {
    const double rr = r * r - sq(z - cz);
    if (rr <= 0.0) return 0.0;
    return box_ball_overlap(slo, shi, sc, std::sqrt(rr), rel_tol);
  };
  const double scale = vol / (hi[n - 1] - lo[n - 1]);  // upper bound on slice value
  return integrate_adaptive(slice, a, b, rel_tol * std::max(scale * (b - a), 1e-300));
}

// ---------------------------------------------------------------------------
// GridSpec

std::size_t GridSpec::value_count() const {
  std::size_t c = static_cast<std::size_t>(std::max(t_cells, 0));
  for (int k : cells) c *= static_cast<std::size_t>(std::max(k, 0));
  return c;
}

std::size_t GridSpec::index(std::span<const int> ix, int it) const {
  std::size_t idx = static_cast<std::size_t>(it);
  for (int d = dim() - 1; d >= 0; --d)
    idx = idx * static_cast<std::size_t>(cells[d]) + static_cast<std::size_t>(ix[d]);
  return idx;
}

double GridSpec::cell_volume() const {
  double v = t_spacing;
  for (double s : spacing) v *= s;
  return v;
}

void GridSpec::validate() const {
  const int n = dim();
  if (n < 1) throw std::invalid_argument("GridSpec: dimension must be >= 1");
  if (static_cast<int>(spacing.size()) != n || static_cast<int>(cells.size()) != n)
    throw std::invalid_argument("GridSpec: inconsistent field sizes");
  for (double s : spacing)
    if (!(s > 0.0)) throw std::invalid_argument("GridSpec: spacing must be positive");
  for (int c : cells)
    if (c < 1) throw std::invalid_argument("GridSpec: cell counts must be positive");
  if (!(t_spacing > 0.0) || t_cells < 1)
    throw std::invalid_argument("GridSpec: time extent must be positive");
  require_finite(origin, "grid origin");
}

// ---------------------------------------------------------------------------
// SpatialMeasure

SpatialMeasure SpatialMeasure::atoms(int dim, std::vector<double> positions_flat,
                                     std::vector<double> weights) {
  if (dim < 1) throw std::invalid_argument("SpatialMeasure: dim must be >= 1");
  if (positions_flat.size() != weights.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("SpatialMeasure: positions/weights size mismatch");
  require_finite(positions_flat, "atom position");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("SpatialMeasure: atom weights must be positive finite");
  SpatialMeasure m;
  m.kind_ = Kind::atoms;
  m.dim_ = dim;
  m.positions_ = std::move(positions_flat);
  m.weights_ = std::move(weights);
  return m;
}

SpatialMeasure SpatialMeasure::lebesgue(int dim, double density) {
  if (dim < 1) throw std::invalid_argument("SpatialMeasure: dim must be >= 1");
  if (!(density >= 0.0) || !std::isfinite(density))
    throw std::invalid_argument("SpatialMeasure: density must be nonnegative finite");
  SpatialMeasure m;
  m.kind_ = Kind::lebesgue;
  m.dim_ = dim;
  m.density_ = density;
  return m;
}

bool SpatialMeasure::is_zero() const {
  return kind_ == Kind::atoms ? weights_.empty() : density_ == 0.0;
}

std::span<const double> SpatialMeasure::atom_position(std::size_t i) const {
  return {positions_.data() + i * static_cast<std::size_t>(dim_),
          static_cast<std::size_t>(dim_)};
}

double SpatialMeasure::ball_mass(std::span<const double> x0, double rho) const {
  if (static_cast<int>(x0.size()) != dim_)
    throw std::invalid_argument("ball_mass: dimension mismatch");
  if (!(rho > 0.0)) throw std::invalid_argument("ball_mass: rho must be positive");
  require_finite(x0, "query center");
  if (kind_ == Kind::lebesgue) return density_ * unit_ball_volume(dim_) * std::pow(rho, dim_);
  double mass = 0.0;
  const double r2 = rho * rho;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (dist2(atom_position(i), x0) <= r2) mass += weights_[i];
  return mass;
}

double SpatialMeasure::total_mass() const {
  if (kind_ == Kind::lebesgue) return density_ > 0.0 ? kInf : 0.0;
  double m = 0.0;
  for (double w : weights_) m += w;
  return m;
}

// ---------------------------------------------------------------------------
// SpaceTimeMeasure

SpaceTimeMeasure SpaceTimeMeasure::zero(int dim) {
  return atom_list(dim, {}, {}, {});
}

SpaceTimeMeasure SpaceTimeMeasure::atom_list(int dim, std::vector<double> positions_flat,
                                             std::vector<double> times,
                                             std::vector<double> weights) {
  if (dim < 1) throw std::invalid_argument("SpaceTimeMeasure: dim must be >= 1");
  if (times.size() != weights.size() ||
      positions_flat.size() != weights.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("SpaceTimeMeasure: atom field sizes mismatch");
  require_finite(positions_flat, "atom position");
  require_finite(times, "atom time");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("SpaceTimeMeasure: atom weights must be positive finite");
  SpaceTimeMeasure m;
  m.kind_ = Kind::atom_list;
  m.dim_ = dim;
  m.positions_ = std::move(positions_flat);
  m.times_ = std::move(times);
  m.weights_ = std::move(weights);
  return m;
}

SpaceTimeMeasure SpaceTimeMeasure::grid_density(GridSpec spec, std::vector<double> values) {
  spec.validate();
  if (values.size() != spec.value_count())
    throw std::invalid_argument("SpaceTimeMeasure: value count does not match grid");
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("SpaceTimeMeasure: grid density values must be >= 0");
  SpaceTimeMeasure m;
  m.kind_ = Kind::grid_density;
  m.dim_ = spec.dim();
  m.spec_ = std::move(spec);
  m.values_ = std::move(values);
  return m;
}

SpaceTimeMeasure SpaceTimeMeasure::time_product(SpatialMeasure spatial) {
  SpaceTimeMeasure m;
  m.kind_ = Kind::time_product;
  m.dim_ = spatial.dim();
  m.spatial_ = std::move(spatial);
  return m;
}

SpaceTimeMeasure SpaceTimeMeasure::merged_atoms(const SpaceTimeMeasure& a,
                                                const SpaceTimeMeasure& b) {
  if (a.kind_ != Kind::atom_list || b.kind_ != Kind::atom_list)
    throw std::invalid_argument("merged_atoms: both arguments must be atom lists");
  if (a.dim_ != b.dim_) throw std::invalid_argument("merged_atoms: dimension mismatch");
  std::vector<double> xs = a.positions_, ts = a.times_, ws = a.weights_;
  xs.insert(xs.end(), b.positions_.begin(), b.positions_.end());
  ts.insert(ts.end(), b.times_.begin(), b.times_.end());
  ws.insert(ws.end(), b.weights_.begin(), b.weights_.end());
  return atom_list(a.dim_, std::move(xs), std::move(ts), std::move(ws));
}

bool SpaceTimeMeasure::is_zero() const {
  switch (kind_) {
    case Kind::atom_list: return weights_.empty();
    case Kind::grid_density:
      return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    case Kind::time_product: return spatial_.is_zero();
  }
  return true;
}

std::span<const double> SpaceTimeMeasure::atom_position(std::size_t i) const {
  return {positions_.data() + i * static_cast<std::size_t>(dim_),
          static_cast<std::size_t>(dim_)};
}

double SpaceTimeMeasure::cylinder_mass(const Cylinder& q) const {
  if (q.dim() != dim_) throw std::invalid_argument("cylinder_mass: dimension mismatch");
  if (!(q.radius > 0.0) || !(q.halfheight > 0.0))
    throw std::invalid_argument("cylinder_mass: cylinder must have positive extents");
  require_finite(q.center_x, "cylinder center");
  if (!std::isfinite(q.center_t) || !std::isfinite(q.radius))
    throw std::invalid_argument("cylinder_mass: non-finite cylinder");

  switch (kind_) {
    case Kind::atom_list: {
      double mass = 0.0;
      const double r2 = q.radius * q.radius;
      const double t_lo = q.center_t - q.halfheight, t_hi = q.center_t + q.halfheight;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (times_[i] <= t_lo || times_[i] >= t_hi) continue;  // open in time
        if (dist2(atom_position(i), q.center_x) <= r2) mass += weights_[i];
      }
      return mass;
    }
    case Kind::time_product: {
      const double ball = spatial_.ball_mass(q.center_x, q.radius);
      if (ball == 0.0) return 0.0;
      return std::isinf(q.halfheight) ? kInf : ball * 2.0 * q.halfheight;
    }
    case Kind::grid_density: {
      const int n = dim_;
      const double t_lo = q.center_t - q.halfheight, t_hi = q.center_t + q.halfheight;
      // Clip index windows to the cylinder bounding box.
      std::vector<int> i_lo(n), i_hi(n);
      for (int d = 0; d < n; ++d) {
        const double blo = q.center_x[d] - q.radius, bhi = q.center_x[d] + q.radius;
        int lo = static_cast<int>(std::floor((blo - spec_.origin[d]) / spec_.spacing[d]));
        int hi = static_cast<int>(std::ceil((bhi - spec_.origin[d]) / spec_.spacing[d]));
        i_lo[d] = std::max(lo, 0);
        i_hi[d] = std::min(hi, spec_.cells[d]);
        if (i_lo[d] >= i_hi[d]) return 0.0;
      }
      int it_lo = 0, it_hi = spec_.t_cells;
      if (std::isfinite(t_lo))
        it_lo = std::max(static_cast<int>(std::floor((t_lo - spec_.t_origin) / spec_.t_spacing)), 0);
      if (std::isfinite(t_hi))
        it_hi = std::min(static_cast<int>(std::ceil((t_hi - spec_.t_origin) / spec_.t_spacing)),
                         spec_.t_cells);
      if (it_lo >= it_hi) return 0.0;

      std::vector<int> ix(i_lo);
      std::vector<double> clo(n), chi(n);
      double mass = 0.0;
      for (;;) {
        for (int d = 0; d < n; ++d) {
          clo[d] = spec_.origin[d] + ix[d] * spec_.spacing[d];
          chi[d] = clo[d] + spec_.spacing[d];
        }
        const double sp_overlap = box_ball_overlap(clo, chi, q.center_x, q.radius);
        if (sp_overlap > 0.0) {
          for (int it = it_lo; it < it_hi; ++it) {
            const double ta = spec_.t_origin + it * spec_.t_spacing;
            const double ov = interval_overlap(ta, ta + spec_.t_spacing, t_lo, t_hi);
            if (ov <= 0.0) continue;
            mass += values_[spec_.index(ix, it)] * sp_overlap * ov;
          }
        }
        int d = 0;
        while (d < n) {
          if (++ix[d] < i_hi[d]) break;
          ix[d] = i_lo[d];
          ++d;
        }
        if (d >= n) break;
      }
      return mass;
    }
  }
  return 0.0;
}

double SpaceTimeMeasure::total_mass() const {
  switch (kind_) {
    case Kind::atom_list: {
      double m = 0.0;
      for (double w : weights_) m += w;
      return m;
    }
    case Kind::grid_density: {
      double m = 0.0;
      for (double v : values_) m += v;
      return m * spec_.cell_volume();
    }
    case Kind::time_product:
      return spatial_.is_zero() ? 0.0 : kInf;
  }
  return 0.0;
}

SpaceTimeMeasure SpaceTimeMeasure::scaled(double c) const {
  if (!(c >= 0.0)) throw std::invalid_argument("scaled: factor must be >= 0");
  SpaceTimeMeasure m = *this;
  switch (kind_) {
    case Kind::atom_list:
      if (c == 0.0) return zero(dim_);
      for (double& w : m.weights_) w *= c;
      break;
    case Kind::grid_density:
      for (double& v : m.values_) v *= c;
      break;
    case Kind::time_product:
      if (m.spatial_.kind() == SpatialMeasure::Kind::lebesgue) {
        m.spatial_ = SpatialMeasure::lebesgue(dim_, c * m.spatial_.density());
      } else {
        std::vector<double> xs(m.spatial_.atom_count() * dim_);
        std::vector<double> ws(m.spatial_.atom_count());
        for (std::size_t i = 0; i < ws.size(); ++i) {
          auto p = m.spatial_.atom_position(i);
          std::copy(p.begin(), p.end(), xs.begin() + i * dim_);
          ws[i] = m.spatial_.atom_weight(i) * c;
        }
        if (c == 0.0) ws.clear(), xs.clear();
        m.spatial_ = SpatialMeasure::atoms(dim_, std::move(xs), std::move(ws));
      }
      break;
  }
  return m;
}

double SpaceTimeMeasure::integrate(const PointFn& f, std::span<const double> box_lo,
                                   std::span<const double> box_hi, double t_lo,
                                   double t_hi, int quad_per_axis) const {
  if (static_cast<int>(box_lo.size()) != dim_ || static_cast<int>(box_hi.size()) != dim_)
    throw std::invalid_argument("integrate: box dimension mismatch");
  switch (kind_) {
    case Kind::atom_list: {
      double acc = 0.0;
      for (std::size_t i = 0; i < weights_.size(); ++i) {
        const double t = times_[i];
        if (t <= t_lo || t >= t_hi) continue;
        auto p = atom_position(i);
        bool inside = true;
        for (int d = 0; d < dim_; ++d)
          if (p[d] < box_lo[d] || p[d] > box_hi[d]) { inside = false; break; }
        if (inside) acc += weights_[i] * f(p, t);
      }
      return acc;
    }
    case Kind::grid_density: {
      double acc = 0.0;
      const int n = dim_;
      std::vector<int> ix(n, 0);
      std::vector<double> xc(n);
      const double cellvol_sp = [&] {
        double v = 1.0;
        for (double s : spec_.spacing) v *= s;
        return v;
      }();
      for (;;) {
        bool in_box = true;
        for (int d = 0; d < n; ++d) {
          xc[d] = spec_.origin[d] + (ix[d] + 0.5) * spec_.spacing[d];
          if (xc[d] < box_lo[d] || xc[d] > box_hi[d]) { in_box = false; break; }
        }
        if (in_box) {
          for (int it = 0; it < spec_.t_cells; ++it) {
            const double ta = spec_.t_origin + it * spec_.t_spacing;
            const double ov = interval_overlap(ta, ta + spec_.t_spacing, t_lo, t_hi);
            if (ov <= 0.0) continue;
            const double tc = ta + 0.5 * spec_.t_spacing;
            acc += values_[spec_.index(ix, it)] * cellvol_sp * ov * f(xc, tc);
          }
        }
        int d = 0;
        while (d < n) {
          if (++ix[d] < spec_.cells[d]) break;
          ix[d] = 0;
          ++d;
        }
        if (d >= n) break;
      }
      return acc;
    }
    case Kind::time_product: {
      if (!(t_hi > t_lo)) return 0.0;
      const int nt = std::max(quad_per_axis, 2);
      auto time_integral = [&](std::span<const double> x) {
        // composite Simpson over [t_lo, t_hi]
        const int m2 = nt % 2 == 0 ? nt : nt + 1;
        const double h = (t_hi - t_lo) / m2;
        double s = f(x, t_lo) + f(x, t_hi);
        for (int i = 1; i < m2; ++i) s += f(x, t_lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
        return s * h / 3.0;
      };
      if (spatial_.kind() == SpatialMeasure::Kind::atoms) {
        double acc = 0.0;
        for (std::size_t i = 0; i < spatial_.atom_count(); ++i) {
          auto p = spatial_.atom_position(i);
          bool inside = true;
          for (int d = 0; d < dim_; ++d)
            if (p[d] < box_lo[d] || p[d] > box_hi[d]) { inside = false; break; }
          if (inside) acc += spatial_.atom_weight(i) * time_integral(p);
        }
        return acc;
      }
      // lebesgue density: midpoint lattice over the box
      const int nq = std::max(quad_per_axis, 2);
      std::vector<int> ix(dim_, 0);
      std::vector<double> xc(dim_), hstep(dim_);
      double cellvol = 1.0;
      for (int d = 0; d < dim_; ++d) {
        hstep[d] = (box_hi[d] - box_lo[d]) / nq;
        cellvol *= hstep[d];
      }
      if (cellvol <= 0.0) return 0.0;
      double acc = 0.0;
      for (;;) {
        for (int d = 0; d < dim_; ++d) xc[d] = box_lo[d] + (ix[d] + 0.5) * hstep[d];
        acc += time_integral(xc);
        int d = 0;
        while (d < dim_) {
          if (++ix[d] < nq) break;
          ix[d] = 0;
          ++d;
        }
        if (d >= dim_) break;
      }
      return acc * cellvol * spatial_.density();
    }
  }
  return 0.0;
}

void SignedMeasure::validate() const {
  if (plus.dim() != minus.dim())
    throw std::invalid_argument("SignedMeasure: Jordan parts must share dimension");
}

// ---------------------------------------------------------------------------
// File formats (see README for the byte-exact layout)

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad numeric field '" + s + "' in " + ctx);
  }
}

}  // namespace

SignedMeasure load_measure(const std::string& path, MeasureFormat format) {
  if (format == MeasureFormat::grid_density) {
    SignedMeasure mu;
    mu.plus = load_grid_density(path);
    mu.minus = SpaceTimeMeasure::zero(mu.plus.dim());
    return mu;
  }
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open measure file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty measure file (missing header): " + path);
  auto header = split_csv_line(line);
  if (header.size() < 4) throw ParseError("atoms CSV header needs x1,...,xN,t,weight,sign: " + path);
  const int n = static_cast<int>(header.size()) - 3;
  for (int d = 0; d < n; ++d) {
    const std::string want = "x" + std::to_string(d + 1);
    if (trim(header[d]) != want)
      throw ParseError("atoms CSV header column " + std::to_string(d + 1) + " must be '" + want + "'");
  }
  if (trim(header[n]) != "t" || trim(header[n + 1]) != "weight" || trim(header[n + 2]) != "sign")
    throw ParseError("atoms CSV header must end with t,weight,sign");

  std::vector<double> xs_p, ts_p, ws_p, xs_m, ts_m, ws_m;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    const std::string ctx = path + ":" + std::to_string(lineno);
    if (static_cast<int>(fields.size()) != n + 3)
      throw ParseError("wrong column count in " + ctx);
    std::vector<double> x(n);
    for (int d = 0; d < n; ++d) x[d] = parse_double(trim(fields[d]), ctx);
    const double t = parse_double(trim(fields[n]), ctx);
    const double w = parse_double(trim(fields[n + 1]), ctx);
    if (!(w > 0.0)) throw ParseError("weights must be positive (row " + ctx + ")");
    const std::string sign = trim(fields[n + 2]);
    const bool is_plus = sign == "+";
    const bool is_minus = sign == "-" || sign == "−";
    if (!is_plus && !is_minus) throw ParseError("sign must be '+' or '-' in " + ctx);
    auto& xs = is_plus ? xs_p : xs_m;
    auto& ts = is_plus ? ts_p : ts_m;
    auto& ws = is_plus ? ws_p : ws_m;
    xs.insert(xs.end(), x.begin(), x.end());
    ts.push_back(t);
    ws.push_back(w);
  }
  SignedMeasure mu;
  mu.plus = SpaceTimeMeasure::atom_list(n, std::move(xs_p), std::move(ts_p), std::move(ws_p));
  mu.minus = SpaceTimeMeasure::atom_list(n, std::move(xs_m), std::move(ts_m), std::move(ws_m));
  return mu;
}

void save_atoms_csv(const SignedMeasure& mu, const std::string& path) {
  if (mu.plus.kind() != SpaceTimeMeasure::Kind::atom_list ||
      mu.minus.kind() != SpaceTimeMeasure::Kind::atom_list)
    throw std::invalid_argument("save_atoms_csv: both parts must be atom lists");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  const int n = mu.dim();
  for (int d = 0; d < n; ++d) out << "x" << (d + 1) << ",";
  out << "t,weight,sign\n";
  char buf[64];
  auto emit = [&](const SpaceTimeMeasure& part, char sign) {
    for (std::size_t i = 0; i < part.atom_count(); ++i) {
      auto p = part.atom_position(i);
      for (int d = 0; d < n; ++d) {
        std::snprintf(buf, sizeof buf, "%.17g", p[d]);
        out << buf << ",";
      }
      std::snprintf(buf, sizeof buf, "%.17g", part.atom_time(i));
      out << buf << ",";
      std::snprintf(buf, sizeof buf, "%.17g", part.atom_weight(i));
      out << buf << "," << sign << "\n";
    }
  };
  emit(mu.plus, '+');
  emit(mu.minus, '-');
}

SpaceTimeMeasure load_grid_density(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid density file: " + path);
  std::string magic;
  std::getline(in, magic);
  if (trim(magic) != "pwolff-grid-density v1")
    throw ParseError("bad magic line in " + path + " (want 'pwolff-grid-density v1')");
  GridSpec spec;
  int n = 0;
  in >> n;
  if (!in || n < 1) throw ParseError("bad dimension in " + path);
  spec.origin.resize(n);
  spec.spacing.resize(n);
  spec.cells.resize(n);
  for (int d = 0; d < n; ++d) in >> spec.origin[d];
  in >> spec.t_origin;
  for (int d = 0; d < n; ++d) in >> spec.spacing[d];
  in >> spec.t_spacing;
  for (int d = 0; d < n; ++d) in >> spec.cells[d];
  in >> spec.t_cells;
  if (!in) throw ParseError("truncated grid header in " + path);
  spec.validate();
  std::vector<double> values(spec.value_count());
  for (auto& v : values)
    if (!(in >> v)) throw ParseError("truncated grid values in " + path);
  try {
    return SpaceTimeMeasure::grid_density(std::move(spec), std::move(values));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string(e.what()) + " in " + path);
  }
}

void save_grid_density(const SpaceTimeMeasure& mu, const std::string& path) {
  if (mu.kind() != SpaceTimeMeasure::Kind::grid_density)
    throw std::invalid_argument("save_grid_density: not a grid density measure");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open for writing: " + path);
  const GridSpec& s = mu.grid();
  out << "pwolff-grid-density v1\n" << s.dim() << "\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (int d = 0; d < s.dim(); ++d) out << num(s.origin[d]) << " ";
  out << num(s.t_origin) << "\n";
  for (int d = 0; d < s.dim(); ++d) out << num(s.spacing[d]) << " ";
  out << num(s.t_spacing) << "\n";
  for (int d = 0; d < s.dim(); ++d) out << s.cells[d] << " ";
  out << s.t_cells << "\n";
  const auto& v = mu.grid_values();
  for (std::size_t i = 0; i < v.size(); ++i)
    out << num(v[i]) << (i + 1 == v.size() ? "\n" : " ");
}

}  // namespace pwolff
