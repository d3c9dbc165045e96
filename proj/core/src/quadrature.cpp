#include "dapinn/quadrature.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "dapinn/rng.hpp"
#include "dapinn/sobol_tables.hpp"

namespace dapinn {

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::Sobol: return "sobol";
    case Rule::MidpointGrid: return "midpoint-grid";
    case Rule::UniformRandom: return "uniform-random";
    case Rule::BoundaryGrid: return "boundary-grid";
    case Rule::BoundaryRandom: return "boundary-random";
  }
  return "?";
}

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double QuadratureSet::weight_sum() const { return pairwise_sum(weights); }

// ---------------------------------------------------------------------------
// Sobol (Joe-Kuo direction numbers, no scrambling)

namespace {

constexpr int kSobolBits = 32;

void sobol_directions(int dim_index, std::uint64_t v[kSobolBits + 1]) {
  if (dim_index == 0) {
    for (int k = 1; k <= kSobolBits; ++k) v[k] = 1ull << (kSobolBits - k);
    return;
  }
  const detail::SobolRow& row = detail::kSobolRows[dim_index - 1];
  const int s = row.degree;
  std::uint64_t m[kSobolBits + 1] = {0};
  for (int k = 1; k <= s && k <= kSobolBits; ++k) m[k] = row.m[k - 1];
  for (int k = s + 1; k <= kSobolBits; ++k) {
    std::uint64_t mk = m[k - s] ^ (m[k - s] << s);
    for (int i = 1; i < s; ++i)
      if ((row.poly >> (s - i)) & 1u) mk ^= m[k - i] << i;
    m[k] = mk;
  }
  for (int k = 1; k <= kSobolBits; ++k) v[k] = m[k] << (kSobolBits - k);
}

}  // namespace

QuadratureSet sobol_points(std::size_t n, const Box& box) {
  const int d = box.dim();
  if (d > kSobolMaxDim)
    throw std::invalid_argument(
        "sobol_points: dimension " + std::to_string(d) +
        " exceeds the direction-number table (max " +
        std::to_string(kSobolMaxDim) + ")");
  if (n < 1) throw std::invalid_argument("sobol_points: n must be >= 1");

  std::vector<std::uint64_t> dirs(static_cast<std::size_t>(d) * (kSobolBits + 1));
  for (int j = 0; j < d; ++j) sobol_directions(j, dirs.data() + j * (kSobolBits + 1));

  QuadratureSet q;
  q.dim = d;
  q.rule = Rule::Sobol;
  q.points.resize(n * d);
  double measure = 1.0;
  for (int i = 0; i < d; ++i) measure *= box.extent(i);
  q.weights.assign(n, measure / static_cast<double>(n));

  std::vector<std::uint64_t> x(d, 0);
  constexpr double scale = 1.0 / 4294967296.0;  // 2^-32
  // Gray-code stepping; index 0 (the all-zeros point) is skipped.
  for (std::size_t i = 1; i <= n; ++i) {
    int c = 1;
    std::size_t bits = i;
    while ((bits & 1) == 0) {
      bits >>= 1;
      ++c;
    }
    for (int j = 0; j < d; ++j) {
      x[j] ^= dirs[j * (kSobolBits + 1) + c];
      q.points[(i - 1) * d + j] =
          box.lo[j] + box.extent(j) * (static_cast<double>(x[j]) * scale);
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Midpoint grids

namespace {

QuadratureSet midpoint_box(std::span<const int> res, const Box& box) {
  const int d = box.dim();
  if (static_cast<int>(res.size()) != d)
    throw std::invalid_argument("midpoint_grid: resolution/axis mismatch");
  std::size_t n = 1;
  double cell = 1.0;
  for (int i = 0; i < d; ++i) {
    if (res[i] < 1) throw std::invalid_argument("midpoint_grid: resolution >= 1");
    n *= static_cast<std::size_t>(res[i]);
    cell *= box.extent(i) / res[i];
  }
  QuadratureSet q;
  q.dim = d;
  q.rule = Rule::MidpointGrid;
  q.points.resize(n * d);
  q.weights.assign(n, cell);
  std::vector<int> idx(d, 0);
  for (std::size_t p = 0; p < n; ++p) {
    for (int i = 0; i < d; ++i)
      q.points[p * d + i] =
          box.lo[i] + box.extent(i) * (idx[i] + 0.5) / res[i];
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < res[i]) break;
      idx[i] = 0;
    }
  }
  return q;
}

QuadratureSet midpoint_disc(std::span<const int> res, const Disc& disc) {
  if (res.size() != 2)
    throw std::invalid_argument("midpoint_grid(disc): need {n_r, n_phi}");
  const int nr = res[0], nphi = res[1];
  if (nr < 1 || nphi < 1)
    throw std::invalid_argument("midpoint_grid: resolution >= 1");
  const double two_pi = 6.28318530717958647692528676655900577;
  const double dr = disc.radius / nr;
  const double dphi = two_pi / nphi;
  QuadratureSet q;
  q.dim = 2;
  q.rule = Rule::MidpointGrid;
  q.points.resize(static_cast<std::size_t>(nr) * nphi * 2);
  q.weights.resize(static_cast<std::size_t>(nr) * nphi);
  std::size_t p = 0;
  for (int i = 0; i < nr; ++i) {
    const double r = (i + 0.5) * dr;
    for (int j = 0; j < nphi; ++j, ++p) {
      const double phi = (j + 0.5) * dphi;
      q.points[p * 2 + 0] = disc.center[0] + r * std::cos(phi);
      q.points[p * 2 + 1] = disc.center[1] + r * std::sin(phi);
      q.weights[p] = r * dr * dphi;
    }
  }
  return q;
}

}  // namespace

QuadratureSet midpoint_grid(std::span<const int> resolution, const Geometry& geom) {
  if (const Box* b = geom.as_box()) return midpoint_box(resolution, *b);
  if (const Disc* d = geom.as_disc()) return midpoint_disc(resolution, *d);
  throw std::invalid_argument("midpoint_grid: unsupported geometry");
}

std::vector<int> grid_dims_for(int dim, std::size_t target) {
  if (target < 1) target = 1;
  if (dim == 1) return {static_cast<int>(target)};
  const double root = std::pow(static_cast<double>(target), 1.0 / dim);
  std::vector<int> best;
  double best_err = -1.0;
  for (int k : {static_cast<int>(std::floor(root)), static_cast<int>(std::ceil(root))}) {
    if (k < 1) k = 1;
    std::vector<int> dims(dim, k);
    std::size_t head = 1;
    for (int i = 0; i + 1 < dim; ++i) head *= static_cast<std::size_t>(k);
    dims[dim - 1] = std::max<int>(
        1, static_cast<int>(std::llround(static_cast<double>(target) / head)));
    std::size_t prod = head * dims[dim - 1];
    const double err = std::abs(static_cast<double>(prod) - static_cast<double>(target));
    if (best_err < 0 || err < best_err) {
      best_err = err;
      best = dims;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Uniform random

QuadratureSet uniform_random(std::size_t n, const Geometry& geom,
                             std::uint64_t seed) {
  const int d = geom.dim();
  QuadratureSet q;
  q.dim = d;
  q.rule = Rule::UniformRandom;
  q.points.resize(n * d);
  q.weights.assign(n, geom.measure() / static_cast<double>(n));
  Rng rng(derive_seed(seed, 0x5a5a));
  const Box bb = geom.bounding_box();
  std::vector<double> x(d);
  const bool direct = geom.as_box() != nullptr;
  for (std::size_t p = 0; p < n; ++p) {
    for (;;) {
      for (int i = 0; i < d; ++i) x[i] = rng.uniform(bb.lo[i], bb.hi[i]);
      if (direct || geom.contains(x)) break;
    }
    for (int i = 0; i < d; ++i) q.points[p * d + i] = x[i];
  }
  return q;
}

// ---------------------------------------------------------------------------
// Space-time lateral boundary

namespace {

struct Face {
  int axis;       // frozen axis
  double coord;   // frozen coordinate (lo or hi)
  double measure; // surface measure of the face
};

std::vector<Face> box_faces(const Box& spatial) {
  const int d = spatial.dim();
  std::vector<Face> faces;
  for (int axis = 0; axis < d; ++axis) {
    double m = 1.0;
    for (int i = 0; i < d; ++i)
      if (i != axis) m *= spatial.extent(i);
    faces.push_back({axis, spatial.lo[axis], m});
    faces.push_back({axis, spatial.hi[axis], m});
  }
  return faces;
}

}  // namespace

QuadratureSet boundary_grid(const Box& spatial, double t_final,
                            std::span<const int> face_res, int time_res) {
  const int d = spatial.dim();
  if (time_res < 1) throw std::invalid_argument("boundary_grid: time_res >= 1");
  if (static_cast<int>(face_res.size()) != (d > 1 ? d - 1 : 0) && d > 1)
    throw std::invalid_argument("boundary_grid: need d-1 face resolutions");
  const double dt = t_final / time_res;

  QuadratureSet q;
  q.dim = d + 1;
  q.rule = Rule::BoundaryGrid;
  for (const Face& f : box_faces(spatial)) {
    // midpoint grid over the face's free axes
    std::vector<int> res;
    std::vector<int> free_axes;
    for (int i = 0; i < d; ++i)
      if (i != f.axis) free_axes.push_back(i);
    std::size_t cells = 1;
    double cell_measure = 1.0;
    for (std::size_t k = 0; k < free_axes.size(); ++k) {
      res.push_back(face_res[k]);
      cells *= static_cast<std::size_t>(face_res[k]);
      cell_measure *= spatial.extent(free_axes[k]) / face_res[k];
    }
    std::vector<int> idx(free_axes.size(), 0);
    for (std::size_t cidx = 0; cidx < cells; ++cidx) {
      std::vector<double> xpt(d);
      xpt[f.axis] = f.coord;
      for (std::size_t k = 0; k < free_axes.size(); ++k) {
        const int ax = free_axes[k];
        xpt[ax] = spatial.lo[ax] + spatial.extent(ax) * (idx[k] + 0.5) / res[k];
      }
      for (int ti = 0; ti < time_res; ++ti) {
        for (int i = 0; i < d; ++i) q.points.push_back(xpt[i]);
        q.points.push_back((ti + 0.5) * dt);
        q.weights.push_back(cell_measure * dt);
      }
      for (std::size_t k = free_axes.size(); k-- > 0;) {
        if (++idx[k] < res[k]) break;
        idx[k] = 0;
      }
    }
  }
  return q;
}

QuadratureSet boundary_points(const Box& spatial, double t_final, std::size_t n) {
  const int d = spatial.dim();
  if (d == 1) {
    const int nt = std::max<int>(1, static_cast<int>(std::llround(n / 2.0)));
    return boundary_grid(spatial, t_final, {}, nt);
  }
  // choose face cells ~ cubic: total boundary cells nb and time slices nt
  // with nb * nt ~ n and cells of aspect ~ 1 in the free axes.
  double perimeter = 0.0;
  for (const Face& f : box_faces(spatial)) perimeter += f.measure;
  // nb cells of size h^{d-1} over measure `perimeter`, nt = T/h ideally:
  // h^(d) ~ perimeter * T / n
  const double h = std::pow(perimeter * t_final / static_cast<double>(n),
                            1.0 / static_cast<double>(d));
  std::vector<int> face_res(d - 1, 1);
  // per-axis counts differ per face in general boxes; use the mean extent.
  for (int k = 0; k < d - 1; ++k) {
    double mean_extent = 0.0;
    for (int i = 0; i < d; ++i) mean_extent += spatial.extent(i);
    mean_extent /= d;
    face_res[k] = std::max(1, static_cast<int>(std::llround(mean_extent / h)));
  }
  std::size_t cells = 0;
  {
    std::size_t per_face = 1;
    for (int k = 0; k < d - 1; ++k) per_face *= face_res[k];
    cells = per_face * 2 * d;
  }
  const int nt = std::max<int>(
      1, static_cast<int>(std::llround(static_cast<double>(n) /
                                       static_cast<double>(cells))));
  return boundary_grid(spatial, t_final, face_res, nt);
}

QuadratureSet boundary_random(const Box& spatial, double t_final, std::size_t n,
                              std::uint64_t seed) {
  const int d = spatial.dim();
  const std::vector<Face> faces = box_faces(spatial);
  double total = 0.0;
  for (const Face& f : faces) total += f.measure;

  QuadratureSet q;
  q.dim = d + 1;
  q.rule = Rule::BoundaryRandom;
  q.points.resize(n * (d + 1));
  q.weights.assign(n, total * t_final / static_cast<double>(n));
  Rng rng(derive_seed(seed, 0xb0b0));
  for (std::size_t p = 0; p < n; ++p) {
    double pick = rng.uniform() * total;
    std::size_t fi = 0;
    while (fi + 1 < faces.size() && pick > faces[fi].measure) {
      pick -= faces[fi].measure;
      ++fi;
    }
    const Face& f = faces[fi];
    for (int i = 0; i < d; ++i)
      q.points[p * (d + 1) + i] =
          (i == f.axis) ? f.coord : rng.uniform(spatial.lo[i], spatial.hi[i]);
    q.points[p * (d + 1) + d] = rng.uniform(0.0, t_final);
  }
  return q;
}

// ---------------------------------------------------------------------------

double integrate(const QuadratureSet& q, std::span<const double> values) {
  if (values.size() != q.size())
    throw std::invalid_argument("integrate: values/points length mismatch");
  std::vector<double> terms(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    terms[i] = q.weights[i] * values[i];
  return pairwise_sum(terms);
}

void dump_csv(const QuadratureSet& q, std::ostream& out, const std::string& label) {
  if (!label.empty()) out << "set,";
  for (int i = 0; i < q.dim; ++i) out << "x" << (i + 1) << ",";
  out << "w\n";
  char buf[32];
  for (std::size_t p = 0; p < q.size(); ++p) {
    if (!label.empty()) out << label << ",";
    for (int i = 0; i < q.dim; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", q.points[p * q.dim + i]);
      out << buf << ",";
    }
    std::snprintf(buf, sizeof buf, "%.17g", q.weights[p]);
    out << buf << "\n";
  }
}

}  // namespace dapinn
