#include "dapinn/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace dapinn {

namespace {

bool box_contains(const Box& b, std::span<const double> x, double tol) {
  for (int i = 0; i < b.dim(); ++i)
    if (x[i] < b.lo[i] - tol || x[i] > b.hi[i] + tol) return false;
  return true;
}

}  // namespace

int Geometry::dim() const {
  if (const Box* b = as_box()) return b->dim();
  if (as_disc()) return 2;
  return as_union()->parts.front().dim();
}

double Geometry::measure() const {
  if (const Box* b = as_box()) {
    double m = 1.0;
    for (int i = 0; i < b->dim(); ++i) m *= b->extent(i);
    return m;
  }
  if (const Disc* d = as_disc())
    return 3.14159265358979323846264338327950288 * d->radius * d->radius;
  double m = 0.0;
  for (const Box& p : as_union()->parts) m += Geometry(p).measure();
  return m;
}

bool Geometry::contains(std::span<const double> x, double tol) const {
  if (static_cast<int>(x.size()) != dim())
    throw std::invalid_argument("Geometry::contains: dimension mismatch");
  if (const Box* b = as_box()) return box_contains(*b, x, tol);
  if (const Disc* d = as_disc()) {
    const double dx = x[0] - d->center[0];
    const double dy = x[1] - d->center[1];
    return std::sqrt(dx * dx + dy * dy) <= d->radius + tol;
  }
  for (const Box& p : as_union()->parts)
    if (box_contains(p, x, tol)) return true;
  return false;
}

Box Geometry::bounding_box() const {
  if (const Box* b = as_box()) return *b;
  if (const Disc* d = as_disc()) {
    return Box{{d->center[0] - d->radius, d->center[1] - d->radius},
               {d->center[0] + d->radius, d->center[1] + d->radius}};
  }
  const BoxUnion* u = as_union();
  Box bb = u->parts.front();
  for (const Box& p : u->parts)
    for (int i = 0; i < p.dim(); ++i) {
      bb.lo[i] = std::min(bb.lo[i], p.lo[i]);
      bb.hi[i] = std::max(bb.hi[i], p.hi[i]);
    }
  return bb;
}

}  // namespace dapinn
