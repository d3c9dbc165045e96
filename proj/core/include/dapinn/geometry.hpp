#pragma once

#include <array>
#include <span>
#include <variant>
#include <vector>

namespace dapinn {

/// Axis-aligned box with per-axis bounds; also models time slabs, where the
/// time axis is the last coordinate by convention.
struct Box {
  std::vector<double> lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double extent(int axis) const { return hi[axis] - lo[axis]; }
  static Box unit(int d) {
    return Box{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  }
  /// Cartesian product with an extra trailing axis (t0, t1).
  Box with_time(double t0, double t1) const {
    Box b = *this;
    b.lo.push_back(t0);
    b.hi.push_back(t1);
    return b;
  }
};

/// Disc in the first two coordinates (2D only).
struct Disc {
  std::array<double, 2> center;
  double radius;
};

/// Union of pairwise disjoint boxes of equal dimension.
struct BoxUnion {
  std::vector<Box> parts;
};

class Geometry {
 public:
  Geometry() : shape_(Box::unit(1)) {}
  Geometry(Box b) : shape_(std::move(b)) {}
  Geometry(Disc d) : shape_(d) {}
  Geometry(BoxUnion u) : shape_(std::move(u)) {}

  int dim() const;
  double measure() const;
  bool contains(std::span<const double> x, double tol = 0.0) const;
  Box bounding_box() const;

  const Box* as_box() const { return std::get_if<Box>(&shape_); }
  const Disc* as_disc() const { return std::get_if<Disc>(&shape_); }
  const BoxUnion* as_union() const { return std::get_if<BoxUnion>(&shape_); }

 private:
  std::variant<Box, Disc, BoxUnion> shape_;
};

}  // namespace dapinn
