#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dapinn/geometry.hpp"

namespace dapinn {

enum class Rule {
  Sobol,
  MidpointGrid,
  UniformRandom,
  BoundaryGrid,
  BoundaryRandom,
};

const char* rule_name(Rule r);

/// Points with positive weights; weights sum to the measure of the set the
/// rule covers (interior geometry or boundary-in-time surface).
struct QuadratureSet {
  int dim = 0;
  Rule rule = Rule::MidpointGrid;
  std::vector<double> points;   // row-major size() x dim
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const {
    return {points.data() + i * dim, static_cast<std::size_t>(dim)};
  }
  double weight_sum() const;
};

/// First n Sobol points (index 0 of the underlying sequence is skipped, so
/// n=1 yields the box midpoint) scaled to the box, uniform weights.
/// Supports dimension <= 64 (table-driven direction numbers).
QuadratureSet sobol_points(std::size_t n, const Box& box);

constexpr int kSobolMaxDim = 64;

/// Midpoint rule. Boxes take one resolution per axis. Discs take {n_r,
/// n_phi} and use the equally spaced radius-angle grid with the polar
/// Jacobian weight r dr dphi; the weights sum to the disc area exactly.
QuadratureSet midpoint_grid(std::span<const int> resolution, const Geometry& geom);

/// n iid uniform points (direct sampling for boxes, rejection for discs and
/// unions), weights measure/n, deterministic per seed.
QuadratureSet uniform_random(std::size_t n, const Geometry& geom,
                             std::uint64_t seed);

/// Tensor grid on the space-time lateral boundary of `spatial x (0, T)`:
/// every boundary face of the spatial box is subdivided, times are the
/// midpoints of `time_res` slices. Weights are face-cell measure x dt and
/// sum to |boundary| * T. For a 1-D spatial interval the faces are its two
/// endpoints with counting measure 1 each.
QuadratureSet boundary_grid(const Box& spatial, double t_final,
                            std::span<const int> face_res, int time_res);

/// Grid realization of approximately n boundary points (face cells near
/// cubic, time slices chosen to hit n).
QuadratureSet boundary_points(const Box& spatial, double t_final, std::size_t n);

/// n random points on the lateral boundary, faces picked proportionally to
/// their measure. Weights |boundary| * T / n.
QuadratureSet boundary_random(const Box& spatial, double t_final, std::size_t n,
                              std::uint64_t seed);

/// Sum of w_i v_i (pairwise summation).
double integrate(const QuadratureSet& q, std::span<const double> values);

template <class Fn>
double integrate_fn(const QuadratureSet& q, Fn&& fn) {
  std::vector<double> vals(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) vals[i] = fn(q.point(i));
  return integrate(q, vals);
}

/// Per-axis grid resolutions whose product is closest to `target`, close to
/// the relative axis extents being ignored: counts are near-equal per axis.
std::vector<int> grid_dims_for(int dim, std::size_t target);

void dump_csv(const QuadratureSet& q, std::ostream& out,
              const std::string& label = "");

double pairwise_sum(std::span<const double> v);

}  // namespace dapinn
