#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dapinn/tape.hpp"

namespace dapinn {

/// Replays one recorded point-computation over many points.
///
/// A tape recorded for a single representative point is compiled once; the
/// leaves are split into shared variables (parameters, broadcast to every
/// point) and per-point variables (coordinates, weights, data values). The
/// replay then evaluates the graph for all points in fixed-size chunks with
/// contiguous per-lane arrays, and can run a reverse sweep that accumulates
/// the gradient of the summed first output with respect to the shared
/// leaves.
///
/// Chunks are processed in index order and lane sums are sequential, so
/// results are bit-reproducible for identical inputs.
class BatchedProgram {
 public:
  static constexpr std::size_t kChunk = 32;

  BatchedProgram(const Tape& tape, std::span<const ScalarNode> shared_leaves,
                 std::span<const ScalarNode> point_leaves,
                 std::span<const ScalarNode> outputs);

  std::size_t n_points() const { return n_points_; }
  std::size_t n_outputs() const { return outputs_.size(); }
  std::size_t n_nodes() const { return op_.size(); }

  /// Copies per-point leaf values, row-major n_points x n_point_leaves.
  void set_points(std::span<const double> inputs, std::size_t n_points);

  /// Broadcasts shared leaf values (kept until the next call).
  void set_shared(std::span<const double> values);

  /// Forward over all points; out_sums[k] = sum over points of output k.
  void forward_sums(std::span<double> out_sums);

  /// Forward over all points; per-point outputs row-major n_points x K.
  void forward_each(std::span<double> out);

  /// Forward plus reverse; returns the sum over points of output 0 and
  /// accumulates scale * d(sum)/d(shared_m) into grad[m].
  double forward_reverse(std::span<double> grad, double scale);

 private:
  void bind_chunk(std::size_t base, std::size_t lanes);
  void run_forward(bool zero_adj);
  void run_reverse();

  std::vector<Op> op_;
  std::vector<std::int32_t> a_, b_, c_;
  std::vector<std::int32_t> shared_, point_, outputs_;
  std::vector<double> val_, adj_;
  std::vector<double> inputs_;
  std::size_t n_points_ = 0;
};

}  // namespace dapinn
