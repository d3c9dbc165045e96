#pragma once

#include <functional>
#include <span>
#include <vector>

namespace dapinn {

/// Objective callback: fills grad (same length as x) and returns the loss.
using ObjectiveFn =
    std::function<double(std::span<const double>, std::span<double>)>;

enum class OptimStatus {
  Converged,       // gradient norm below tolerance
  SmallProgress,   // relative loss change below tolerance
  MaxIterations,
  LineSearchFailed,
  NonFinite,       // objective not finite at the starting point
};

const char* optim_status_name(OptimStatus s);

struct LbfgsOptions {
  int memory = 10;
  int max_iterations = 10000;
  double grad_tolerance = 1e-9;
  /// Stop when |f_{k-patience} - f_k| <= tol * max(1, |f_k|).
  double loss_change_tolerance = 1e-12;
  int patience = 12;
  // strong Wolfe constants
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 30;
  bool record_trajectory = true;
};

struct OptimResult {
  std::vector<double> x;  // best iterate seen
  double loss = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int n_evals = 0;
  OptimStatus status = OptimStatus::MaxIterations;
  std::vector<double> trajectory;  // loss at accepted iterates
};

/// L-BFGS with a strong Wolfe line search. Accepted iterates never increase
/// the loss; a failed line search returns the best iterate with a flagged
/// status instead of raising.
OptimResult lbfgs_minimize(const ObjectiveFn& fn, std::span<const double> x0,
                           const LbfgsOptions& opts = {});

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iterations = 2000;
  double grad_tolerance = 0.0;
  bool record_trajectory = true;
};

/// Full-batch Adam; deterministic for identical inputs.
OptimResult adam_minimize(const ObjectiveFn& fn, std::span<const double> x0,
                          const AdamOptions& opts = {});

}  // namespace dapinn
