#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "dapinn/rng.hpp"

namespace testutil {

/// Central finite-difference gradient of a scalar function of a vector.
inline std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Max relative error between two vectors with a denominator floor (entries
/// that are both tiny compare as equal).
inline double max_rel_err(const std::vector<double>& a,
                          const std::vector<double>& b, double floor = 1e-8) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]) /
                        std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  return m;
}

}  // namespace testutil
