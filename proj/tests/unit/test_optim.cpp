#include "dapinn/optim.hpp"

#include <cmath>

#include "doctest.h"

using namespace dapinn;

namespace {

ObjectiveFn shifted_quadratic(std::vector<double> c) {
  return [c](std::span<const double> x, std::span<double> g) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - c[i];
      f += d * d;
      g[i] = 2.0 * d;
    }
    return f;
  };
}

ObjectiveFn rosenbrock() {
  return [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
}

}  // namespace

TEST_CASE("lbfgs solves a quadratic to 1e-8 within 2*dim iterations") {
  const std::vector<double> c{1.0, -2.0, 0.5, 3.0, -0.25, 4.0, 1.5, -1.0};
  const std::vector<double> x0(c.size(), 0.0);
  const OptimResult r = lbfgs_minimize(shifted_quadratic(c), x0);
  CHECK(r.iterations <= 2 * static_cast<int>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(std::abs(r.x[i] - c[i]) < 1e-8);
}

TEST_CASE("lbfgs finds the Rosenbrock minimum from (-1.2, 1)") {
  const std::vector<double> x0{-1.2, 1.0};
  const OptimResult r = lbfgs_minimize(rosenbrock(), x0);
  CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
  CHECK(std::abs(r.x[1] - 1.0) < 1e-5);
  CHECK((r.status == OptimStatus::Converged ||
         r.status == OptimStatus::SmallProgress));
}

TEST_CASE("accepted lbfgs iterates never increase the loss") {
  const OptimResult r = lbfgs_minimize(rosenbrock(), std::vector<double>{-1.2, 1.0});
  for (std::size_t k = 1; k < r.trajectory.size(); ++k)
    CHECK(r.trajectory[k] <= r.trajectory[k - 1]);
}

TEST_CASE("non-finite regions shrink the step instead of crashing") {
  // objective is quadratic near the optimum but NaN far away
  const ObjectiveFn fn = [](std::span<const double> x, std::span<double> g) {
    if (std::abs(x[0]) > 3.0) {
      g[0] = std::nan("");
      return std::nan("");
    }
    g[0] = 2.0 * (x[0] - 2.0);
    return (x[0] - 2.0) * (x[0] - 2.0) + 1.0;
  };
  const OptimResult r = lbfgs_minimize(fn, std::vector<double>{-2.5});
  CHECK(std::isfinite(r.loss));
  CHECK(std::abs(r.x[0] - 2.0) < 1e-6);
}

TEST_CASE("a failed line search returns the best iterate with a flag") {
  // |x| is non-smooth at the minimum; the Wolfe search eventually fails
  const ObjectiveFn fn = [](std::span<const double> x, std::span<double> g) {
    g[0] = x[0] >= 0 ? 1.0 : -1.0;
    return std::abs(x[0]);
  };
  const OptimResult r = lbfgs_minimize(fn, std::vector<double>{1.0});
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss <= 1.0);
}

TEST_CASE("non-finite start is flagged") {
  const ObjectiveFn fn = [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::nan("");
  };
  const OptimResult r = lbfgs_minimize(fn, std::vector<double>{0.0});
  CHECK(r.status == OptimStatus::NonFinite);
}

TEST_CASE("adam reduces a quadratic loss by 100x within 2000 steps") {
  const std::vector<double> c{0.4, -0.7, 1.1};
  const std::vector<double> x0{1.4, 0.3, 2.1};
  AdamOptions opts;
  opts.learning_rate = 1e-3;
  opts.max_iterations = 2000;
  const ObjectiveFn fn = shifted_quadratic(c);
  std::vector<double> g(3);
  const double f0 = fn(x0, g);
  const OptimResult r = adam_minimize(fn, x0, opts);
  CHECK(r.loss <= f0 / 100.0);
}

TEST_CASE("adam leaves a minimizer untouched") {
  const std::vector<double> c{1.0, 2.0};
  const OptimResult r = adam_minimize(shifted_quadratic(c), c);
  CHECK(r.x == c);
}

TEST_CASE("adam is deterministic") {
  const std::vector<double> c{0.3, 0.6, -0.2};
  const std::vector<double> x0{0.0, 0.0, 0.0};
  AdamOptions opts;
  opts.max_iterations = 500;
  const OptimResult a = adam_minimize(shifted_quadratic(c), x0, opts);
  const OptimResult b = adam_minimize(shifted_quadratic(c), x0, opts);
  CHECK(a.x == b.x);
  CHECK(a.trajectory == b.trajectory);
}
