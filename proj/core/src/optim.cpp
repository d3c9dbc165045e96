#include "dapinn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dapinn {

const char* optim_status_name(OptimStatus s) {
  switch (s) {
    case OptimStatus::Converged: return "converged";
    case OptimStatus::SmallProgress: return "small-progress";
    case OptimStatus::MaxIterations: return "max-iterations";
    case OptimStatus::LineSearchFailed: return "line-search-failed";
    case OptimStatus::NonFinite: return "non-finite";
  }
  return "?";
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Cubic interpolation of a step inside [lo, hi] from values/slopes at the
/// ends; falls back to bisection when degenerate.
double interp_step(double a, double fa, double ga, double b, double fb,
                   double gb) {
  const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - ga * gb;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    double t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

struct LineEval {
  double f;
  double g;  // slope along the direction
  bool finite;
};

}  // namespace

OptimResult lbfgs_minimize(const ObjectiveFn& fn, std::span<const double> x0,
                           const LbfgsOptions& opts) {
  const std::size_t n = x0.size();
  OptimResult res;
  res.x.assign(x0.begin(), x0.end());

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(n), x_new(n), g_new(n), dir(n);
  double f = fn(x, g);
  res.n_evals = 1;
  if (!std::isfinite(f)) {
    res.status = OptimStatus::NonFinite;
    res.loss = f;
    return res;
  }
  res.loss = f;
  res.grad_norm = inf_norm(g);
  if (opts.record_trajectory) res.trajectory.push_back(f);

  std::vector<std::vector<double>> s_mem, y_mem;
  std::vector<double> rho_mem;
  std::vector<double> alpha_buf;

  const auto eval_line = [&](std::span<const double> d, double alpha,
                             LineEval& out) {
    for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + alpha * d[i];
    out.f = fn(x_new, g_new);
    ++res.n_evals;
    out.finite = std::isfinite(out.f);
    out.g = out.finite ? dot(g_new, d) : std::numeric_limits<double>::quiet_NaN();
  };

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (inf_norm(g) <= opts.grad_tolerance) {
      res.status = OptimStatus::Converged;
      break;
    }

    // two-loop recursion
    dir.assign(g.begin(), g.end());
    const std::size_t m = s_mem.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t j = m; j-- > 0;) {
      alpha_buf[j] = rho_mem[j] * dot(s_mem[j], dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha_buf[j] * y_mem[j][i];
    }
    if (m > 0) {
      const double gamma =
          dot(s_mem[m - 1], y_mem[m - 1]) / dot(y_mem[m - 1], y_mem[m - 1]);
      for (double& v : dir) v *= gamma;
    }
    for (std::size_t j = 0; j < m; ++j) {
      const double beta = rho_mem[j] * dot(y_mem[j], dir);
      for (std::size_t i = 0; i < n; ++i)
        dir[i] += (alpha_buf[j] - beta) * s_mem[j][i];
    }
    for (double& v : dir) v = -v;

    double g0 = dot(g, dir);
    if (!(g0 < 0.0)) {
      // not a descent direction; drop the memory and take steepest descent
      s_mem.clear();
      y_mem.clear();
      rho_mem.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      g0 = dot(g, dir);
      if (!(g0 < 0.0)) {
        res.status = OptimStatus::Converged;  // gradient numerically zero
        break;
      }
    }

    // strong Wolfe line search (bracket + zoom)
    const double f0 = f;
    double alpha = iter == 0 ? std::min(1.0, 1.0 / std::max(1e-12, inf_norm(g)))
                             : 1.0;
    double alpha_prev = 0.0, f_prev = f0, g_prev = g0;
    LineEval ev{};
    bool accepted = false;
    double lo = 0.0, f_lo = f0, g_lo = g0, hi = 0.0, f_hi = 0.0, g_hi = 0.0;
    bool bracketed = false;

    for (int ls = 0; ls < opts.max_line_search && !accepted; ++ls) {
      if (!bracketed) {
        eval_line(dir, alpha, ev);
        if (!ev.finite || ev.f > f0 + opts.c1 * alpha * g0 ||
            (ls > 0 && ev.f >= f_prev)) {
          lo = alpha_prev;
          f_lo = f_prev;
          g_lo = g_prev;
          hi = alpha;
          f_hi = ev.finite ? ev.f : f0 + 1e30;
          g_hi = ev.finite ? ev.g : 1.0;
          bracketed = true;
          continue;
        }
        if (std::abs(ev.g) <= -opts.c2 * g0) {
          accepted = true;
          break;
        }
        if (ev.g >= 0.0) {
          lo = alpha;
          f_lo = ev.f;
          g_lo = ev.g;
          hi = alpha_prev;
          f_hi = f_prev;
          g_hi = g_prev;
          bracketed = true;
          continue;
        }
        alpha_prev = alpha;
        f_prev = ev.f;
        g_prev = ev.g;
        alpha *= 2.0;
      } else {
        // zoom
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
        alpha = interp_step(lo, f_lo, g_lo, hi, f_hi, g_hi);
        eval_line(dir, alpha, ev);
        if (!ev.finite || ev.f > f0 + opts.c1 * alpha * g0 || ev.f >= f_lo) {
          hi = alpha;
          f_hi = ev.finite ? ev.f : f0 + 1e30;
          g_hi = ev.finite ? ev.g : 1.0;
        } else {
          if (std::abs(ev.g) <= -opts.c2 * g0) {
            accepted = true;
            break;
          }
          if (ev.g * (hi - lo) >= 0.0) {
            hi = lo;
            f_hi = f_lo;
            g_hi = g_lo;
          }
          lo = alpha;
          f_lo = ev.f;
          g_lo = ev.g;
        }
      }
    }

    if (!accepted) {
      res.status = OptimStatus::LineSearchFailed;
      break;
    }

    // curvature update
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - x[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-10 * std::sqrt(dot(s, s)) * std::sqrt(dot(y, y))) {
      if (static_cast<int>(s_mem.size()) == opts.memory) {
        s_mem.erase(s_mem.begin());
        y_mem.erase(y_mem.begin());
        rho_mem.erase(rho_mem.begin());
      }
      s_mem.push_back(std::move(s));
      y_mem.push_back(std::move(y));
      rho_mem.push_back(1.0 / sy);
    }

    x.swap(x_new);
    g.swap(g_new);
    f = ev.f;
    res.iterations = iter + 1;
    if (opts.record_trajectory) res.trajectory.push_back(f);
    if (f < res.loss) {
      res.loss = f;
      res.x = x;
    }

    const std::size_t traj = res.trajectory.size();
    if (opts.record_trajectory && traj > static_cast<std::size_t>(opts.patience)) {
      const double past = res.trajectory[traj - 1 - opts.patience];
      if (std::abs(past - f) <=
          opts.loss_change_tolerance * std::max(1.0, std::abs(f))) {
        res.status = OptimStatus::SmallProgress;
        break;
      }
    }
  }

  res.grad_norm = inf_norm(g);
  if (f <= res.loss) {
    res.loss = f;
    res.x = x;
  }
  return res;
}

OptimResult adam_minimize(const ObjectiveFn& fn, std::span<const double> x0,
                          const AdamOptions& opts) {
  const std::size_t n = x0.size();
  OptimResult res;
  res.x.assign(x0.begin(), x0.end());

  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(n), m(n, 0.0), v(n, 0.0);
  double f = fn(x, g);
  res.n_evals = 1;
  if (!std::isfinite(f)) {
    res.status = OptimStatus::NonFinite;
    res.loss = f;
    return res;
  }
  res.loss = f;
  if (opts.record_trajectory) res.trajectory.push_back(f);

  double b1t = 1.0, b2t = 1.0;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (opts.grad_tolerance > 0.0 && inf_norm(g) <= opts.grad_tolerance) {
      res.status = OptimStatus::Converged;
      break;
    }
    b1t *= opts.beta1;
    b2t *= opts.beta2;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g[i];
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g[i] * g[i];
      const double mh = m[i] / (1.0 - b1t);
      const double vh = v[i] / (1.0 - b2t);
      x[i] -= opts.learning_rate * mh / (std::sqrt(vh) + opts.epsilon);
    }
    f = fn(x, g);
    ++res.n_evals;
    res.iterations = iter + 1;
    if (!std::isfinite(f)) {
      res.status = OptimStatus::NonFinite;
      break;
    }
    if (opts.record_trajectory) res.trajectory.push_back(f);
    if (f < res.loss) {
      res.loss = f;
      res.x = x;
    }
    if (iter + 1 == opts.max_iterations) res.status = OptimStatus::MaxIterations;
  }
  res.grad_norm = inf_norm(g);
  return res;
}

}  // namespace dapinn
