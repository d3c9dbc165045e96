// Acceptance suite: trains real models and checks the reproduction targets
// end to end. Prints one PASS/FAIL line per criterion; exit code is the
// number of failures. Expect a long runtime (an hour or more on two cores);
// restarts of one criterion run in parallel (bounded by DAPINN_THREADS).
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dapinn/metrics.hpp"
#include "dapinn/network.hpp"
#include "dapinn/problems.hpp"
#include "dapinn/training.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace dapinn;

namespace {

struct BestRun {
  TrainRecord record;
  ErrorReport metrics;
};

/// Best-of-restarts protocol: independent seeds, select by training error.
BestRun train_best(const ProblemSpec& spec, Hyperparameters hyper,
                   const SetSizes& sizes, int restarts, std::uint64_t seed) {
  const std::vector<Hyperparameters> grid{hyper};
  const EnsembleResult res = ensemble(spec, grid, restarts, sizes, seed, true);
  const ConfigStats& cs = res.ranked[0];
  return {res.records[0][cs.best_restart], cs.best_metrics};
}

// ---------------------------------------------------------------------------

bool c1_differentiation(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  // loss gradients vs central finite differences, 5 random theta each
  for (const char* id : {"poisson", "poisson-noisy", "heat1d", "heatnd:3",
                         "wave-gcc", "wave-nogcc", "stokes"}) {
    const ProblemSpec spec = problem_by_id(id);
    SetSizes sizes;
    sizes.n_total = 40;
    if (spec.fixed_counts)
      sizes.explicit_counts = std::array<std::size_t, 3>{20, 8, 12};
    const TrainingSets sets = make_training_sets(spec, sizes, 5);
    const auto data = make_data(spec, sets.data, spec.noise_level, 5);
    MLPArchitecture arch{spec.input_dim, spec.output_dim, 2, 6};
    LossEvaluator eval(spec, arch, sets, data, 0.01, 1e-6, 2);
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const ParameterVector theta = init_params(arch, 100 + s);
      std::vector<double> grad(theta.size());
      eval.value_and_gradient(theta.theta, grad);
      const auto fd = accept::fd_gradient(
          [&](const std::vector<double>& th) { return eval.value(th); },
          theta.theta, 1e-5);
      worst = std::max(worst, accept::max_rel_err(grad, fd, 1e-5));
    }
    if (worst > 1e-5) ok = false;
    os << " " << id << ":grad=" << worst;
  }
  // jet second derivatives vs finite differences of the plain forward pass
  double worst_jet = 0.0;
  for (const char* id : {"poisson", "heat1d", "wave-gcc", "stokes"}) {
    const ProblemSpec spec = problem_by_id(id);
    MLPArchitecture arch{spec.input_dim, spec.output_dim, 3, 10};
    const ParameterVector theta = init_params(arch, 9);
    const QuadratureSet pts = uniform_random(20, spec.domain, 77);
    const double h = 1e-4;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      std::vector<double> x(pts.point(p).begin(), pts.point(p).end());
      // the network is smooth everywhere, so the stencil may cross the
      // domain boundary
      Tape tape;
      const auto jets = forward_jet(tape, arch, theta.theta, x);
      for (int k = 0; k < spec.output_dim; ++k) {
        for (int i = 0; i < spec.input_dim; ++i) {
          std::vector<double> xp = x, xm = x;
          xp[i] += h;
          xm[i] -= h;
          const double up = forward(arch, theta.theta, xp)[k];
          const double um = forward(arch, theta.theta, xm)[k];
          const double u0 = forward(arch, theta.theta, x)[k];
          worst_jet = std::max(
              worst_jet, accept::rel_err(jets[k].d1[i].value(),
                                         (up - um) / (2 * h), 1e-6));
          worst_jet = std::max(
              worst_jet, accept::rel_err(jets[k].d2[i].value(),
                                         (up - 2 * u0 + um) / (h * h), 1e-4));
        }
      }
    }
  }
  if (worst_jet > 1e-4) ok = false;
  os << " jets=" << worst_jet;
  detail = os.str();
  return ok;
}

bool c2_residual_annihilation(std::string& detail) {
  std::ostringstream os;
  bool ok = true;
  const auto check = [&](const ProblemSpec& spec, std::uint64_t seed) {
    const QuadratureSet pts = uniform_random(200, spec.domain, seed);
    double worst = 0.0;
    std::vector<double> f(spec.n_source);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Tape tape;
      const auto x = pts.point(i);
      spec.source(x, f);
      std::vector<ScalarNode> fn;
      for (double v : f) fn.push_back(tape.constant(v));
      for (const ScalarNode& r :
           pde_residuals(spec, oracle_jets(tape, spec, x), fn))
        worst = std::max(worst, std::abs(r.value()));
    }
    // data and boundary residuals of the exact field
    const QuadratureSet obs = uniform_random(100, spec.observation, seed + 1);
    const auto g = make_data(spec, obs, 0.0, 0);
    std::vector<double> u(spec.output_dim);
    for (std::size_t j = 0; j < obs.size(); ++j) {
      spec.exact(obs.point(j), u);
      for (int c = 0; c < spec.data_dim; ++c)
        worst = std::max(worst, std::abs(u[c] - g[j * spec.data_dim + c]));
    }
    if (spec.has_boundary_term) {
      const QuadratureSet bd =
          boundary_random(spec.spatial_box, spec.t_final, 100, seed + 2);
      for (std::size_t j = 0; j < bd.size(); ++j) {
        spec.exact(bd.point(j), u);
        const double trace =
            spec.boundary_trace ? spec.boundary_trace(bd.point(j)) : 0.0;
        worst = std::max(worst, std::abs(u[0] - trace));
      }
    }
    if (worst > 1e-10) ok = false;
    os << " " << spec.id << "=" << worst;
  };
  check(poisson_spec(), 21);
  check(heat1d_spec(true), 22);
  check(heat1d_spec(false), 23);
  check(heatnd_spec(5), 24);
  check(wave_spec(true), 25);
  check(wave_spec(false), 26);
  check(stokes_spec(), 27);
  detail = os.str();
  return ok;
}

bool c3_quadrature(std::string& detail) {
  std::ostringstream os;
  bool ok = true;

  // midpoint: error ratio ~4 when h halves, smooth 2D integrand
  const auto mid_err = [](int r) {
    const std::vector<int> res{r, r};
    const QuadratureSet q = midpoint_grid(res, Geometry(Box::unit(2)));
    return std::abs(integrate_fn(q, [](std::span<const double> x) {
             return x[0] * x[0] + x[1] * x[1];
           }) - 2.0 / 3.0);
  };
  const double ratio1 = mid_err(16) / mid_err(32);
  const double ratio2 = mid_err(32) / mid_err(64);
  if (std::abs(ratio1 - 4.0) > 0.8 || std::abs(ratio2 - 4.0) > 0.8) ok = false;
  os << " midpoint_ratios=" << ratio1 << "," << ratio2;

  // Monte Carlo RMS slope over n in {2^8 .. 2^14}
  const Geometry g5(Box::unit(5));
  const auto prod = [](std::span<const double> x) {
    double p = 1.0;
    for (double v : x) p *= v;
    return p;
  };
  const double exact = 1.0 / 32.0;
  std::vector<double> logn, logerr;
  for (std::size_t n = 256; n <= 16384; n *= 2) {
    double mse = 0.0;
    const int reps = 60;
    for (int seed = 0; seed < reps; ++seed) {
      const double est = integrate_fn(uniform_random(n, g5, seed), prod);
      mse += (est - exact) * (est - exact);
    }
    logn.push_back(std::log(static_cast<double>(n)));
    logerr.push_back(0.5 * std::log(mse / reps));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < logn.size(); ++i) {
    sx += logn[i];
    sy += logerr[i];
    sxx += logn[i] * logn[i];
    sxy += logn[i] * logerr[i];
  }
  const double m = static_cast<double>(logn.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  if (std::abs(slope + 0.5) > 0.08) ok = false;
  os << " mc_slope=" << slope;

  // Sobol beats the Monte-Carlo RMS at n = 4096 on the product integrand
  const double sobol_err =
      std::abs(integrate_fn(sobol_points(4096, Box::unit(5)), prod) - exact);
  double mc_mse = 0.0;
  for (int seed = 0; seed < 60; ++seed) {
    const double est = integrate_fn(uniform_random(4096, g5, seed), prod);
    mc_mse += (est - exact) * (est - exact);
  }
  const double mc_rms = std::sqrt(mc_mse / 60);
  if (!(sobol_err < mc_rms)) ok = false;
  os << " sobol_err=" << sobol_err << " mc_rms=" << mc_rms;

  detail = os.str();
  return ok;
}

bool c4_poisson(std::string& detail, ErrorReport* out_metrics) {
  Hyperparameters h;
  h.depth = 4;
  h.width = 24;
  h.lambda = 0.001;
  h.max_iterations = 4000;
  SetSizes sizes;
  sizes.n_total = 400;
  const ProblemSpec spec = poisson_spec();
  const BestRun best = train_best(spec, h, sizes, 5, 7);
  if (out_metrics) *out_metrics = best.metrics;
  // test-set independence: the grid and random test sets must agree
  const MLPArchitecture arch{2, 1, h.depth, h.width};
  const double l2_grid = best.metrics.l2_pct;
  const double l2_rand = l2_relative_error(
      spec, arch, best.record.theta.theta,
      uniform_random(100000, spec.domain, 99));
  const bool sets_agree =
      std::abs(l2_grid - l2_rand) <= 0.05 * std::max(l2_grid, l2_rand);
  std::ostringstream os;
  os << " L2=" << best.metrics.l2_pct << "% (<=1), H1=" << best.metrics.h1_pct
     << "% (<=3.3), E_T=" << best.record.e_t
     << " (<=5e-3), grid-vs-random L2=" << l2_rand << "%";
  detail = os.str();
  return best.metrics.l2_pct <= 1.0 && best.metrics.h1_pct <= 3.3 &&
         best.record.e_t <= 5e-3 && sets_agree;
}

bool c5_poisson_noisy(std::string& detail) {
  Hyperparameters h;
  h.depth = 4;
  h.width = 24;
  h.lambda = 0.001;
  h.max_iterations = 4000;
  SetSizes sizes;
  sizes.n_total = 400;
  const BestRun best = train_best(poisson_spec(0.01), h, sizes, 5, 7);
  std::ostringstream os;
  os << " L2=" << best.metrics.l2_pct << "% (<=2.5), H1="
     << best.metrics.h1_pct << "% (<=7)";
  detail = os.str();
  return best.metrics.l2_pct <= 2.5 && best.metrics.h1_pct <= 7.0;
}

bool c6_heat1d(std::string& detail) {
  Hyperparameters h;
  h.depth = 8;
  h.width = 20;
  h.lambda = 0.001;
  h.max_iterations = 3500;
  SetSizes sizes;
  sizes.n_total = 800;  // 16 x 50
  const BestRun best = train_best(heat1d_spec(), h, sizes, 5, 7);
  std::ostringstream os;
  os << " L2=" << best.metrics.l2_pct << "% (<=0.6), H1="
     << best.metrics.h1_pct << "% (<=1.5), E_T=" << best.record.e_t
     << " (<=1e-2)";
  detail = os.str();
  return best.metrics.l2_pct <= 0.6 && best.metrics.h1_pct <= 1.5 &&
         best.record.e_t <= 1e-2;
}

bool c7_heatnd(std::string& detail) {
  std::ostringstream os;
  double err1 = 0.0, err10 = 0.0;
  bool ok = true;
  for (const int n : {1, 5, 10}) {
    Hyperparameters h;
    h.depth = 4;
    h.width = 20;
    h.lambda = n <= 5 ? 0.01 : 0.001;
    h.max_iterations = n == 10 ? 700 : 500;
    const BestRun best = train_best(heatnd_spec(n), h, SetSizes{}, 5, 7);
    os << " n=" << n << ":L2=" << best.metrics.l2_pct << "%";
    if (n == 1) {
      err1 = best.metrics.l2_pct;
      if (err1 > 0.5) ok = false;
    }
    if (n == 10) {
      err10 = best.metrics.l2_pct;
      if (err10 > 1.0) ok = false;
    }
  }
  if (!(err10 >= err1)) ok = false;
  os << " monotone=" << (err10 >= err1 ? "yes" : "no");
  detail = os.str();
  return ok;
}

bool c8_wave(std::string& detail) {
  Hyperparameters h;
  h.depth = 4;
  h.width = 24;
  h.lambda = 0.001;
  h.max_iterations = 3500;
  SetSizes sizes;
  sizes.n_total = 3600;  // 60 x 60
  const BestRun gcc = train_best(wave_spec(true), h, sizes, 5, 7);
  const BestRun nogcc = train_best(wave_spec(false), h, sizes, 5, 7);
  std::ostringstream os;
  os << " gcc=" << gcc.metrics.sup_t_l2_pct << "% (<=1), nogcc="
     << nogcc.metrics.sup_t_l2_pct << "% (>= 2x gcc)";
  detail = os.str();
  return gcc.metrics.sup_t_l2_pct <= 1.0 &&
         nogcc.metrics.sup_t_l2_pct > gcc.metrics.sup_t_l2_pct &&
         nogcc.metrics.sup_t_l2_pct >= 2.0 * gcc.metrics.sup_t_l2_pct;
}

bool c9_stokes(std::string& detail) {
  Hyperparameters h;
  h.depth = 4;
  h.width = 24;
  h.lambda = 0.001;
  h.max_iterations = 25000;
  SetSizes sizes;
  sizes.n_total = 400;
  const BestRun best = train_best(stokes_spec(), h, sizes, 5, 7);
  std::ostringstream os;
  os << " velocity=" << best.metrics.l2_pct << "% (<=7), pressure="
     << best.metrics.pressure_l2_pct << "% (<=17)";
  detail = os.str();
  return best.metrics.l2_pct <= 7.0 && best.metrics.pressure_l2_pct <= 17.0;
}

bool c10_trend(std::string& detail, const ErrorReport& small_run) {
  Hyperparameters h;
  h.depth = 4;
  h.width = 24;
  h.lambda = 0.001;
  h.max_iterations = 8000;  // the large run needs more steps to saturate
  SetSizes sizes;
  sizes.n_total = 160 * 160;
  const BestRun big = train_best(poisson_spec(), h, sizes, 5, 7);
  std::ostringstream os;
  os << " L2: " << big.metrics.l2_pct << "% at N=160^2 vs "
     << small_run.l2_pct << "% at N=20^2; H1: " << big.metrics.h1_pct
     << "% vs " << small_run.h1_pct << "%";
  detail = os.str();
  // equality within noise is acceptable; an increase beyond 20% is a failure
  return big.metrics.l2_pct <= 1.2 * small_run.l2_pct &&
         big.metrics.h1_pct <= 1.2 * small_run.h1_pct;
}

bool c11_reproducibility(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "dapinn_accept_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // iteration cap keeps the runtime bounded; byte-level determinism is what
  // is under test and does not depend on the budget
  const std::string base = std::string(DAPINN_CLI_PATH) +
                           " reproduce p1 --restarts 2 --seed 7 --max-iters 120 --out ";
  const auto run = [&](const std::string& sub) {
    const std::string cmd = base + (dir / sub).string() + " > /dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  if (!run("a") || !run("b")) {
    detail = " reproduce command failed";
    return false;
  }
  const auto strip_wall = [](const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream os;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#' &&
          line.rfind("problem,", 0) != 0) {
        line = line.substr(0, line.rfind(','));
      }
      os << line << "\n";
    }
    return os.str();
  };
  const std::string a = strip_wall(dir / "a" / "p1.csv");
  const std::string b = strip_wall(dir / "b" / "p1.csv");
  const bool same = !a.empty() && a == b;
  detail = same ? " byte-identical CSVs (wall-time column excluded)"
                : " CSVs differ";
  return same;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  ErrorReport poisson_small;  // shared between criteria 4 and 10

  const std::vector<Entry> criteria{
      {1, "differentiation correctness", c1_differentiation},
      {2, "residual annihilation", c2_residual_annihilation},
      {3, "quadrature convergence", c3_quadrature},
      {4, "poisson 20x20",
       [&](std::string& d) { return c4_poisson(d, &poisson_small); }},
      {5, "poisson noisy 20x20", c5_poisson_noisy},
      {6, "heat 1-d 16x50", c6_heat1d},
      {7, "heat n-d (n = 1, 5, 10)", c7_heatnd},
      {8, "wave gcc vs non-gcc 60x60", c8_wave},
      {9, "stokes 20x20", c9_stokes},
      {10, "poisson trend N=160^2 vs N=20^2",
       [&](std::string& d) { return c10_trend(d, poisson_small); }},
      {11, "reproduce determinism", c11_reproducibility},
  };

  int failures = 0;
  for (const Entry& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string(" exception: ") + e.what();
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] criterion %2d: %s —%s (%.1fs)\n", ok ? "PASS" : "FAIL",
                c.id, c.name, detail.c_str(), dt);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
