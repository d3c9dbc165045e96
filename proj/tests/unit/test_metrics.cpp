#include "dapinn/metrics.hpp"

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"

using namespace dapinn;

TEST_CASE("the exact field scores zero in every metric") {
  const ProblemSpec poisson = poisson_spec();
  const QuadratureSet test = default_test_set(poisson);
  const FieldFn exact = poisson.exact;
  CHECK(l2_relative_error(poisson, exact, test) == 0.0);
  CHECK(h1_relative_error(poisson, FieldJetFn(poisson.exact_jet), test) == 0.0);

  const ProblemSpec wave = wave_spec(true);
  CHECK(sup_t_l2_error(wave, FieldFn(wave.exact), 21, 50) == 0.0);

  const ProblemSpec stokes = stokes_spec();
  const QuadratureSet stest = default_test_set(stokes);
  CHECK(l2_relative_error(stokes, FieldFn(stokes.exact), stest) == 0.0);
  CHECK(pressure_l2_error(stokes, FieldFn(stokes.exact), stest) == 0.0);
}

TEST_CASE("doubling the field gives exactly 100 percent error") {
  const ProblemSpec spec = poisson_spec();
  const QuadratureSet test = default_test_set(spec);
  const FieldFn twice = [&](std::span<const double> x, std::span<double> u) {
    spec.exact(x, u);
    u[0] *= 2.0;
  };
  CHECK(l2_relative_error(spec, twice, test) ==
        doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("the zero field gives 100 percent error") {
  const ProblemSpec spec = poisson_spec();
  const QuadratureSet test = default_test_set(spec);
  const FieldFn zero = [](std::span<const double>, std::span<double> u) {
    u[0] = 0.0;
  };
  CHECK(l2_relative_error(spec, zero, test) ==
        doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("constant offset: H1 error is c sqrt(meas)/||u||_H1, gradient-free") {
  const ProblemSpec spec = poisson_spec();
  const QuadratureSet test = default_test_set(spec);
  const double c = 0.05;
  const FieldJetFn shifted = [&](std::span<const double> x, FieldJet& j) {
    spec.exact_jet(x, j);
    j.value[0] += c;
  };
  // ||u||_H1 over the same test quadrature
  std::vector<double> terms(test.size());
  FieldJet fj;
  for (std::size_t i = 0; i < test.size(); ++i) {
    spec.exact_jet(test.point(i), fj);
    terms[i] = test.weights[i] *
               (fj.value[0] * fj.value[0] + fj.d1[0] * fj.d1[0] +
                fj.d1[1] * fj.d1[1]);
  }
  const double h1_norm = std::sqrt(pairwise_sum(terms));
  const double expected = 100.0 * c * 1.0 / h1_norm;  // meas(D) = 1
  CHECK(h1_relative_error(spec, shifted, test) ==
        doctest::Approx(expected).epsilon(1e-9));

  // strictly below the error a same-size gradient perturbation would add
  CHECK(h1_relative_error(spec, shifted, test) <
        100.0 * c * std::sqrt(2.0) / h1_norm);
}

TEST_CASE("grid and random test sets agree for a smooth candidate field") {
  const ProblemSpec spec = poisson_spec();
  const FieldFn warped = [&](std::span<const double> x, std::span<double> u) {
    spec.exact(x, u);
    u[0] *= 1.0 + 0.02 * std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]);
  };
  const QuadratureSet grid = default_test_set(spec);
  const QuadratureSet random = uniform_random(100000, spec.domain, 2027);
  const double a = l2_relative_error(spec, warped, grid);
  const double b = l2_relative_error(spec, warped, random);
  CHECK(testutil::rel_err(a, b) < 0.05);
}

TEST_CASE("metric evaluation is bit-reproducible") {
  const ProblemSpec spec = poisson_spec();
  const MLPArchitecture arch{2, 1, 2, 8};
  const ParameterVector theta = init_params(arch, 17);
  const QuadratureSet test = default_test_set(spec);
  const double a = l2_relative_error(spec, arch, theta.theta, test);
  const double b = l2_relative_error(spec, arch, theta.theta, test);
  CHECK(a == b);
}

TEST_CASE("fit_decay_rate recovers the midpoint convergence order") {
  // h(x) = sin(2 pi x1) integrated over a quarter-period-offset box so the
  // midpoint error is nonzero
  const double exact_1d =
      (1.0 - std::cos(2.0 * 3.14159265358979323846 * 0.75)) /
      (2.0 * 3.14159265358979323846);
  std::vector<DecaySample> samples_1d;
  for (int n : {16, 32, 64, 128, 256}) {
    const std::vector<int> res{n};
    const QuadratureSet q =
        midpoint_grid(res, Geometry(Box{{0.0}, {0.75}}));
    const double est = integrate_fn(q, [](std::span<const double> x) {
      return std::sin(2.0 * 3.14159265358979323846 * x[0]);
    });
    samples_1d.push_back({static_cast<double>(q.size()),
                          std::abs(est - exact_1d)});
  }
  const double alpha_1d = fit_decay_rate(samples_1d);
  CHECK(alpha_1d == doctest::Approx(2.0).epsilon(0.2));  // 2/d for d=1

  std::vector<DecaySample> samples_2d;
  for (int n : {8, 16, 32, 64}) {
    const std::vector<int> res{n, n};
    const QuadratureSet q =
        midpoint_grid(res, Geometry(Box{{0.0, 0.0}, {0.75, 1.0}}));
    const double est = integrate_fn(q, [](std::span<const double> x) {
      return std::sin(2.0 * 3.14159265358979323846 * x[0]);
    });
    samples_2d.push_back({static_cast<double>(q.size()),
                          std::abs(est - exact_1d)});
  }
  const double alpha_2d = fit_decay_rate(samples_2d);
  CHECK(alpha_2d == doctest::Approx(1.0).epsilon(0.2));  // 2/d for d=2
}

TEST_CASE("well-trained diagnostic statuses") {
  const std::vector<DecaySample> none;
  const WellTrainedDiagnostic trivially =
      well_trained_check(0.0, 0.0, 100, 100, none, none);
  CHECK(trivially.status == WellTrainedStatus::WellTrained);

  const WellTrainedDiagnostic indet =
      well_trained_check(0.1, 0.1, 100, 100, none, none);
  CHECK(indet.status == WellTrainedStatus::Indeterminate);

  const std::vector<DecaySample> decay{{100.0, 1e-2}, {400.0, 6.25e-4}};
  const WellTrainedDiagnostic good =
      well_trained_check(1e-6, 1e-6, 400, 225, decay, decay);
  CHECK(good.status == WellTrainedStatus::WellTrained);
  CHECK(good.alpha_interior == doctest::Approx(2.0).epsilon(0.01));

  const WellTrainedDiagnostic bad =
      well_trained_check(10.0, 10.0, 400, 225, decay, decay);
  CHECK(bad.status == WellTrainedStatus::NotWellTrained);
}

TEST_CASE("csv rows follow the schema and blank out missing metrics") {
  CHECK(metrics_csv_header() ==
        "problem,N,N_int,N_sb,N_d,depth,width,lambda,lambda_reg,seed,restarts,"
        "E_dT,E_pT,E_T,L2_pct,H1_pct,supL2_pct,p_L2_pct,wall_s");
  CsvRowInputs in;
  in.problem = "poisson";
  in.n_total = 400;
  in.n_int = 175;
  in.n_d = 225;
  in.depth = 4;
  in.width = 24;
  in.lambda = 0.001;
  in.seed = 7;
  in.restarts = 5;
  in.wall_seconds = 2.5;
  ErrorReport rep;
  rep.l2_pct = 0.5;
  rep.e_d = 1e-4;
  rep.e_p = 2e-2;
  rep.e_t = 1e-3;
  const std::string row = metrics_csv_row(in, rep);
  CHECK(row ==
        "poisson,400,175,0,225,4,24,0.001,0,7,5,1e-04,0.02,0.001,0.5,,,,2.5");
}

TEST_CASE("fmt_double round-trips doubles exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-17, 123456.789, -2.5e-8}) {
    CHECK(std::stod(fmt_double(v)) == v);
  }
}

TEST_CASE("pressure metric is invariant under constant shifts") {
  const ProblemSpec spec = stokes_spec();
  const QuadratureSet test = default_test_set(spec);
  const FieldFn shifted = [&](std::span<const double> x, std::span<double> u) {
    spec.exact(x, u);
    u[2] += 17.5;  // pressure is a Lagrange multiplier, offsets are gauge
  };
  CHECK(pressure_l2_error(spec, shifted, test) < 1e-10);
  // a non-constant perturbation is visible after the gauge fix
  const FieldFn warped = [&](std::span<const double> x, std::span<double> u) {
    spec.exact(x, u);
    u[2] += 0.3 * x[0];
  };
  CHECK(pressure_l2_error(spec, warped, test) > 1.0);
}
