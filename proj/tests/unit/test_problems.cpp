#include "dapinn/problems.hpp"

#include <cmath>

#include "doctest.h"
#include "dapinn/rng.hpp"
#include "test_util.hpp"

using namespace dapinn;

namespace {

/// Max |pde residual| of the exact field over random points of the domain.
double max_oracle_residual(const ProblemSpec& spec, int n_points,
                           std::uint64_t seed) {
  const QuadratureSet pts = uniform_random(n_points, spec.domain, seed);
  double worst = 0.0;
  std::vector<double> f(spec.n_source);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    Tape tape;
    const auto x = pts.point(i);
    spec.source(x, f);
    std::vector<ScalarNode> fn;
    for (double v : f) fn.push_back(tape.constant(v));
    const std::vector<Jet2> jets = oracle_jets(tape, spec, x);
    for (const ScalarNode& r : pde_residuals(spec, jets, fn))
      worst = std::max(worst, std::abs(r.value()));
  }
  return worst;
}

}  // namespace

TEST_CASE("poisson residual of x1^2+x2^2 with zero source is -4") {
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    Tape tape;
    const std::vector<double> x{rng.uniform(), rng.uniform()};
    const auto seeds = jet2_seed(tape, x);
    const Jet2 v = jet_add(jet_mul(seeds[0], seeds[0]), jet_mul(seeds[1], seeds[1]));
    const ScalarNode r = poisson_pde_residual(v, tape.constant(0.0));
    CHECK(r.value() == -4.0);
  }
}

TEST_CASE("exact fields annihilate every builtin residual") {
  CHECK(max_oracle_residual(poisson_spec(), 200, 11) < 1e-10);
  CHECK(max_oracle_residual(heat1d_spec(true), 200, 12) < 1e-10);
  CHECK(max_oracle_residual(heat1d_spec(false), 200, 13) < 1e-10);
  CHECK(max_oracle_residual(heatnd_spec(5), 200, 14) < 1e-10);
  CHECK(max_oracle_residual(wave_spec(true), 200, 15) < 1e-10);
  CHECK(max_oracle_residual(stokes_spec(), 200, 16) < 1e-10);
}

TEST_CASE("poisson data residual of the exact field vanishes on D'") {
  const ProblemSpec spec = poisson_spec();
  const QuadratureSet z = uniform_random(50, spec.observation, 3);
  const std::vector<double> g = make_data(spec, z, 0.0, 0);
  std::vector<double> u(1);
  for (std::size_t j = 0; j < z.size(); ++j) {
    Tape tape;
    spec.exact(z.point(j), u);
    const ScalarNode r =
        data_residual(tape.constant(u[0]), tape.constant(g[j]));
    CHECK(r.value() == 0.0);
  }
}

TEST_CASE("heat: the n-dimensional example field solves the equation exactly") {
  const ProblemSpec spec = heatnd_spec(3);
  Tape tape;
  const std::vector<double> x{0.3, 0.9, 0.1, 0.7};  // (x1,x2,x3,t)
  const std::vector<Jet2> jets = oracle_jets(tape, spec, x);
  const ScalarNode r = heat_pde_residual(jets[0], tape.constant(0.0));
  CHECK(std::abs(r.value()) < 1e-15);  // 2 - 2 = 0
}

TEST_CASE("heat: constant field has zero pde residual and trace c") {
  Tape tape;
  const double c = 1.37;
  Jet2 u;
  u.value = tape.constant(c);
  u.d1.assign(2, tape.constant(0.0));
  u.d2.assign(2, tape.constant(0.0));
  const ScalarNode r = heat_pde_residual(u, tape.constant(0.0));
  CHECK(r.value() == 0.0);
  const ScalarNode sb = boundary_residual(u.value, tape.constant(0.0));
  CHECK(sb.value() == c);
}

TEST_CASE("wave: u = t^2 with f = 2 has zero residual") {
  Tape tape;
  const std::vector<double> x{0.5, 0.8};  // (x, t)
  const auto seeds = jet2_seed(tape, x);
  const Jet2 u = jet_mul(seeds[1], seeds[1]);
  const ScalarNode r = wave_pde_residual(u, tape.constant(2.0));
  CHECK(r.value() == 0.0);
}

TEST_CASE("wave: exact solution traces to zero on the spatial boundary") {
  const ProblemSpec spec = wave_spec(true);
  std::vector<double> u(1);
  for (double xb : {0.0, 1.0})
    for (double t : {0.1, 0.5, 0.9}) {
      spec.exact(std::vector<double>{xb, t}, u);
      CHECK(std::abs(u[0]) < 1e-15);
    }
}

TEST_CASE("stokes: rotational field is divergence free") {
  Tape tape;
  const std::vector<double> x{0.7, 0.2};
  const auto seeds = jet2_seed(tape, x);
  std::vector<Jet2> fields(3);
  fields[0] = seeds[1];                      // u1 = x2
  fields[1] = jet_scale(tape.constant(-1.0), seeds[0]);  // u2 = -x1
  fields[2] = jet_const(tape, 0.0, 2);
  const std::vector<ScalarNode> f{tape.constant(0.0), tape.constant(0.0),
                                  tape.constant(0.0)};
  const StokesResiduals r = stokes_pde_residuals(fields, f);
  CHECK(r.divergence.value() == 0.0);
}

TEST_CASE("stokes: constant pressure and zero velocity annihilate") {
  Tape tape;
  std::vector<Jet2> fields(3);
  fields[0] = jet_const(tape, 0.0, 2);
  fields[1] = jet_const(tape, 0.0, 2);
  fields[2] = jet_const(tape, 3.25, 2);
  const std::vector<ScalarNode> f{tape.constant(0.0), tape.constant(0.0),
                                  tape.constant(0.0)};
  const StokesResiduals r = stokes_pde_residuals(fields, f);
  CHECK(r.momentum[0].value() == 0.0);
  CHECK(r.momentum[1].value() == 0.0);
  CHECK(r.divergence.value() == 0.0);
}

TEST_CASE("make_data: zero noise reproduces the exact restriction") {
  const ProblemSpec spec = stokes_spec();
  const QuadratureSet z = uniform_random(60, spec.observation, 21);
  const std::vector<double> g = make_data(spec, z, 0.0, 99);
  std::vector<double> u(3);
  for (std::size_t j = 0; j < z.size(); ++j) {
    spec.exact(z.point(j), u);
    CHECK(g[j * 2 + 0] == u[0]);
    CHECK(g[j * 2 + 1] == u[1]);
  }
}

TEST_CASE("make_data: relative noise has the right amplitude and seed") {
  const ProblemSpec spec = poisson_spec();
  const QuadratureSet z = uniform_random(600, spec.observation, 5);
  const std::vector<double> clean = make_data(spec, z, 0.0, 77);
  const std::vector<double> noisy = make_data(spec, z, 0.01, 77);
  const std::vector<double> again = make_data(spec, z, 0.01, 77);
  CHECK(noisy == again);

  double sumsq = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double d = noisy[j] - clean[j];
    sumsq += d * d;
  }
  const double std_obs = std::sqrt(sumsq / z.size());
  const double expected = 0.01 * 1.875;
  CHECK(std::abs(std_obs - expected) / expected < 0.2);
}

TEST_CASE("poisson sup norm on the observation domain is 1.875") {
  CHECK(poisson_spec().data_sup_norm == 30.0 / 16.0);
}

TEST_CASE("poisson split: N=400 gives 225 data and 175 interior points") {
  const ProblemSpec spec = poisson_spec();
  SetSizes sizes;
  sizes.n_total = 400;
  const TrainingSets sets = make_training_sets(spec, sizes, 1);
  CHECK(sets.data.size() == 225);
  CHECK(sets.interior.size() == 175);
  CHECK(sets.boundary.size() == 0);
}

TEST_CASE("heatnd uses the fixed point counts") {
  const ProblemSpec spec = heatnd_spec(4);
  const TrainingSets sets = make_training_sets(spec, SetSizes{}, 3);
  CHECK(sets.interior.size() == 8192);
  CHECK(sets.boundary.size() == 2048);
  CHECK(sets.data.size() == 6144);
  CHECK(sets.interior.rule == Rule::UniformRandom);
}

TEST_CASE("stokes observation measure ratio is pi/16") {
  const ProblemSpec spec = stokes_spec();
  const double r = spec.observation.measure() / spec.domain.measure();
  CHECK(r == doctest::Approx(0.19634954084936207).epsilon(1e-12));
}

TEST_CASE("every training point lies in its geometry") {
  for (const char* id : {"poisson", "heat1d", "wave-gcc", "wave-nogcc", "stokes"}) {
    const ProblemSpec spec = problem_by_id(id);
    SetSizes sizes;
    sizes.n_total = 400;
    const TrainingSets sets = make_training_sets(spec, sizes, 17);
    for (std::size_t i = 0; i < sets.interior.size(); ++i)
      CHECK(spec.domain.contains(sets.interior.point(i), 1e-12));
    for (std::size_t j = 0; j < sets.data.size(); ++j)
      CHECK(spec.observation.contains(sets.data.point(j), 1e-12));
  }
}

TEST_CASE("wave data points fall in the union strips") {
  const ProblemSpec spec = wave_spec(true);
  SetSizes sizes;
  sizes.n_total = 3600;
  const TrainingSets sets = make_training_sets(spec, sizes, 9);
  CHECK(sets.interior.size() == 2160);  // 0.6 N
  for (std::size_t j = 0; j < sets.data.size(); ++j) {
    const double x = sets.data.point(j)[0];
    CHECK((x < 0.2 || x > 0.8));
  }
}

TEST_CASE("catalog ids resolve and unknown ids name the catalog") {
  for (const char* id :
       {"poisson", "poisson-noisy", "heat1d", "heatnd:7", "wave-gcc",
        "wave-nogcc", "stokes"})
    CHECK(problem_by_id(id).id == id);
  CHECK(problem_by_id("poisson-noisy").noise_level == 0.01);
  CHECK(problem_by_id("heatnd:7").spatial_dim == 7);
  CHECK_THROWS_AS(problem_by_id("maxwell"), UnknownProblem);
  try {
    problem_by_id("maxwell");
  } catch (const UnknownProblem& e) {
    CHECK(std::string(e.what()).find("poisson") != std::string::npos);
  }
  CHECK_THROWS_AS(problem_by_id("heatnd:zero"), UnknownProblem);
}

TEST_CASE("observation sets are strict subsets of their domains") {
  for (const char* id : {"poisson", "heat1d", "stokes"}) {
    const ProblemSpec spec = problem_by_id(id);
    CHECK(spec.observation.measure() < spec.domain.measure());
  }
}
