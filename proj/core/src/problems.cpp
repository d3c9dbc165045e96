#include "dapinn/problems.hpp"

#include <cmath>
#include <sstream>

#include "dapinn/rng.hpp"

namespace dapinn {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

// --- residual operators ----------------------------------------------------

ScalarNode poisson_pde_residual(const Jet2& u, ScalarNode f) {
  Tape& tape = *u.value.tape();
  ScalarNode lap = tape.add(u.d2[0], u.d2[1]);
  return tape.sub(tape.neg(lap), f);
}

ScalarNode heat_pde_residual(const Jet2& u, ScalarNode f) {
  Tape& tape = *u.value.tape();
  const std::size_t t = u.dims() - 1;
  ScalarNode lap = u.d2[0];
  for (std::size_t i = 1; i < t; ++i) lap = tape.add(lap, u.d2[i]);
  return tape.sub(tape.sub(u.d1[t], lap), f);
}

ScalarNode wave_pde_residual(const Jet2& u, ScalarNode f) {
  Tape& tape = *u.value.tape();
  const std::size_t t = u.dims() - 1;
  return tape.sub(tape.sub(u.d2[t], u.d2[0]), f);
}

StokesResiduals stokes_pde_residuals(std::span<const Jet2> fields,
                                     std::span<const ScalarNode> f) {
  const Jet2& u1 = fields[0];
  const Jet2& u2 = fields[1];
  const Jet2& p = fields[2];
  Tape& tape = *u1.value.tape();
  StokesResiduals r;
  // The printed exact fields solve Laplace(u) = grad(p) for the homogeneous
  // problem, so the momentum residual is formed with the pressure gradient
  // subtracted.
  r.momentum[0] =
      tape.sub(tape.sub(tape.add(u1.d2[0], u1.d2[1]), p.d1[0]), f[0]);
  r.momentum[1] =
      tape.sub(tape.sub(tape.add(u2.d2[0], u2.d2[1]), p.d1[1]), f[1]);
  r.divergence = tape.sub(tape.add(u1.d1[0], u2.d1[1]), f[2]);
  return r;
}

ScalarNode data_residual(ScalarNode value, ScalarNode g) {
  return value.tape()->sub(value, g);
}

ScalarNode boundary_residual(ScalarNode value, ScalarNode trace) {
  return value.tape()->sub(value, trace);
}

std::vector<ScalarNode> pde_residuals(const ProblemSpec& spec,
                                      std::span<const Jet2> fields,
                                      std::span<const ScalarNode> source_vals) {
  switch (spec.kind) {
    case ProblemKind::Poisson2D:
      return {poisson_pde_residual(fields[0], source_vals[0])};
    case ProblemKind::Heat1D:
    case ProblemKind::HeatND:
      return {heat_pde_residual(fields[0], source_vals[0])};
    case ProblemKind::Wave1D:
      return {wave_pde_residual(fields[0], source_vals[0])};
    case ProblemKind::Stokes2D: {
      StokesResiduals r = stokes_pde_residuals(fields, source_vals);
      return {r.momentum[0], r.momentum[1], r.divergence};
    }
  }
  return {};
}

std::vector<Jet2> oracle_jets(Tape& tape, const ProblemSpec& spec,
                              std::span<const double> x) {
  FieldJet fj;
  spec.exact_jet(x, fj);
  std::vector<Jet2> jets(fj.n_outputs);
  for (int k = 0; k < fj.n_outputs; ++k) {
    jets[k].value = tape.constant(fj.value[k]);
    jets[k].d1.resize(fj.dim);
    jets[k].d2.resize(fj.dim);
    for (int i = 0; i < fj.dim; ++i) {
      jets[k].d1[i] = tape.constant(fj.d1[static_cast<std::size_t>(k) * fj.dim + i]);
      jets[k].d2[i] = tape.constant(fj.d2[static_cast<std::size_t>(k) * fj.dim + i]);
    }
  }
  return jets;
}

// --- data generation ---------------------------------------------------------

std::vector<double> make_data(const ProblemSpec& spec,
                              const QuadratureSet& obs, double noise_level,
                              std::uint64_t seed) {
  const std::size_t n = obs.size();
  const int k = spec.data_dim;
  std::vector<double> values(n * k);
  std::vector<double> u(spec.output_dim);
  for (std::size_t j = 0; j < n; ++j) {
    spec.exact(obs.point(j), u);
    for (int c = 0; c < k; ++c) values[j * k + c] = u[c];
  }
  if (noise_level > 0.0) {
    double sup = spec.data_sup_norm;
    if (sup < 0.0) {
      sup = 0.0;
      for (std::size_t j = 0; j < n * k; ++j)
        sup = std::max(sup, std::abs(values[j]));
    }
    Rng rng(derive_seed(seed, 0xd474));
    const double amp = noise_level * sup;
    for (std::size_t j = 0; j < n * k; ++j) values[j] += amp * rng.normal();
  }
  return values;
}

// --- training sets -----------------------------------------------------------

namespace {

QuadratureSet realize_data_set(const ProblemSpec& spec, std::size_t target,
                               std::uint64_t seed) {
  if (spec.data_rule == Rule::UniformRandom)
    return uniform_random(target, spec.observation, derive_seed(seed, 3));
  if (const Disc* disc = spec.observation.as_disc()) {
    // equally spaced radius-angle grid
    const int nr = std::max(
        1, static_cast<int>(std::llround(std::sqrt(static_cast<double>(target) / 4.0))));
    const int nphi = std::max(
        1, static_cast<int>(std::llround(static_cast<double>(target) / nr)));
    (void)disc;
    const std::array<int, 2> res{nr, nphi};
    return midpoint_grid(res, spec.observation);
  }
  if (const BoxUnion* u = spec.observation.as_union()) {
    const double total = spec.observation.measure();
    QuadratureSet merged;
    merged.dim = spec.observation.dim();
    merged.rule = Rule::MidpointGrid;
    for (const Box& part : u->parts) {
      const double frac = Geometry(part).measure() / total;
      const std::size_t part_target = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(frac * target)));
      const std::vector<int> dims = grid_dims_for(part.dim(), part_target);
      QuadratureSet qs = midpoint_grid(dims, Geometry(part));
      merged.points.insert(merged.points.end(), qs.points.begin(), qs.points.end());
      merged.weights.insert(merged.weights.end(), qs.weights.begin(),
                            qs.weights.end());
    }
    return merged;
  }
  const std::vector<int> dims =
      grid_dims_for(spec.observation.dim(), target);
  return midpoint_grid(dims, spec.observation);
}

QuadratureSet realize_interior_set(const ProblemSpec& spec, std::size_t n,
                                   std::uint64_t seed) {
  if (spec.interior_rule == Rule::UniformRandom)
    return uniform_random(n, spec.domain, derive_seed(seed, 1));
  return sobol_points(n, *spec.domain.as_box());
}

QuadratureSet realize_boundary_set(const ProblemSpec& spec, std::size_t n,
                                   std::uint64_t seed) {
  if (spec.boundary_rule == Rule::BoundaryRandom)
    return boundary_random(spec.spatial_box, spec.t_final, n, derive_seed(seed, 2));
  return boundary_points(spec.spatial_box, spec.t_final, n);
}

}  // namespace

TrainingSets make_training_sets(const ProblemSpec& spec, const SetSizes& sizes,
                                std::uint64_t seed) {
  TrainingSets sets;

  std::size_t n_int = 0, n_sb = 0, n_d = 0;
  if (sizes.explicit_counts) {
    n_int = (*sizes.explicit_counts)[0];
    n_sb = (*sizes.explicit_counts)[1];
    n_d = (*sizes.explicit_counts)[2];
    sets.requested_total = n_int + n_sb + n_d;
  } else if (spec.fixed_counts) {
    n_int = (*spec.fixed_counts)[0];
    n_sb = (*spec.fixed_counts)[1];
    n_d = (*spec.fixed_counts)[2];
    sets.requested_total = n_int + n_sb + n_d;
  } else {
    const std::size_t n = sizes.n_total;
    if (n < 4) throw std::invalid_argument("make_training_sets: N too small");
    sets.requested_total = n;
    if (spec.data_fraction_from_measure) {
      const double r = spec.observation.measure() / spec.domain.measure();
      n_d = static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
      sets.data = realize_data_set(spec, n_d, seed);
      n_d = sets.data.size();
      n_int = n > n_d ? n - n_d : 1;
    } else {
      n_int = static_cast<std::size_t>(
          std::llround(spec.interior_fraction * static_cast<double>(n)));
      const std::size_t rest = n > n_int ? n - n_int : 0;
      const double m_sb = 2.0 * spec.t_final;  // |dD| x T for an interval
      double m_sb_full = m_sb;
      if (spec.spatial_box.dim() > 1) {
        m_sb_full = 0.0;
        for (int axis = 0; axis < spec.spatial_box.dim(); ++axis) {
          double face = 1.0;
          for (int i = 0; i < spec.spatial_box.dim(); ++i)
            if (i != axis) face *= spec.spatial_box.extent(i);
          m_sb_full += 2.0 * face * spec.t_final;
        }
      }
      const double m_d = spec.observation.measure();
      n_sb = static_cast<std::size_t>(std::llround(
          static_cast<double>(rest) * m_sb_full / (m_sb_full + m_d)));
      n_d = rest > n_sb ? rest - n_sb : 1;
    }
  }

  if (sets.data.size() == 0) {
    sets.data = realize_data_set(spec, n_d, seed);
  }
  sets.interior = realize_interior_set(spec, n_int, seed);
  if (spec.has_boundary_term && n_sb > 0)
    sets.boundary = realize_boundary_set(spec, n_sb, seed);
  return sets;
}

// --- builtin specs -----------------------------------------------------------

ProblemSpec poisson_spec(double noise_level) {
  ProblemSpec s;
  s.kind = ProblemKind::Poisson2D;
  s.id = noise_level > 0.0 ? "poisson-noisy" : "poisson";
  s.spatial_dim = 2;
  s.time_dependent = false;
  s.input_dim = 2;
  s.output_dim = 1;
  s.data_dim = 1;
  s.n_source = 1;
  s.domain = Box::unit(2);
  s.observation = Box{{0.125, 0.125}, {0.875, 0.875}};
  s.has_boundary_term = false;
  s.data_fraction_from_measure = true;
  s.noise_level = noise_level;
  s.data_sup_norm = 30.0 / 16.0;  // peak of the exact field at (1/2, 1/2)

  auto g = [](double v) { return v - v * v; };
  s.source = [g](std::span<const double> x, std::span<double> f) {
    f[0] = 60.0 * (g(x[0]) + g(x[1]));
  };
  s.exact = [g](std::span<const double> x, std::span<double> u) {
    u[0] = 30.0 * g(x[0]) * g(x[1]);
  };
  s.exact_jet = [g](std::span<const double> x, FieldJet& j) {
    j.resize(1, 2);
    const double gx = g(x[0]), gy = g(x[1]);
    j.value[0] = 30.0 * gx * gy;
    j.d1[0] = 30.0 * (1.0 - 2.0 * x[0]) * gy;
    j.d1[1] = 30.0 * gx * (1.0 - 2.0 * x[1]);
    j.d2[0] = -60.0 * gy;
    j.d2[1] = -60.0 * gx;
  };
  return s;
}

ProblemSpec heat1d_spec(bool printed_exponent) {
  ProblemSpec s;
  s.kind = ProblemKind::Heat1D;
  s.id = "heat1d";
  s.spatial_dim = 1;
  s.time_dependent = true;
  s.t_final = 0.02;
  s.input_dim = 2;
  s.output_dim = 1;
  s.data_dim = 1;
  s.n_source = 1;
  s.spatial_box = Box{{0.0}, {1.0}};
  s.domain = s.spatial_box.with_time(0.0, s.t_final);
  s.observation = Box{{0.2, 0.0}, {0.8, s.t_final}};
  s.has_boundary_term = true;
  s.interior_fraction = 0.4;  // N_int = (1 - r) N with r = 0.6
  s.homogeneous_source = !printed_exponent;

  const double w = kTwoPi;
  if (printed_exponent) {
    auto env = [](double t) { return std::exp(-4.0 * kPi * kPi * t * t); };
    s.source = [env, w](std::span<const double> x, std::span<double> f) {
      // f := u_t - u_xx for the printed field
      f[0] = 4.0 * kPi * kPi * (1.0 - 2.0 * x[1]) * env(x[1]) * std::sin(w * x[0]);
    };
    s.exact = [env, w](std::span<const double> x, std::span<double> u) {
      u[0] = env(x[1]) * std::sin(w * x[0]);
    };
    s.exact_jet = [env, w](std::span<const double> x, FieldJet& j) {
      j.resize(1, 2);
      const double e = env(x[1]);
      const double sn = std::sin(w * x[0]), cn = std::cos(w * x[0]);
      j.value[0] = e * sn;
      j.d1[0] = w * e * cn;
      j.d1[1] = -8.0 * kPi * kPi * x[1] * e * sn;
      j.d2[0] = -w * w * e * sn;
      j.d2[1] = (-8.0 * kPi * kPi + 64.0 * std::pow(kPi, 4) * x[1] * x[1]) * e * sn;
    };
  } else {
    auto env = [](double t) { return std::exp(-4.0 * kPi * kPi * t); };
    s.source = [](std::span<const double>, std::span<double> f) { f[0] = 0.0; };
    s.exact = [env, w](std::span<const double> x, std::span<double> u) {
      u[0] = env(x[1]) * std::sin(w * x[0]);
    };
    s.exact_jet = [env, w](std::span<const double> x, FieldJet& j) {
      j.resize(1, 2);
      const double e = env(x[1]);
      const double sn = std::sin(w * x[0]), cn = std::cos(w * x[0]);
      j.value[0] = e * sn;
      j.d1[0] = w * e * cn;
      j.d1[1] = -4.0 * kPi * kPi * e * sn;
      j.d2[0] = -w * w * e * sn;
      j.d2[1] = 16.0 * std::pow(kPi, 4) * e * sn;
    };
  }
  return s;
}

ProblemSpec heatnd_spec(int n) {
  if (n < 1) throw std::invalid_argument("heatnd: n must be >= 1");
  ProblemSpec s;
  s.kind = ProblemKind::HeatND;
  s.id = "heatnd:" + std::to_string(n);
  s.spatial_dim = n;
  s.time_dependent = true;
  s.t_final = 1.0;
  s.input_dim = n + 1;
  s.output_dim = 1;
  s.data_dim = 1;
  s.n_source = 1;
  s.spatial_box = Box::unit(n);
  s.domain = s.spatial_box.with_time(0.0, 1.0);
  {
    const double a = 0.4;
    Box obs{std::vector<double>(n + 1, a), std::vector<double>(n + 1, 1.0 - a)};
    s.observation = obs;
  }
  s.has_boundary_term = true;
  s.homogeneous_source = true;
  s.fixed_counts = {{8192, 2048, 6144}};
  s.interior_rule = Rule::UniformRandom;
  s.data_rule = Rule::UniformRandom;
  s.boundary_rule = Rule::BoundaryRandom;

  const double inv_n = 1.0 / n;
  auto field = [inv_n, n](std::span<const double> x) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) ss += x[i] * x[i];
    return ss * inv_n + 2.0 * x[n];
  };
  s.source = [](std::span<const double>, std::span<double> f) { f[0] = 0.0; };
  s.exact = [field](std::span<const double> x, std::span<double> u) {
    u[0] = field(x);
  };
  s.exact_jet = [inv_n, n, field](std::span<const double> x, FieldJet& j) {
    j.resize(1, n + 1);
    j.value[0] = field(x);
    for (int i = 0; i < n; ++i) {
      j.d1[i] = 2.0 * x[i] * inv_n;
      j.d2[i] = 2.0 * inv_n;
    }
    j.d1[n] = 2.0;
    j.d2[n] = 0.0;
  };
  // boundary values of the exact field are nonzero; the boundary residual
  // matches the trace
  s.boundary_trace = [field](std::span<const double> x) { return field(x); };
  return s;
}

ProblemSpec wave_spec(bool gcc) {
  ProblemSpec s;
  s.kind = ProblemKind::Wave1D;
  s.id = gcc ? "wave-gcc" : "wave-nogcc";
  s.spatial_dim = 1;
  s.time_dependent = true;
  s.t_final = 1.0;
  s.input_dim = 2;
  s.output_dim = 1;
  s.data_dim = 1;
  s.n_source = 1;
  s.spatial_box = Box{{0.0}, {1.0}};
  s.domain = s.spatial_box.with_time(0.0, 1.0);
  if (gcc) {
    BoxUnion u;
    u.parts.push_back(Box{{0.0, 0.0}, {0.2, 1.0}});
    u.parts.push_back(Box{{0.8, 0.0}, {1.0, 1.0}});
    s.observation = u;
    s.interior_fraction = 0.6;
  } else {
    s.observation = Box{{0.0, 0.0}, {0.2, 1.0}};
    s.interior_fraction = 0.8;
  }
  s.has_boundary_term = true;
  s.homogeneous_source = true;

  const double w = kTwoPi;
  s.source = [](std::span<const double>, std::span<double> f) { f[0] = 0.0; };
  s.exact = [w](std::span<const double> x, std::span<double> u) {
    u[0] = std::sin(w * x[1]) * std::sin(w * x[0]);
  };
  s.exact_jet = [w](std::span<const double> x, FieldJet& j) {
    j.resize(1, 2);
    const double sx = std::sin(w * x[0]), cx = std::cos(w * x[0]);
    const double st = std::sin(w * x[1]), ct = std::cos(w * x[1]);
    j.value[0] = st * sx;
    j.d1[0] = w * st * cx;
    j.d1[1] = w * ct * sx;
    j.d2[0] = -w * w * st * sx;
    j.d2[1] = -w * w * st * sx;
  };
  return s;
}

ProblemSpec stokes_spec() {
  ProblemSpec s;
  s.kind = ProblemKind::Stokes2D;
  s.id = "stokes";
  s.spatial_dim = 2;
  s.time_dependent = false;
  s.input_dim = 2;
  s.output_dim = 3;
  s.data_dim = 2;  // velocity observed, pressure not
  s.n_source = 3;  // f1, f2, f_d
  s.domain = Box::unit(2);
  s.observation = Disc{{0.5, 0.5}, 0.25};
  s.has_boundary_term = false;
  s.data_fraction_from_measure = true;
  s.homogeneous_source = true;

  s.source = [](std::span<const double>, std::span<double> f) {
    f[0] = f[1] = f[2] = 0.0;
  };
  s.exact = [](std::span<const double> x, std::span<double> u) {
    u[0] = 4.0 * x[0] * x[1] * x[1] * x[1];
    u[1] = std::pow(x[0], 4) - std::pow(x[1], 4);
    u[2] = 12.0 * x[0] * x[0] * x[1] - 4.0 * x[1] * x[1] * x[1] - 1.0;
  };
  s.exact_jet = [](std::span<const double> x, FieldJet& j) {
    j.resize(3, 2);
    const double a = x[0], b = x[1];
    // u1 = 4 a b^3
    j.value[0] = 4.0 * a * b * b * b;
    j.d1[0] = 4.0 * b * b * b;
    j.d1[1] = 12.0 * a * b * b;
    j.d2[0] = 0.0;
    j.d2[1] = 24.0 * a * b;
    // u2 = a^4 - b^4
    j.value[1] = std::pow(a, 4) - std::pow(b, 4);
    j.d1[2] = 4.0 * a * a * a;
    j.d1[3] = -4.0 * b * b * b;
    j.d2[2] = 12.0 * a * a;
    j.d2[3] = -12.0 * b * b;
    // p = 12 a^2 b - 4 b^3 - 1
    j.value[2] = 12.0 * a * a * b - 4.0 * b * b * b - 1.0;
    j.d1[4] = 24.0 * a * b;
    j.d1[5] = 12.0 * a * a - 12.0 * b * b;
    j.d2[4] = 24.0 * b;
    j.d2[5] = -24.0 * b;
  };
  return s;
}

std::vector<std::string> builtin_ids() {
  return {"poisson", "poisson-noisy", "heat1d", "heatnd:<n>",
          "wave-gcc", "wave-nogcc", "stokes"};
}

ProblemSpec problem_by_id(const std::string& id) {
  if (id == "poisson") return poisson_spec(0.0);
  if (id == "poisson-noisy") return poisson_spec(0.01);
  if (id == "heat1d") return heat1d_spec();
  if (id == "wave-gcc") return wave_spec(true);
  if (id == "wave-nogcc") return wave_spec(false);
  if (id == "stokes") return stokes_spec();
  if (id.rfind("heatnd:", 0) == 0) {
    const std::string arg = id.substr(7);
    try {
      const int n = std::stoi(arg);
      if (n >= 1) return heatnd_spec(n);
    } catch (const std::exception&) {
    }
    throw UnknownProblem("bad heatnd dimension: '" + arg + "'");
  }
  std::ostringstream msg;
  msg << "unknown problem id '" << id << "'; available:";
  for (const auto& s : builtin_ids()) msg << " " << s;
  throw UnknownProblem(msg.str());
}

}  // namespace dapinn
