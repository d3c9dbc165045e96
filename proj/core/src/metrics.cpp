#include "dapinn/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dapinn/program.hpp"

namespace dapinn {

namespace {

/// Batched network evaluation at arbitrary points: values of all outputs
/// and, when requested, all first input-derivatives (output-major).
class NetEvaluator {
 public:
  NetEvaluator(const MLPArchitecture& arch, std::span<const double> theta,
               bool with_gradient) {
    Tape tape;
    std::vector<ScalarNode> theta_nodes = tape.variables(theta);
    std::vector<ScalarNode> coords;
    for (int i = 0; i < arch.input_dim; ++i) coords.push_back(tape.variable(0.5));
    std::vector<ScalarNode> outputs;
    if (with_gradient) {
      std::vector<Jet2> seeds = jet2_seed(tape, coords);
      std::vector<Jet2> jets = forward_jet(tape, arch, theta_nodes, seeds);
      for (const Jet2& j : jets) outputs.push_back(j.value);
      for (const Jet2& j : jets)
        for (const ScalarNode& d : j.d1) outputs.push_back(d);
    } else {
      for (const ScalarNode& v : forward_nodes(tape, arch, theta_nodes, coords))
        outputs.push_back(v);
    }
    program_.emplace(tape, theta_nodes, coords, outputs);
    program_->set_shared(theta);
  }

  std::vector<double> evaluate(const QuadratureSet& q) {
    program_->set_points(q.points, q.size());
    std::vector<double> out(q.size() * program_->n_outputs());
    program_->forward_each(out);
    return out;
  }

  std::size_t stride() const { return program_->n_outputs(); }

 private:
  std::optional<BatchedProgram> program_;
};

/// Candidate values at all test points: row-major n x stride with layout
/// [values...] or [values..., d1 output-major] when with_gradient.
std::vector<double> functor_values(const ProblemSpec& spec, const FieldFn& fn,
                                   const QuadratureSet& q) {
  std::vector<double> out(q.size() * spec.output_dim);
  std::vector<double> u(spec.output_dim);
  for (std::size_t i = 0; i < q.size(); ++i) {
    fn(q.point(i), u);
    for (int c = 0; c < spec.output_dim; ++c)
      out[i * spec.output_dim + c] = u[c];
  }
  return out;
}

double ratio_pct(std::span<const double> num_terms,
                 std::span<const double> den_terms) {
  const double num = pairwise_sum(num_terms);
  const double den = pairwise_sum(den_terms);
  return 100.0 * std::sqrt(num / den);
}

double l2_impl(const ProblemSpec& spec, std::span<const double> vals,
               std::size_t stride, const QuadratureSet& test) {
  const int comps = spec.kind == ProblemKind::Stokes2D ? 2 : 1;
  std::vector<double> num(test.size()), den(test.size());
  std::vector<double> u(spec.output_dim);
  for (std::size_t i = 0; i < test.size(); ++i) {
    spec.exact(test.point(i), u);
    double e2 = 0.0, u2 = 0.0;
    for (int c = 0; c < comps; ++c) {
      const double d = vals[i * stride + c] - u[c];
      e2 += d * d;
      u2 += u[c] * u[c];
    }
    num[i] = test.weights[i] * e2;
    den[i] = test.weights[i] * u2;
  }
  return ratio_pct(num, den);
}

/// H1 from a provider of (value, d1) per point for output 0.
template <class JetAt>
double h1_impl(const ProblemSpec& spec, const QuadratureSet& test,
               JetAt&& jet_at) {
  const int grad_dims =
      spec.time_dependent ? spec.spatial_dim : spec.input_dim;
  std::vector<double> num(test.size()), den(test.size());
  FieldJet fj, cand;
  for (std::size_t i = 0; i < test.size(); ++i) {
    spec.exact_jet(test.point(i), fj);
    jet_at(i, cand);
    double e2 = 0.0, u2 = 0.0;
    {
      const double diff = cand.value[0] - fj.value[0];
      e2 += diff * diff;
      u2 += fj.value[0] * fj.value[0];
    }
    for (int k = 0; k < grad_dims; ++k) {
      const double diff = cand.d1[k] - fj.d1[k];
      e2 += diff * diff;
      u2 += fj.d1[k] * fj.d1[k];
    }
    num[i] = test.weights[i] * e2;
    den[i] = test.weights[i] * u2;
  }
  return ratio_pct(num, den);
}

template <class ValuesAt>
double sup_t_impl(const ProblemSpec& spec, int time_slices,
                  int spatial_resolution, ValuesAt&& values_at) {
  const std::array<int, 1> res{spatial_resolution};
  const QuadratureSet grid = midpoint_grid(res, Geometry(spec.spatial_box));
  double max_err = 0.0, max_norm = 0.0;
  std::vector<double> u(spec.output_dim);
  QuadratureSet slice;
  slice.dim = spec.input_dim;
  slice.weights = grid.weights;
  slice.points.resize(grid.size() * spec.input_dim);
  for (int s = 0; s < time_slices; ++s) {
    const double t = spec.t_final * s / (time_slices - 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      slice.points[i * 2 + 0] = grid.points[i];
      slice.points[i * 2 + 1] = t;
    }
    const std::vector<double> vals = values_at(slice);
    const std::size_t stride = vals.size() / grid.size();
    std::vector<double> e(grid.size()), nrm(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      spec.exact(slice.point(i), u);
      const double diff = vals[i * stride] - u[0];
      e[i] = slice.weights[i] * diff * diff;
      nrm[i] = slice.weights[i] * u[0] * u[0];
    }
    max_err = std::max(max_err, pairwise_sum(e));
    max_norm = std::max(max_norm, pairwise_sum(nrm));
  }
  return 100.0 * std::sqrt(max_err / max_norm);
}

double pressure_impl(const ProblemSpec& spec, std::span<const double> vals,
                     std::size_t stride, const QuadratureSet& test) {
  std::vector<double> diff(test.size()), w(test.size()), wdiff(test.size());
  std::vector<double> u(spec.output_dim);
  for (std::size_t i = 0; i < test.size(); ++i) {
    spec.exact(test.point(i), u);
    diff[i] = vals[i * stride + 2] - u[2];
    w[i] = test.weights[i];
    wdiff[i] = w[i] * diff[i];
  }
  // pressure is determined up to a constant; remove the quadrature mean of
  // the mismatch before measuring it
  const double mean = pairwise_sum(wdiff) / pairwise_sum(w);
  std::vector<double> num(test.size()), den(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    spec.exact(test.point(i), u);
    const double d = diff[i] - mean;
    num[i] = w[i] * d * d;
    den[i] = w[i] * u[2] * u[2];
  }
  return ratio_pct(num, den);
}

}  // namespace

double l2_relative_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                         std::span<const double> theta,
                         const QuadratureSet& test) {
  NetEvaluator net(arch, theta, false);
  return l2_impl(spec, net.evaluate(test), net.stride(), test);
}

double l2_relative_error(const ProblemSpec& spec, const FieldFn& u_star,
                         const QuadratureSet& test) {
  return l2_impl(spec, functor_values(spec, u_star, test), spec.output_dim,
                 test);
}

double h1_relative_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                         std::span<const double> theta,
                         const QuadratureSet& test) {
  NetEvaluator net(arch, theta, true);
  const std::vector<double> vals = net.evaluate(test);
  const std::size_t stride = net.stride();
  const int m = spec.output_dim;
  const int d = spec.input_dim;
  return h1_impl(spec, test, [&](std::size_t i, FieldJet& out) {
    out.resize(1, d);
    out.value[0] = vals[i * stride];
    for (int k = 0; k < d; ++k) out.d1[k] = vals[i * stride + m + k];
  });
}

double h1_relative_error(const ProblemSpec& spec, const FieldJetFn& u_star,
                         const QuadratureSet& test) {
  return h1_impl(spec, test, [&](std::size_t i, FieldJet& out) {
    u_star(test.point(i), out);
  });
}

double sup_t_l2_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                      std::span<const double> theta, int time_slices,
                      int spatial_resolution) {
  NetEvaluator net(arch, theta, false);
  return sup_t_impl(spec, time_slices, spatial_resolution,
                    [&](const QuadratureSet& s) { return net.evaluate(s); });
}

double sup_t_l2_error(const ProblemSpec& spec, const FieldFn& u_star,
                      int time_slices, int spatial_resolution) {
  return sup_t_impl(spec, time_slices, spatial_resolution,
                    [&](const QuadratureSet& s) {
                      return functor_values(spec, u_star, s);
                    });
}

double pressure_l2_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                         std::span<const double> theta,
                         const QuadratureSet& test) {
  NetEvaluator net(arch, theta, false);
  return pressure_impl(spec, net.evaluate(test), net.stride(), test);
}

double pressure_l2_error(const ProblemSpec& spec, const FieldFn& u_star,
                         const QuadratureSet& test) {
  return pressure_impl(spec, functor_values(spec, u_star, test),
                       spec.output_dim, test);
}

QuadratureSet default_test_set(const ProblemSpec& spec, std::uint64_t seed) {
  // the n-dimensional heat protocol fixes the test set to 1e5 random
  // samples in every dimension; low-dimensional problems use dense grids
  if (spec.kind != ProblemKind::HeatND && spec.input_dim <= 3) {
    std::vector<int> res(spec.input_dim, 200);
    return midpoint_grid(res, spec.domain);
  }
  return uniform_random(100000, spec.domain, seed);
}

ErrorReport evaluate_metrics(const ProblemSpec& spec,
                             const MLPArchitecture& arch,
                             std::span<const double> theta) {
  ErrorReport rep;
  const QuadratureSet test = default_test_set(spec);
  rep.test.rule = rule_name(test.rule);
  rep.test.n = test.size();
  rep.test.seed = 12345;
  rep.l2_pct = l2_relative_error(spec, arch, theta, test);
  switch (spec.kind) {
    case ProblemKind::Poisson2D:
    case ProblemKind::Heat1D:
      rep.h1_pct = h1_relative_error(spec, arch, theta, test);
      break;
    case ProblemKind::Wave1D:
      rep.sup_t_l2_pct = sup_t_l2_error(spec, arch, theta);
      break;
    case ProblemKind::Stokes2D:
      rep.pressure_l2_pct = pressure_l2_error(spec, arch, theta, test);
      break;
    case ProblemKind::HeatND:
      break;
  }
  return rep;
}

double fit_decay_rate(std::span<const DecaySample> samples) {
  if (samples.size() < 2)
    throw std::invalid_argument("fit_decay_rate: need at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t m = 0;
  for (const DecaySample& s : samples) {
    if (s.error <= 0.0 || s.n <= 0.0) continue;
    const double x = std::log(s.n), y = std::log(s.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  if (m < 2) throw std::invalid_argument("fit_decay_rate: degenerate samples");
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return -slope;
}

WellTrainedDiagnostic well_trained_check(
    double e_p, double e_d, double n_int, double n_d,
    std::span<const DecaySample> interior_decay,
    std::span<const DecaySample> data_decay) {
  WellTrainedDiagnostic diag;
  diag.max_training_error = std::max(e_p, e_d);
  if (diag.max_training_error == 0.0) {
    diag.status = WellTrainedStatus::WellTrained;
    diag.note = "zero training error";
    return diag;
  }
  if (interior_decay.size() < 2 || data_decay.size() < 2) {
    diag.status = WellTrainedStatus::Indeterminate;
    diag.note = "need quadrature-error samples at two or more set sizes";
    return diag;
  }
  diag.alpha_interior = fit_decay_rate(interior_decay);
  diag.alpha_data = fit_decay_rate(data_decay);
  diag.gap = std::pow(n_int, -0.5 * diag.alpha_interior) +
             std::pow(n_d, -0.5 * diag.alpha_data);
  diag.status = diag.max_training_error <= diag.gap
                    ? WellTrainedStatus::WellTrained
                    : WellTrainedStatus::NotWellTrained;
  diag.note = "gap evaluated with unit prefactors";
  return diag;
}

std::string fmt_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string metrics_csv_header() {
  return "problem,N,N_int,N_sb,N_d,depth,width,lambda,lambda_reg,seed,"
         "restarts,E_dT,E_pT,E_T,L2_pct,H1_pct,supL2_pct,p_L2_pct,wall_s";
}

std::string metrics_csv_row(const CsvRowInputs& in, const ErrorReport& rep) {
  const auto opt = [](double v) {
    return std::isnan(v) ? std::string() : fmt_double(v);
  };
  std::ostringstream os;
  os << in.problem << ',' << in.n_total << ',' << in.n_int << ',' << in.n_sb
     << ',' << in.n_d << ',' << in.depth << ',' << in.width << ','
     << fmt_double(in.lambda) << ',' << fmt_double(in.lambda_reg) << ','
     << in.seed << ',' << in.restarts << ',' << fmt_double(rep.e_d) << ','
     << fmt_double(rep.e_p) << ',' << fmt_double(rep.e_t) << ','
     << opt(rep.l2_pct) << ',' << opt(rep.h1_pct) << ','
     << opt(rep.sup_t_l2_pct) << ',' << opt(rep.pressure_l2_pct) << ','
     << fmt_double(in.wall_seconds);
  return os.str();
}

}  // namespace dapinn
