#include "dapinn/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "dapinn/rng.hpp"
#include "json.hpp"

namespace dapinn {

namespace {

/// Leaf factory shared by the scalar and batched recording paths: the
/// scalar path records values as constants, the batched path records
/// rebindable variables and remembers their binding order.
struct LeafRecorder {
  Tape& tape;
  bool as_variables;
  std::vector<ScalarNode> leaves;

  ScalarNode operator()(double v) {
    if (!as_variables) return tape.constant(v);
    ScalarNode n = tape.variable(v);
    leaves.push_back(n);
    return n;
  }
};

/// w * sum of squared PDE residuals at one interior point. The binding
/// order is [x..., w] plus the source values unless the source is
/// identically zero.
ScalarNode record_interior_point(Tape& tape, const ProblemSpec& spec,
                                 const MLPArchitecture& arch,
                                 std::span<const ScalarNode> theta,
                                 LeafRecorder& leaf, std::span<const double> x,
                                 double w, std::span<const double> f) {
  std::vector<ScalarNode> coords;
  coords.reserve(x.size());
  for (double xi : x) coords.push_back(leaf(xi));
  const ScalarNode wn = leaf(w);
  std::vector<ScalarNode> src;
  for (int k = 0; k < spec.n_source; ++k)
    src.push_back(spec.homogeneous_source ? tape.constant(0.0) : leaf(f[k]));

  std::vector<Jet2> seeds = jet2_seed(tape, coords);
  std::vector<Jet2> jets = forward_jet(tape, arch, theta, seeds);
  std::vector<ScalarNode> residuals = pde_residuals(spec, jets, src);
  ScalarNode ssq = tape.constant(0.0);
  for (const ScalarNode& r : residuals) ssq = tape.mul_add(r, r, ssq);
  return tape.mul(wn, ssq);
}

/// w * (u - g_sb)^2 at one lateral-boundary point; binding order [x..., w,
/// trace] (trace only when the problem has a nonzero boundary trace).
ScalarNode record_boundary_point(Tape& tape, const ProblemSpec& spec,
                                 const MLPArchitecture& arch,
                                 std::span<const ScalarNode> theta,
                                 LeafRecorder& leaf, std::span<const double> x,
                                 double w, double trace) {
  std::vector<ScalarNode> coords;
  for (double xi : x) coords.push_back(leaf(xi));
  const ScalarNode wn = leaf(w);
  const ScalarNode tn =
      spec.boundary_trace ? leaf(trace) : tape.constant(0.0);
  std::vector<ScalarNode> out = forward_nodes(tape, arch, theta, coords);
  const ScalarNode r = boundary_residual(out[0], tn);
  return tape.mul(wn, tape.mul(r, r));
}

/// w * sum_c (u_c - g_c)^2 at one observation point; binding order [z...,
/// w, g...].
ScalarNode record_data_point(Tape& tape, const ProblemSpec& spec,
                             const MLPArchitecture& arch,
                             std::span<const ScalarNode> theta,
                             LeafRecorder& leaf, std::span<const double> z,
                             double w, std::span<const double> g) {
  std::vector<ScalarNode> coords;
  for (double zi : z) coords.push_back(leaf(zi));
  const ScalarNode wn = leaf(w);
  std::vector<ScalarNode> gn;
  for (int c = 0; c < spec.data_dim; ++c) gn.push_back(leaf(g[c]));
  std::vector<ScalarNode> out = forward_nodes(tape, arch, theta, coords);
  ScalarNode ssq = tape.constant(0.0);
  for (int c = 0; c < spec.data_dim; ++c) {
    const ScalarNode r = data_residual(out[c], gn[c]);
    ssq = tape.mul_add(r, r, ssq);
  }
  return tape.mul(wn, ssq);
}

std::vector<double> source_at(const ProblemSpec& spec,
                              std::span<const double> x) {
  std::vector<double> f(spec.n_source, 0.0);
  if (!spec.homogeneous_source) spec.source(x, f);
  return f;
}

}  // namespace

std::vector<Hyperparameters> default_hyper_grid() {
  std::vector<Hyperparameters> grid;
  for (int depth : {4, 8, 10})
    for (int width : {16, 20, 24})
      for (double lreg : {0.0, 1e-6})
        for (double lambda : {0.001, 0.01, 0.1, 1.0}) {
          Hyperparameters h;
          h.depth = depth;
          h.width = width;
          h.lambda_reg = lreg;
          h.lambda = lambda;
          grid.push_back(h);
        }
  return grid;
}

ScalarNode assemble_loss(Tape& tape, const ProblemSpec& spec,
                         const MLPArchitecture& arch, const TrainingSets& sets,
                         std::span<const double> data_values,
                         std::span<const double> theta, double lambda,
                         double lambda_reg, int q,
                         std::vector<ScalarNode>* theta_nodes_out) {
  if (data_values.size() != sets.data.size() * spec.data_dim)
    throw std::invalid_argument("assemble_loss: data values length mismatch");
  const ParamLayout layout = ParamLayout::from(arch);
  if (theta.size() != layout.total)
    throw std::invalid_argument("assemble_loss: theta length mismatch");

  std::vector<ScalarNode> theta_nodes = tape.variables(theta);
  LeafRecorder leaf{tape, false, {}};

  ScalarNode data_sum = tape.constant(0.0);
  for (std::size_t j = 0; j < sets.data.size(); ++j) {
    data_sum = tape.add(
        data_sum,
        record_data_point(tape, spec, arch, theta_nodes, leaf,
                          sets.data.point(j), sets.data.weights[j],
                          data_values.subspan(j * spec.data_dim, spec.data_dim)));
  }

  ScalarNode sb_sum = tape.constant(0.0);
  for (std::size_t i = 0; i < sets.boundary.size(); ++i) {
    const auto x = sets.boundary.point(i);
    const double trace = spec.boundary_trace ? spec.boundary_trace(x) : 0.0;
    sb_sum = tape.add(sb_sum,
                      record_boundary_point(tape, spec, arch, theta_nodes, leaf,
                                            x, sets.boundary.weights[i], trace));
  }

  ScalarNode int_sum = tape.constant(0.0);
  for (std::size_t i = 0; i < sets.interior.size(); ++i) {
    const auto x = sets.interior.point(i);
    const std::vector<double> f = source_at(spec, x);
    int_sum = tape.add(
        int_sum, record_interior_point(tape, spec, arch, theta_nodes, leaf, x,
                                       sets.interior.weights[i], f));
  }

  ScalarNode reg = tape.constant(0.0);
  if (lambda_reg > 0.0) {
    ScalarNode acc = tape.constant(0.0);
    const auto add_weight = [&](std::size_t idx) {
      const ScalarNode t = theta_nodes[idx];
      if (q == 2)
        acc = tape.mul_add(t, t, acc);
      else
        acc = tape.add(acc, tape.pow(tape.abs(t), static_cast<double>(q)));
    };
    layout.for_each_weight(add_weight);
    reg = tape.mul(tape.constant(lambda_reg), acc);
  }

  ScalarNode loss = tape.add(
      tape.add(data_sum, sb_sum),
      tape.add(tape.mul(tape.constant(lambda), int_sum), reg));
  if (theta_nodes_out) *theta_nodes_out = std::move(theta_nodes);
  return loss;
}

LossEvaluator::LossEvaluator(const ProblemSpec& spec,
                             const MLPArchitecture& arch,
                             const TrainingSets& sets,
                             std::span<const double> data_values,
                             double lambda, double lambda_reg, int q)
    : layout_(ParamLayout::from(arch)),
      lambda_(lambda),
      lambda_reg_(lambda_reg),
      q_(q) {
  if (arch.input_dim != spec.input_dim || arch.output_dim != spec.output_dim)
    throw std::invalid_argument("LossEvaluator: architecture/problem mismatch");
  if (data_values.size() != sets.data.size() * spec.data_dim)
    throw std::invalid_argument("LossEvaluator: data values length mismatch");

  const std::vector<double> theta0(layout_.total, 0.1);

  if (sets.interior.size() > 0) {
    Tape tape;
    std::vector<ScalarNode> theta_nodes = tape.variables(theta0);
    LeafRecorder leaf{tape, true, {}};
    const auto x0 = sets.interior.point(0);
    const std::vector<double> f0 = source_at(spec, x0);
    ScalarNode out = record_interior_point(tape, spec, arch, theta_nodes, leaf,
                                           x0, sets.interior.weights[0], f0);
    interior_.emplace(tape, theta_nodes, leaf.leaves,
                      std::vector<ScalarNode>{out});
    const std::size_t cols = leaf.leaves.size();
    std::vector<double> rows(sets.interior.size() * cols);
    for (std::size_t i = 0; i < sets.interior.size(); ++i) {
      const auto x = sets.interior.point(i);
      double* row = rows.data() + i * cols;
      std::size_t k = 0;
      for (double xi : x) row[k++] = xi;
      row[k++] = sets.interior.weights[i];
      if (!spec.homogeneous_source) {
        const std::vector<double> f = source_at(spec, x);
        for (double fv : f) row[k++] = fv;
      }
      if (k != cols) throw std::logic_error("interior binding width mismatch");
    }
    interior_->set_points(rows, sets.interior.size());
  }

  if (sets.boundary.size() > 0) {
    Tape tape;
    std::vector<ScalarNode> theta_nodes = tape.variables(theta0);
    LeafRecorder leaf{tape, true, {}};
    const auto x0 = sets.boundary.point(0);
    const double tr0 = spec.boundary_trace ? spec.boundary_trace(x0) : 0.0;
    ScalarNode out = record_boundary_point(tape, spec, arch, theta_nodes, leaf,
                                           x0, sets.boundary.weights[0], tr0);
    boundary_.emplace(tape, theta_nodes, leaf.leaves,
                      std::vector<ScalarNode>{out});
    const std::size_t cols = leaf.leaves.size();
    std::vector<double> rows(sets.boundary.size() * cols);
    for (std::size_t i = 0; i < sets.boundary.size(); ++i) {
      const auto x = sets.boundary.point(i);
      double* row = rows.data() + i * cols;
      std::size_t k = 0;
      for (double xi : x) row[k++] = xi;
      row[k++] = sets.boundary.weights[i];
      if (spec.boundary_trace) row[k++] = spec.boundary_trace(x);
      if (k != cols) throw std::logic_error("boundary binding width mismatch");
    }
    boundary_->set_points(rows, sets.boundary.size());
  }

  if (sets.data.size() > 0) {
    Tape tape;
    std::vector<ScalarNode> theta_nodes = tape.variables(theta0);
    LeafRecorder leaf{tape, true, {}};
    const auto z0 = sets.data.point(0);
    ScalarNode out = record_data_point(
        tape, spec, arch, theta_nodes, leaf, z0, sets.data.weights[0],
        data_values.subspan(0, spec.data_dim));
    data_.emplace(tape, theta_nodes, leaf.leaves, std::vector<ScalarNode>{out});
    const std::size_t cols = leaf.leaves.size();
    std::vector<double> rows(sets.data.size() * cols);
    for (std::size_t j = 0; j < sets.data.size(); ++j) {
      const auto z = sets.data.point(j);
      double* row = rows.data() + j * cols;
      std::size_t k = 0;
      for (double zi : z) row[k++] = zi;
      row[k++] = sets.data.weights[j];
      for (int c = 0; c < spec.data_dim; ++c)
        row[k++] = data_values[j * spec.data_dim + c];
      if (k != cols) throw std::logic_error("data binding width mismatch");
    }
    data_->set_points(rows, sets.data.size());
  }
}

double LossEvaluator::regularizer(std::span<const double> theta,
                                  std::span<double> grad) {
  if (lambda_reg_ <= 0.0) return 0.0;
  double acc = 0.0;
  layout_.for_each_weight([&](std::size_t idx) {
    const double t = theta[idx];
    if (q_ == 2) {
      acc += t * t;
      if (!grad.empty()) grad[idx] += lambda_reg_ * 2.0 * t;
    } else {
      acc += std::pow(std::abs(t), q_);
      if (!grad.empty() && t != 0.0)
        grad[idx] += lambda_reg_ * q_ * std::pow(std::abs(t), q_ - 1) *
                     (t > 0 ? 1.0 : -1.0);
    }
  });
  return lambda_reg_ * acc;
}

double LossEvaluator::value_and_gradient(std::span<const double> theta,
                                         std::span<double> grad) {
  if (theta.size() != layout_.total || grad.size() != layout_.total)
    throw std::invalid_argument("value_and_gradient: length mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  if (data_) {
    data_->set_shared(theta);
    loss += data_->forward_reverse(grad, 1.0);
  }
  if (boundary_) {
    boundary_->set_shared(theta);
    loss += boundary_->forward_reverse(grad, 1.0);
  }
  if (interior_) {
    interior_->set_shared(theta);
    loss += lambda_ * interior_->forward_reverse(grad, lambda_);
  }
  loss += regularizer(theta, grad);
  return loss;
}

double LossEvaluator::value(std::span<const double> theta) {
  double loss = 0.0;
  double sum = 0.0;
  if (data_) {
    data_->set_shared(theta);
    data_->forward_sums({&sum, 1});
    loss += sum;
  }
  if (boundary_) {
    boundary_->set_shared(theta);
    boundary_->forward_sums({&sum, 1});
    loss += sum;
  }
  if (interior_) {
    interior_->set_shared(theta);
    interior_->forward_sums({&sum, 1});
    loss += lambda_ * sum;
  }
  loss += regularizer(theta, {});
  return loss;
}

TrainingErrors LossEvaluator::training_errors(std::span<const double> theta) {
  TrainingErrors e;
  double sum = 0.0;
  if (data_) {
    data_->set_shared(theta);
    data_->forward_sums({&sum, 1});
    e.e_d = std::sqrt(std::max(0.0, sum));
  }
  if (boundary_) {
    boundary_->set_shared(theta);
    boundary_->forward_sums({&sum, 1});
    e.e_sb = std::sqrt(std::max(0.0, sum));
  }
  if (interior_) {
    interior_->set_shared(theta);
    interior_->forward_sums({&sum, 1});
    e.e_p = std::sqrt(std::max(0.0, sum));
  }
  return e;
}

TrainRecord train(const ProblemSpec& spec, const Hyperparameters& hyper,
                  const SetSizes& sizes, std::uint64_t seed) {
  const auto t_start = std::chrono::steady_clock::now();

  TrainingSets sets = make_training_sets(spec, sizes, seed);
  const std::vector<double> data_values =
      make_data(spec, sets.data, spec.noise_level, seed);

  MLPArchitecture arch;
  arch.input_dim = spec.input_dim;
  arch.output_dim = spec.output_dim;
  arch.hidden_layers = hyper.depth;
  arch.hidden_width = hyper.width;
  arch.activation = hyper.activation;

  LossEvaluator evaluator(spec, arch, sets, data_values, hyper.lambda,
                          hyper.lambda_reg, hyper.q);
  ParameterVector theta0 = init_params(arch, seed);

  OptimResult opt;
  if (hyper.optimizer == "adam") {
    AdamOptions o;
    o.max_iterations = hyper.max_iterations;
    opt = adam_minimize(evaluator.objective(), theta0.theta, o);
  } else {
    LbfgsOptions o;
    o.max_iterations = hyper.max_iterations;
    opt = lbfgs_minimize(evaluator.objective(), theta0.theta, o);
  }

  TrainRecord rec;
  rec.problem = spec.id;
  rec.hyper = hyper;
  rec.seed = seed;
  rec.theta.theta = opt.x;
  rec.trajectory = std::move(opt.trajectory);
  rec.loss = opt.loss;
  rec.errors = evaluator.training_errors(rec.theta.theta);
  rec.e_t = rec.errors.e_t(hyper.lambda);
  rec.status = opt.status;
  rec.iterations = opt.iterations;
  rec.n_evals = opt.n_evals;
  rec.n_int = sets.interior.size();
  rec.n_sb = sets.boundary.size();
  rec.n_d = sets.data.size();
  rec.n_requested = sets.requested_total;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return rec;
}

std::string train_record_json(const TrainRecord& rec, bool include_theta) {
  nlohmann::json j;
  j["problem"] = rec.problem;
  j["config"] = {{"depth", rec.hyper.depth},
                 {"width", rec.hyper.width},
                 {"q", rec.hyper.q},
                 {"lambda_reg", rec.hyper.lambda_reg},
                 {"lambda", rec.hyper.lambda},
                 {"optimizer", rec.hyper.optimizer},
                 {"max_iterations", rec.hyper.max_iterations},
                 {"activation", activation_name(rec.hyper.activation)}};
  j["seed"] = rec.seed;
  j["counts"] = {{"requested", rec.n_requested},
                 {"interior", rec.n_int},
                 {"boundary", rec.n_sb},
                 {"data", rec.n_d}};
  j["loss"] = rec.loss;
  j["E_dT"] = rec.errors.e_d;
  j["E_sbT"] = rec.errors.e_sb;
  j["E_pT"] = rec.errors.e_p;
  j["E_T"] = rec.e_t;
  j["status"] = optim_status_name(rec.status);
  j["iterations"] = rec.iterations;
  j["n_evals"] = rec.n_evals;
  j["wall_seconds"] = rec.wall_seconds;
  if (include_theta) j["theta"] = rec.theta.theta;
  return j.dump(1);
}

void parallel_for(std::size_t n, int width,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  width = std::max(1, std::min<int>(width, static_cast<int>(n)));
  if (width == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(width);
  for (int t = 0; t < width; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) break;
          fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int default_parallelism() {
  if (const char* env = std::getenv("DAPINN_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

EnsembleResult ensemble(const ProblemSpec& spec,
                        std::span<const Hyperparameters> grid, int restarts,
                        const SetSizes& sizes, std::uint64_t base_seed,
                        bool with_metrics) {
  if (grid.empty()) throw std::invalid_argument("ensemble: empty grid");
  if (restarts < 1) throw std::invalid_argument("ensemble: restarts >= 1");

  EnsembleResult result;
  result.records.assign(grid.size(), std::vector<TrainRecord>(restarts));
  std::vector<std::vector<ErrorReport>> reports(
      grid.size(), std::vector<ErrorReport>(restarts));
  std::vector<std::vector<bool>> ok(grid.size(),
                                    std::vector<bool>(restarts, false));

  const std::size_t total = grid.size() * restarts;
  parallel_for(total, default_parallelism(), [&](std::size_t idx) {
    const std::size_t ci = idx / restarts;
    const std::size_t ri = idx % restarts;
    const std::uint64_t seed = base_seed + ri;
    try {
      TrainRecord rec = train(spec, grid[ci], sizes, seed);
      const bool finite = std::isfinite(rec.e_t);
      if (with_metrics && finite) {
        MLPArchitecture arch;
        arch.input_dim = spec.input_dim;
        arch.output_dim = spec.output_dim;
        arch.hidden_layers = grid[ci].depth;
        arch.hidden_width = grid[ci].width;
        arch.activation = grid[ci].activation;
        reports[ci][ri] = evaluate_metrics(spec, arch, rec.theta.theta);
      }
      reports[ci][ri].e_d = rec.errors.e_d;
      reports[ci][ri].e_sb = rec.errors.e_sb;
      reports[ci][ri].e_p = rec.errors.e_p;
      reports[ci][ri].e_t = rec.e_t;
      result.records[ci][ri] = std::move(rec);
      ok[ci][ri] = finite;
    } catch (const std::exception&) {
      ok[ci][ri] = false;  // recorded and excluded from the mean
    }
  });

  std::vector<ConfigStats> stats(grid.size());
  for (std::size_t ci = 0; ci < grid.size(); ++ci) {
    ConfigStats& cs = stats[ci];
    cs.config = grid[ci];
    double sum_et = 0.0;
    double best_et = std::numeric_limits<double>::infinity();
    // mean of each metric over successful restarts; stays NaN when the
    // metric does not apply to the problem
    const auto mean_of = [&](double ErrorReport::* field) {
      double sum = 0.0;
      int n = 0;
      for (int ri = 0; ri < restarts; ++ri) {
        if (!ok[ci][ri]) continue;
        const double v = reports[ci][ri].*field;
        if (std::isnan(v)) continue;
        sum += v;
        ++n;
      }
      return n > 0 ? sum / n : std::nan("");
    };
    for (int ri = 0; ri < restarts; ++ri) {
      if (!ok[ci][ri]) {
        ++cs.failures;
        continue;
      }
      ++cs.successes;
      const double et = result.records[ci][ri].e_t;
      sum_et += et;
      if (et < best_et) {
        best_et = et;
        cs.best_restart = ri;
        cs.best_metrics = reports[ci][ri];
      }
    }
    cs.mean_metrics.l2_pct = mean_of(&ErrorReport::l2_pct);
    cs.mean_metrics.h1_pct = mean_of(&ErrorReport::h1_pct);
    cs.mean_metrics.sup_t_l2_pct = mean_of(&ErrorReport::sup_t_l2_pct);
    cs.mean_metrics.pressure_l2_pct = mean_of(&ErrorReport::pressure_l2_pct);
    cs.mean_metrics.e_d = mean_of(&ErrorReport::e_d);
    cs.mean_metrics.e_sb = mean_of(&ErrorReport::e_sb);
    cs.mean_metrics.e_p = mean_of(&ErrorReport::e_p);
    cs.mean_metrics.e_t = mean_of(&ErrorReport::e_t);
    cs.mean_e_t = cs.successes > 0 ? sum_et / cs.successes
                                   : std::numeric_limits<double>::infinity();
  }

  std::stable_sort(stats.begin(), stats.end(),
                   [](const ConfigStats& a, const ConfigStats& b) {
                     return a.mean_e_t < b.mean_e_t;
                   });
  result.ranked = std::move(stats);
  result.best_config = 0;
  return result;
}

}  // namespace dapinn
