#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dapinn/metrics.hpp"
#include "dapinn/network.hpp"
#include "dapinn/optim.hpp"
#include "dapinn/problems.hpp"
#include "dapinn/program.hpp"
#include "dapinn/tape.hpp"

namespace dapinn {

/// One training configuration (a grid cell of the ensemble protocol).
struct Hyperparameters {
  int depth = 4;   // hidden layers
  int width = 24;  // neurons per hidden layer
  int q = 2;
  double lambda_reg = 0.0;
  double lambda = 0.001;
  std::string optimizer = "lbfgs";  // "lbfgs" | "adam"
  int max_iterations = 10000;
  Activation activation = Activation::Tanh;
};

/// The default ensemble grid: depth {4,8,10} x width {16,20,24} x
/// lambda_reg {0,1e-6} x lambda {0.001,0.01,0.1,1}, q = 2.
std::vector<Hyperparameters> default_hyper_grid();

struct TrainingErrors {
  double e_d = 0.0, e_sb = 0.0, e_p = 0.0;
  double e_t(double lambda) const {
    return std::sqrt(e_d * e_d + e_sb * e_sb + lambda * e_p * e_p);
  }
};

/// Builds the full loss on a scalar tape:
///   J = sum_d w |R_d|^2 [+ sum_sb w |R_sb|^2] + lambda sum_int w |R|^2
///       + lambda_reg ||theta_W||_q^q
/// `data_values` are the observed data at the data points (row-major).
/// Returns the loss node; theta leaf nodes are exposed for reverse_gradient.
ScalarNode assemble_loss(Tape& tape, const ProblemSpec& spec,
                         const MLPArchitecture& arch, const TrainingSets& sets,
                         std::span<const double> data_values,
                         std::span<const double> theta, double lambda,
                         double lambda_reg, int q,
                         std::vector<ScalarNode>* theta_nodes = nullptr);

/// Fast loss/gradient evaluation used by the optimizers: one recorded point
/// computation per training-set class, replayed over all points in chunks.
/// Agrees with assemble_loss up to summation rounding.
class LossEvaluator {
 public:
  LossEvaluator(const ProblemSpec& spec, const MLPArchitecture& arch,
                const TrainingSets& sets, std::span<const double> data_values,
                double lambda, double lambda_reg, int q);

  std::size_t n_params() const { return layout_.total; }

  double value_and_gradient(std::span<const double> theta,
                            std::span<double> grad);
  double value(std::span<const double> theta);
  TrainingErrors training_errors(std::span<const double> theta);

  ObjectiveFn objective() {
    return [this](std::span<const double> x, std::span<double> g) {
      return value_and_gradient(x, g);
    };
  }

 private:
  double regularizer(std::span<const double> theta, std::span<double> grad);

  ParamLayout layout_;
  double lambda_, lambda_reg_;
  int q_;
  std::optional<BatchedProgram> interior_, boundary_, data_;
};

struct TrainRecord {
  std::string problem;
  Hyperparameters hyper;
  std::uint64_t seed = 0;
  ParameterVector theta;
  std::vector<double> trajectory;
  double loss = 0.0;
  TrainingErrors errors;
  double e_t = 0.0;
  OptimStatus status = OptimStatus::MaxIterations;
  int iterations = 0;
  int n_evals = 0;
  double wall_seconds = 0.0;
  std::size_t n_int = 0, n_sb = 0, n_d = 0, n_requested = 0;
};

/// One full run: build training sets from the spec, generate (possibly
/// noisy) data, initialize, minimize, and report the training-error
/// components at the trained parameters.
TrainRecord train(const ProblemSpec& spec, const Hyperparameters& hyper,
                  const SetSizes& sizes, std::uint64_t seed);

/// Serialize a run record to a JSON document.
std::string train_record_json(const TrainRecord& record, bool include_theta);

// --- ensemble protocol -------------------------------------------------------

struct ConfigStats {
  Hyperparameters config;
  double mean_e_t = 0.0;
  int successes = 0;
  int failures = 0;
  std::size_t best_restart = 0;  // restart with the smallest E_T
  ErrorReport mean_metrics;      // averaged over successful restarts
  ErrorReport best_metrics;      // metrics of the best restart
};

struct EnsembleResult {
  std::vector<ConfigStats> ranked;       // sorted by mean E_T ascending
  std::size_t best_config = 0;           // index into `ranked`
  std::vector<std::vector<TrainRecord>> records;  // [config][restart]
};

/// Runs `restarts` independent trainings per configuration (restart seeds
/// are base_seed + restart index), ranks configurations by mean training
/// error over successful runs, and reports mean and best-restart
/// generalization errors. Failed runs are excluded from means; a
/// configuration with no successful run ranks last.
EnsembleResult ensemble(const ProblemSpec& spec,
                        std::span<const Hyperparameters> grid, int restarts,
                        const SetSizes& sizes, std::uint64_t base_seed,
                        bool with_metrics = true);

/// Deterministic parallel map: fn(0..n-1) on `width` threads; results must
/// be written to per-index slots, never depends on scheduling.
void parallel_for(std::size_t n, int width,
                  const std::function<void(std::size_t)>& fn);

/// DAPINN_THREADS or hardware concurrency.
int default_parallelism();

/// Diagnostic overload wiring a run record into the well-trained check.
inline WellTrainedDiagnostic well_trained_check(
    const TrainRecord& record, std::span<const DecaySample> interior_decay,
    std::span<const DecaySample> data_decay) {
  return well_trained_check(record.errors.e_p, record.errors.e_d,
                            static_cast<double>(record.n_int),
                            static_cast<double>(record.n_d), interior_decay,
                            data_decay);
}

}  // namespace dapinn
