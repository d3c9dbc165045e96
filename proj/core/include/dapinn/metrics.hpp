#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dapinn/network.hpp"
#include "dapinn/problems.hpp"
#include "dapinn/quadrature.hpp"

namespace dapinn {

struct TestSetInfo {
  std::string rule;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

/// Relative percentage generalization errors plus the training-error
/// components of the run they belong to. Fields that do not apply to a
/// problem stay NaN and are emitted as empty CSV cells.
struct ErrorReport {
  double l2_pct = std::nan("");
  double h1_pct = std::nan("");
  double sup_t_l2_pct = std::nan("");
  double pressure_l2_pct = std::nan("");
  double e_d = 0.0, e_sb = 0.0, e_p = 0.0, e_t = 0.0;
  TestSetInfo test;
};

/// Candidate field given as a plain callable (fills output_dim values);
/// used to compare non-network fields against the exact solution.
using FieldFn = std::function<void(std::span<const double>, std::span<double>)>;
/// Candidate field with first derivatives, for the H1 metric.
using FieldJetFn = std::function<void(std::span<const double>, FieldJet&)>;

/// 100 * ||u - u*||_L2 / ||u||_L2 on the given test set (velocity vector
/// norm for Stokes).
double l2_relative_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                         std::span<const double> theta,
                         const QuadratureSet& test);
double l2_relative_error(const ProblemSpec& spec, const FieldFn& u_star,
                         const QuadratureSet& test);

/// Full H1 relative error; the gradient part is spatial-only for
/// time-dependent problems.
double h1_relative_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                         std::span<const double> theta,
                         const QuadratureSet& test);
double h1_relative_error(const ProblemSpec& spec, const FieldJetFn& u_star,
                         const QuadratureSet& test);

/// Wave: 100 * max_t ||u(.,t)-u*(.,t)||_L2(D) / max_t ||u(.,t)||_L2(D) on a
/// uniform time grid.
double sup_t_l2_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                      std::span<const double> theta, int time_slices = 101,
                      int spatial_resolution = 200);
double sup_t_l2_error(const ProblemSpec& spec, const FieldFn& u_star,
                      int time_slices = 101, int spatial_resolution = 200);

/// Stokes pressure error after subtracting the quadrature mean of (p* - p).
double pressure_l2_error(const ProblemSpec& spec, const MLPArchitecture& arch,
                         std::span<const double> theta,
                         const QuadratureSet& test);
double pressure_l2_error(const ProblemSpec& spec, const FieldFn& u_star,
                         const QuadratureSet& test);

/// Default test set per problem: 200 midpoints per axis in low dimension,
/// 1e5 uniform random points above three dimensions.
QuadratureSet default_test_set(const ProblemSpec& spec,
                               std::uint64_t seed = 12345);

/// All applicable generalization errors for a trained parameter vector.
ErrorReport evaluate_metrics(const ProblemSpec& spec,
                             const MLPArchitecture& arch,
                             std::span<const double> theta);

// --- well-trained diagnostic -------------------------------------------------

struct DecaySample {
  double n;      // number of quadrature points
  double error;  // observed quadrature error
};

/// Least-squares slope alpha of log(error) ~ -alpha log(n).
double fit_decay_rate(std::span<const DecaySample> samples);

enum class WellTrainedStatus { WellTrained, NotWellTrained, Indeterminate };

struct WellTrainedDiagnostic {
  WellTrainedStatus status = WellTrainedStatus::Indeterminate;
  double max_training_error = 0.0;
  double gap = 0.0;  // N_int^{-a/2} + N_d^{-a_d/2} with unit constants
  double alpha_interior = 0.0;
  double alpha_data = 0.0;
  std::string note;
};

/// Compares max(E_p, E_d) against the empirically fitted generalization-gap
/// terms (unit prefactors; purely diagnostic). Needs at least two decay
/// samples per rate, otherwise reports Indeterminate.
WellTrainedDiagnostic well_trained_check(
    double e_p, double e_d, double n_int, double n_d,
    std::span<const DecaySample> interior_decay,
    std::span<const DecaySample> data_decay);

// --- CSV reporting -----------------------------------------------------------

/// Shortest round-trip decimal rendering.
std::string fmt_double(double v);

std::string metrics_csv_header();

struct CsvRowInputs {
  std::string problem;
  std::size_t n_total = 0, n_int = 0, n_sb = 0, n_d = 0;
  int depth = 0, width = 0;
  double lambda = 0.0, lambda_reg = 0.0;
  std::uint64_t seed = 0;
  int restarts = 1;
  double wall_seconds = 0.0;
};

std::string metrics_csv_row(const CsvRowInputs& in, const ErrorReport& report);

}  // namespace dapinn
