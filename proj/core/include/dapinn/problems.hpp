#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dapinn/geometry.hpp"
#include "dapinn/jet.hpp"
#include "dapinn/quadrature.hpp"

namespace dapinn {

enum class ProblemKind { Poisson2D, Heat1D, HeatND, Wave1D, Stokes2D };

/// Plain-double jet of a closed-form field: per output component the value,
/// gradient, and diagonal second derivatives with respect to the inputs.
/// Used as the oracle side of residual and metric checks.
struct FieldJet {
  int n_outputs = 0;
  int dim = 0;
  std::vector<double> value;  // n_outputs
  std::vector<double> d1;     // n_outputs x dim
  std::vector<double> d2;     // n_outputs x dim (diagonal)

  void resize(int outputs, int d) {
    n_outputs = outputs;
    dim = d;
    value.assign(outputs, 0.0);
    d1.assign(static_cast<std::size_t>(outputs) * d, 0.0);
    d2.assign(static_cast<std::size_t>(outputs) * d, 0.0);
  }
};

/// One concrete inverse problem: geometry, observation subdomain, source,
/// data and exact-solution callables, and the training-set split policy.
/// For time-dependent problems the input layout is (x_1..x_d, t).
struct ProblemSpec {
  ProblemKind kind;
  std::string id;
  int spatial_dim = 0;
  bool time_dependent = false;
  double t_final = 0.0;
  int input_dim = 0;
  int output_dim = 1;  // network outputs (3 for Stokes: u1, u2, p)
  int data_dim = 1;    // observed components (2 for Stokes: velocity only)
  int n_source = 1;    // source components fed to the residual (3 for Stokes)

  Geometry domain;       // full input-space domain
  Geometry observation;  // observation set, strict subset of domain
  Box spatial_box;       // spatial factor, for boundary rules
  bool has_boundary_term = false;
  bool homogeneous_source = false;

  double noise_level = 0.0;
  double data_sup_norm = -1.0;  // sup |u| on the observation set, if known

  Rule interior_rule = Rule::Sobol;
  Rule data_rule = Rule::MidpointGrid;
  Rule boundary_rule = Rule::BoundaryGrid;

  // Split policy: either N_d is tied to the observation/domain measure
  // ratio (elliptic problems), or N_int is a fixed fraction of N with the
  // remainder split between boundary and data sets proportionally to their
  // measures, or all three counts are fixed.
  bool data_fraction_from_measure = false;
  double interior_fraction = -1.0;
  std::optional<std::array<std::size_t, 3>> fixed_counts;  // {int, sb, d}

  std::function<void(std::span<const double>, std::span<double>)> source;
  std::function<void(std::span<const double>, std::span<double>)> exact;
  std::function<void(std::span<const double>, FieldJet&)> exact_jet;
  // boundary trace g_sb (empty => homogeneous Dirichlet)
  std::function<double(std::span<const double>)> boundary_trace;
};

struct UnknownProblem : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// --- residual operators ----------------------------------------------------

/// -Laplace(u) - f.
ScalarNode poisson_pde_residual(const Jet2& u, ScalarNode f);
/// u_t - Laplace(u) - f with t the last coordinate.
ScalarNode heat_pde_residual(const Jet2& u, ScalarNode f);
/// u_tt - u_xx - f.
ScalarNode wave_pde_residual(const Jet2& u, ScalarNode f);

struct StokesResiduals {
  std::array<ScalarNode, 2> momentum;  // Laplace(u_i) - dp/dx_i - f_i
  ScalarNode divergence;               // div(u) - f_d
};
/// fields = {u1, u2, p} jets; f = {f1, f2, f_d}.
StokesResiduals stokes_pde_residuals(std::span<const Jet2> fields,
                                     std::span<const ScalarNode> f);

/// u - g on the observation set.
ScalarNode data_residual(ScalarNode value, ScalarNode g);
/// u - g_sb on the lateral boundary (g_sb = 0 for homogeneous Dirichlet).
ScalarNode boundary_residual(ScalarNode value, ScalarNode trace);

/// All PDE residual components of a problem at one interior point.
std::vector<ScalarNode> pde_residuals(const ProblemSpec& spec,
                                      std::span<const Jet2> fields,
                                      std::span<const ScalarNode> source_vals);

/// Wraps the closed-form exact solution in the Jet2 interface (constants on
/// the given tape) so residual operators can be driven by the oracle field.
std::vector<Jet2> oracle_jets(Tape& tape, const ProblemSpec& spec,
                              std::span<const double> x);

// --- data generation ---------------------------------------------------------

/// g~(z_j) = u(z_j) + noise_level * sup|u| * eps_j with iid standard normal
/// eps, deterministic per seed. Row-major n_points x data_dim.
std::vector<double> make_data(const ProblemSpec& spec,
                              const QuadratureSet& observation_points,
                              double noise_level, std::uint64_t seed);

// --- training sets -----------------------------------------------------------

struct TrainingSets {
  QuadratureSet interior;
  QuadratureSet boundary;  // empty when the problem has no boundary term
  QuadratureSet data;
  std::size_t requested_total = 0;
};

struct SetSizes {
  std::size_t n_total = 0;  // ignored when counts are explicit
  std::optional<std::array<std::size_t, 3>> explicit_counts;
};

TrainingSets make_training_sets(const ProblemSpec& spec, const SetSizes& sizes,
                                std::uint64_t seed);

// --- builtin catalog ---------------------------------------------------------

ProblemSpec poisson_spec(double noise_level = 0.0);
/// printed_exponent=true keeps the quadratic-in-time damping factor and a
/// source term derived symbolically from it; false switches to the
/// homogeneous-equation variant exp(-4 pi^2 t) with f = 0.
ProblemSpec heat1d_spec(bool printed_exponent = true);
ProblemSpec heatnd_spec(int n);
ProblemSpec wave_spec(bool gcc);
ProblemSpec stokes_spec();

std::vector<std::string> builtin_ids();
ProblemSpec problem_by_id(const std::string& id);

}  // namespace dapinn
