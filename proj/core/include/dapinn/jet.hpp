#pragma once

#include <span>
#include <vector>

#include "dapinn/tape.hpp"

namespace dapinn {

enum class Activation { Identity, Tanh, Sigmoid };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

/// Plain-double activation derivative tower, used by oracles and by the
/// non-recorded evaluation paths.
struct ActivationFns {
  double (*f)(double);
  double (*d1)(double);
  double (*d2)(double);
  double (*d3)(double);
};
const ActivationFns& activation_fns(Activation a);

/// Second-order forward jet of a scalar field with respect to the input
/// coordinates: value, first derivatives and the diagonal of the Hessian.
/// Every component is a tape node, so jets stay differentiable with respect
/// to network parameters.
struct Jet2 {
  ScalarNode value;
  std::vector<ScalarNode> d1;
  std::vector<ScalarNode> d2;

  std::size_t dims() const { return d1.size(); }
};

/// Taylor seeds for the input coordinates: coordinate i carries value x_i,
/// d1 = e_i and zero curvature. The value slots are rebindable variables.
std::vector<Jet2> jet2_seed(Tape& tape, std::span<const double> x);

/// Seeds on top of existing value nodes (used when coordinates are shared
/// with other parts of a recording).
std::vector<Jet2> jet2_seed(Tape& tape, std::span<const ScalarNode> coords);

/// Elementwise activation by the second-order chain rule:
///   out.d1[i] = s'(a) a.d1[i]
///   out.d2[i] = s''(a) a.d1[i]^2 + s'(a) a.d2[i]
Jet2 jet2_activation(const Jet2& a, Activation kind);

// Jet arithmetic (full second-order product rule on the diagonal).
Jet2 jet_add(const Jet2& a, const Jet2& b);
Jet2 jet_sub(const Jet2& a, const Jet2& b);
Jet2 jet_mul(const Jet2& a, const Jet2& b);
/// Scale by a factor that does not depend on the inputs (e.g. a parameter).
Jet2 jet_scale(ScalarNode k, const Jet2& a);
Jet2 jet_const(Tape& tape, double v, std::size_t dims);

}  // namespace dapinn
