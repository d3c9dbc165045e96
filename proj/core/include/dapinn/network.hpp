#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dapinn/jet.hpp"
#include "dapinn/tape.hpp"

namespace dapinn {

/// Fully connected feedforward architecture with a uniform hidden width.
/// The final layer is purely affine (no output activation).
struct MLPArchitecture {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_layers = 4;
  int hidden_width = 20;
  Activation activation = Activation::Tanh;

  bool operator==(const MLPArchitecture&) const = default;
};

/// M = sum over layers of (d_k + 1) d_{k+1}.
std::size_t param_count(const MLPArchitecture& arch);

/// Offsets of each layer's blocks inside the flat parameter vector.
/// Layout: W1 row-major, b1, W2, b2, ... with W_k of shape (out x in).
struct ParamLayout {
  struct Layer {
    std::size_t w_offset;
    std::size_t b_offset;
    int in;
    int out;
  };
  std::vector<Layer> layers;
  std::size_t total = 0;

  static ParamLayout from(const MLPArchitecture& arch);
  /// Applies fn(index) to every weight entry (biases excluded).
  template <class Fn>
  void for_each_weight(Fn&& fn) const {
    for (const Layer& l : layers)
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i)
        fn(l.w_offset + i);
  }
};

/// Flat trainable parameter vector theta.
struct ParameterVector {
  std::vector<double> theta;

  std::size_t size() const { return theta.size(); }
  std::span<const double> view() const { return theta; }
};

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
/// Deterministic for a fixed seed.
ParameterVector init_params(const MLPArchitecture& arch, std::uint64_t seed);

/// Plain forward pass. Accumulation order matches the recorded jet forward
/// exactly, so the value slot of forward_jet agrees bit for bit.
std::vector<double> forward(const MLPArchitecture& arch,
                            std::span<const double> theta,
                            std::span<const double> x);

/// Recorded forward pass over existing parameter nodes.
std::vector<ScalarNode> forward_nodes(Tape& tape, const MLPArchitecture& arch,
                                      std::span<const ScalarNode> theta,
                                      std::span<const ScalarNode> x);

/// Recorded jet forward pass: per output, value plus all first and diagonal
/// second input derivatives, each parameter-differentiable.
std::vector<Jet2> forward_jet(Tape& tape, const MLPArchitecture& arch,
                              std::span<const ScalarNode> theta,
                              std::span<const Jet2> seeds);

/// Convenience: records parameters as variables and seeds the inputs.
std::vector<Jet2> forward_jet(Tape& tape, const MLPArchitecture& arch,
                              std::span<const double> theta,
                              std::span<const double> x,
                              std::vector<ScalarNode>* theta_nodes = nullptr);

// Versioned text checkpoint of (architecture, theta); doubles round-trip
// exactly.
void save_checkpoint(const std::string& path, const MLPArchitecture& arch,
                     std::span<const double> theta);
struct Checkpoint {
  MLPArchitecture arch;
  ParameterVector params;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dapinn
