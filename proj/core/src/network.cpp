#include "dapinn/network.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "dapinn/rng.hpp"
#include "json.hpp"

namespace dapinn {

namespace {

void check_arch(const MLPArchitecture& a) {
  if (a.input_dim < 1 || a.output_dim < 1 || a.hidden_layers < 1 ||
      a.hidden_width < 1)
    throw std::invalid_argument("MLPArchitecture: all dimensions must be >= 1");
}

}  // namespace

std::size_t param_count(const MLPArchitecture& arch) {
  check_arch(arch);
  return ParamLayout::from(arch).total;
}

ParamLayout ParamLayout::from(const MLPArchitecture& arch) {
  check_arch(arch);
  ParamLayout layout;
  std::size_t off = 0;
  int in = arch.input_dim;
  for (int k = 0; k <= arch.hidden_layers; ++k) {
    const int out = (k == arch.hidden_layers) ? arch.output_dim : arch.hidden_width;
    Layer l;
    l.w_offset = off;
    off += static_cast<std::size_t>(in) * out;
    l.b_offset = off;
    off += out;
    l.in = in;
    l.out = out;
    layout.layers.push_back(l);
    in = out;
  }
  layout.total = off;
  return layout;
}

ParameterVector init_params(const MLPArchitecture& arch, std::uint64_t seed) {
  const ParamLayout layout = ParamLayout::from(arch);
  ParameterVector p;
  p.theta.assign(layout.total, 0.0);
  Rng rng(derive_seed(seed, 0x1717));
  for (const auto& l : layout.layers) {
    const double bound = std::sqrt(6.0 / (l.in + l.out));
    for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i)
      p.theta[l.w_offset + i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return p;
}

std::vector<double> forward(const MLPArchitecture& arch,
                            std::span<const double> theta,
                            std::span<const double> x) {
  const ParamLayout layout = ParamLayout::from(arch);
  if (theta.size() != layout.total)
    throw std::invalid_argument("forward: theta length mismatch");
  if (x.size() != static_cast<std::size_t>(arch.input_dim))
    throw std::invalid_argument("forward: input dimension mismatch");
  const ActivationFns& act = activation_fns(arch.activation);

  std::vector<double> z(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t k = 0; k < layout.layers.size(); ++k) {
    const auto& l = layout.layers[k];
    next.assign(l.out, 0.0);
    for (int r = 0; r < l.out; ++r) {
      double acc = theta[l.b_offset + r];
      const std::size_t row = l.w_offset + static_cast<std::size_t>(r) * l.in;
      for (int cidx = 0; cidx < l.in; ++cidx)
        acc = theta[row + cidx] * z[cidx] + acc;
      next[r] = acc;
    }
    const bool last = (k + 1 == layout.layers.size());
    if (!last)
      for (double& v : next) v = act.f(v);
    z.swap(next);
  }
  return z;
}

std::vector<ScalarNode> forward_nodes(Tape& tape, const MLPArchitecture& arch,
                                      std::span<const ScalarNode> theta,
                                      std::span<const ScalarNode> x) {
  const ParamLayout layout = ParamLayout::from(arch);
  if (theta.size() != layout.total)
    throw std::invalid_argument("forward_nodes: theta length mismatch");

  std::vector<ScalarNode> z(x.begin(), x.end());
  std::vector<ScalarNode> next;
  for (std::size_t k = 0; k < layout.layers.size(); ++k) {
    const auto& l = layout.layers[k];
    next.assign(l.out, ScalarNode{});
    for (int r = 0; r < l.out; ++r) {
      ScalarNode acc = theta[l.b_offset + r];
      const std::size_t row = l.w_offset + static_cast<std::size_t>(r) * l.in;
      for (int cidx = 0; cidx < l.in; ++cidx)
        acc = tape.mul_add(theta[row + cidx], z[cidx], acc);
      next[r] = acc;
    }
    const bool last = (k + 1 == layout.layers.size());
    if (!last && arch.activation != Activation::Identity) {
      for (auto& v : next)
        v = arch.activation == Activation::Tanh ? tape.tanh(v) : tape.sigmoid(v);
    }
    z.swap(next);
  }
  return z;
}

std::vector<Jet2> forward_jet(Tape& tape, const MLPArchitecture& arch,
                              std::span<const ScalarNode> theta,
                              std::span<const Jet2> seeds) {
  const ParamLayout layout = ParamLayout::from(arch);
  if (theta.size() != layout.total)
    throw std::invalid_argument("forward_jet: theta length mismatch");
  if (seeds.size() != static_cast<std::size_t>(arch.input_dim))
    throw std::invalid_argument("forward_jet: seed count mismatch");
  const std::size_t d = seeds.empty() ? 0 : seeds[0].dims();

  std::vector<Jet2> z(seeds.begin(), seeds.end());
  std::vector<Jet2> next;
  for (std::size_t k = 0; k < layout.layers.size(); ++k) {
    const auto& l = layout.layers[k];
    next.assign(l.out, Jet2{});
    for (int r = 0; r < l.out; ++r) {
      const std::size_t row = l.w_offset + static_cast<std::size_t>(r) * l.in;
      Jet2 acc;
      acc.value = theta[l.b_offset + r];
      acc.d1.assign(d, tape.constant(0.0));
      acc.d2.assign(d, tape.constant(0.0));
      for (int cidx = 0; cidx < l.in; ++cidx) {
        const ScalarNode w = theta[row + cidx];
        const Jet2& in = z[cidx];
        acc.value = tape.mul_add(w, in.value, acc.value);
        for (std::size_t i = 0; i < d; ++i) {
          acc.d1[i] = tape.mul_add(w, in.d1[i], acc.d1[i]);
          acc.d2[i] = tape.mul_add(w, in.d2[i], acc.d2[i]);
        }
      }
      next[r] = std::move(acc);
    }
    const bool last = (k + 1 == layout.layers.size());
    if (!last)
      for (auto& v : next) v = jet2_activation(v, arch.activation);
    z.swap(next);
  }
  return z;
}

std::vector<Jet2> forward_jet(Tape& tape, const MLPArchitecture& arch,
                              std::span<const double> theta,
                              std::span<const double> x,
                              std::vector<ScalarNode>* theta_nodes) {
  std::vector<ScalarNode> tn = tape.variables(theta);
  std::vector<Jet2> seeds = jet2_seed(tape, x);
  auto out = forward_jet(tape, arch, tn, seeds);
  if (theta_nodes) *theta_nodes = std::move(tn);
  return out;
}

void save_checkpoint(const std::string& path, const MLPArchitecture& arch,
                     std::span<const double> theta) {
  nlohmann::json j;
  j["format"] = "dapinn-checkpoint";
  j["version"] = 1;
  j["architecture"] = {
      {"input_dim", arch.input_dim},       {"output_dim", arch.output_dim},
      {"hidden_layers", arch.hidden_layers}, {"hidden_width", arch.hidden_width},
      {"activation", activation_name(arch.activation)},
  };
  j["theta"] = std::vector<double>(theta.begin(), theta.end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "dapinn-checkpoint" || j.value("version", 0) != 1)
    throw std::runtime_error("unrecognized checkpoint format: " + path);
  Checkpoint c;
  const auto& a = j.at("architecture");
  c.arch.input_dim = a.at("input_dim").get<int>();
  c.arch.output_dim = a.at("output_dim").get<int>();
  c.arch.hidden_layers = a.at("hidden_layers").get<int>();
  c.arch.hidden_width = a.at("hidden_width").get<int>();
  c.arch.activation = activation_from_name(a.at("activation").get<std::string>());
  c.params.theta = j.at("theta").get<std::vector<double>>();
  if (c.params.theta.size() != param_count(c.arch))
    throw std::runtime_error("checkpoint theta length does not match architecture");
  return c;
}

}  // namespace dapinn
