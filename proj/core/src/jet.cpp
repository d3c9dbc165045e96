#include "dapinn/jet.hpp"

#include <cmath>
#include <stdexcept>

namespace dapinn {

namespace {

double id_f(double x) { return x; }
double id_d1(double) { return 1.0; }
double id_d2(double) { return 0.0; }

double tanh_f(double x) { return std::tanh(x); }
double tanh_d1(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}
double tanh_d2(double x) {
  const double t = std::tanh(x);
  return -2.0 * t * (1.0 - t * t);
}
double tanh_d3(double x) {
  const double t = std::tanh(x);
  const double s = 1.0 - t * t;
  return -2.0 * s * (s - 2.0 * t * t);
}

double sig_f(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double sig_d1(double x) {
  const double s = sig_f(x);
  return s * (1.0 - s);
}
double sig_d2(double x) {
  const double s = sig_f(x);
  return s * (1.0 - s) * (1.0 - 2.0 * s);
}
double sig_d3(double x) {
  const double s = sig_f(x);
  return s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
}

const ActivationFns kIdentity{id_f, id_d1, id_d2, id_d2};
const ActivationFns kTanh{tanh_f, tanh_d1, tanh_d2, tanh_d3};
const ActivationFns kSigmoid{sig_f, sig_d1, sig_d2, sig_d3};

}  // namespace

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + name);
}

const ActivationFns& activation_fns(Activation a) {
  switch (a) {
    case Activation::Identity: return kIdentity;
    case Activation::Tanh: return kTanh;
    case Activation::Sigmoid: return kSigmoid;
  }
  return kTanh;
}

std::vector<Jet2> jet2_seed(Tape& tape, std::span<const double> x) {
  std::vector<ScalarNode> coords;
  coords.reserve(x.size());
  for (double xi : x) coords.push_back(tape.variable(xi));
  return jet2_seed(tape, coords);
}

std::vector<Jet2> jet2_seed(Tape& tape, std::span<const ScalarNode> coords) {
  const std::size_t d = coords.size();
  const ScalarNode zero = tape.constant(0.0);
  const ScalarNode one = tape.constant(1.0);
  std::vector<Jet2> jets(d);
  for (std::size_t i = 0; i < d; ++i) {
    jets[i].value = coords[i];
    jets[i].d1.assign(d, zero);
    jets[i].d1[i] = one;
    jets[i].d2.assign(d, zero);
  }
  return jets;
}

Jet2 jet2_activation(const Jet2& a, Activation kind) {
  if (kind == Activation::Identity) return a;
  Tape& tape = *a.value.tape();
  const Op act_op = kind == Activation::Tanh ? Op::Tanh : Op::Sigmoid;
  Jet2 out;
  out.value = kind == Activation::Tanh ? tape.tanh(a.value) : tape.sigmoid(a.value);
  const ScalarNode s1 = tape.activation_d1(act_op, a.value, out.value);
  const ScalarNode s2 = tape.activation_d2(act_op, a.value, out.value);
  const std::size_t d = a.dims();
  out.d1.resize(d);
  out.d2.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.d1[i] = tape.mul(s1, a.d1[i]);
    // s''(a) a1^2 + s'(a) a2, with zero operands folded away at record time
    const ScalarNode curv = tape.mul(s2, tape.mul(a.d1[i], a.d1[i]));
    out.d2[i] = tape.mul_add(s1, a.d2[i], curv);
  }
  return out;
}

Jet2 jet_add(const Jet2& a, const Jet2& b) {
  Tape& tape = *a.value.tape();
  Jet2 out;
  out.value = tape.add(a.value, b.value);
  const std::size_t d = a.dims();
  out.d1.resize(d);
  out.d2.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.d1[i] = tape.add(a.d1[i], b.d1[i]);
    out.d2[i] = tape.add(a.d2[i], b.d2[i]);
  }
  return out;
}

Jet2 jet_sub(const Jet2& a, const Jet2& b) {
  Tape& tape = *a.value.tape();
  Jet2 out;
  out.value = tape.sub(a.value, b.value);
  const std::size_t d = a.dims();
  out.d1.resize(d);
  out.d2.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.d1[i] = tape.sub(a.d1[i], b.d1[i]);
    out.d2[i] = tape.sub(a.d2[i], b.d2[i]);
  }
  return out;
}

Jet2 jet_mul(const Jet2& a, const Jet2& b) {
  Tape& tape = *a.value.tape();
  Jet2 out;
  out.value = tape.mul(a.value, b.value);
  const std::size_t d = a.dims();
  out.d1.resize(d);
  out.d2.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.d1[i] = tape.mul_add(a.d1[i], b.value, tape.mul(a.value, b.d1[i]));
    // (ab)'' = a'' b + 2 a' b' + a b''
    ScalarNode cross = tape.mul(tape.constant(2.0), tape.mul(a.d1[i], b.d1[i]));
    ScalarNode t = tape.mul_add(a.d2[i], b.value, cross);
    out.d2[i] = tape.mul_add(a.value, b.d2[i], t);
  }
  return out;
}

Jet2 jet_scale(ScalarNode k, const Jet2& a) {
  Tape& tape = *a.value.tape();
  Jet2 out;
  out.value = tape.mul(k, a.value);
  const std::size_t d = a.dims();
  out.d1.resize(d);
  out.d2.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    out.d1[i] = tape.mul(k, a.d1[i]);
    out.d2[i] = tape.mul(k, a.d2[i]);
  }
  return out;
}

Jet2 jet_const(Tape& tape, double v, std::size_t dims) {
  Jet2 out;
  out.value = tape.constant(v);
  out.d1.assign(dims, tape.constant(0.0));
  out.d2.assign(dims, tape.constant(0.0));
  return out;
}

}  // namespace dapinn
