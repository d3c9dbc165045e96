#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dapinn {

/// Operation kinds recorded on the tape. The *P / *PP variants are the
/// first and second derivative of the activation taken as primitives; their
/// reverse-mode partials are the next derivative in the tower (so the sweep
/// over second-order jet components stays exact).
enum class Op : std::uint8_t {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  MulAdd,  // a*b + c
  Abs,
  Tanh,
  TanhP,   // sech^2(a), recorded with the matching Tanh node as second operand
  TanhPP,  // -2 tanh(a) sech^2(a), reverse partial is tanh'''
  Sigmoid,
  SigmoidP,
  SigmoidPP,
  Sin,
  Cos,
  Exp,
  Pow,  // a^e with constant exponent held in a Const operand
};

const char* op_name(Op op);

class Tape;

/// Handle to one recorded scalar. Cheap to copy; the value and the
/// provenance record live on the owning tape.
class ScalarNode {
 public:
  ScalarNode() = default;
  ScalarNode(Tape* tape, std::int32_t index) : tape_(tape), index_(index) {}

  bool valid() const { return tape_ != nullptr; }
  std::int32_t index() const { return index_; }
  Tape* tape() const { return tape_; }
  double value() const;

 private:
  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
};

struct AutodiffError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Append-only record of a scalar computation. Supports replaying the
/// forward pass after leaf values change and a single reverse sweep that
/// yields adjoints of every node with respect to one scalar output.
///
/// Recording returns `ScalarNode` handles; arithmetic on them is provided
/// by free operators below. Constant subexpressions are folded at record
/// time (and multiplications by literal 0/1 never produce nodes), so the
/// recorded graph is already pruned.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  std::size_t size() const { return op_.size(); }

  ScalarNode constant(double v);
  ScalarNode variable(double v);
  std::vector<ScalarNode> variables(std::span<const double> v);

  void set_value(ScalarNode n, double v);
  double value(ScalarNode n) const { return val_[n.index()]; }

  bool is_const(ScalarNode n) const { return op_[n.index()] == Op::Const; }
  bool is_const_value(ScalarNode n, double v) const {
    return is_const(n) && val_[n.index()] == v;
  }

  /// Recompute every non-leaf value in recording order. Bit-exact replay:
  /// identical leaf values reproduce identical node values.
  void forward();

  /// Adjoints of `of` with respect to every node; nodes that do not reach
  /// `of` get exactly zero. Throws AutodiffError naming the first offending
  /// operation if a non-finite adjoint is produced.
  const std::vector<double>& reverse(ScalarNode of);

  double adjoint(ScalarNode n) const { return adj_[n.index()]; }

  // Recorded arithmetic. Operands must belong to this tape.
  ScalarNode add(ScalarNode a, ScalarNode b);
  ScalarNode sub(ScalarNode a, ScalarNode b);
  ScalarNode mul(ScalarNode a, ScalarNode b);
  ScalarNode div(ScalarNode a, ScalarNode b);
  ScalarNode neg(ScalarNode a);
  ScalarNode mul_add(ScalarNode a, ScalarNode b, ScalarNode c);
  ScalarNode abs(ScalarNode a);
  ScalarNode tanh(ScalarNode a);
  ScalarNode sigmoid(ScalarNode a);
  ScalarNode sin(ScalarNode a);
  ScalarNode cos(ScalarNode a);
  ScalarNode exp(ScalarNode a);
  ScalarNode pow(ScalarNode a, double exponent);
  ScalarNode square(ScalarNode a) { return mul(a, a); }

  /// First derivative of the activation at `a`, paired with the already
  /// recorded activation value `act` so the backward pass reuses it.
  ScalarNode activation_d1(Op activation, ScalarNode a, ScalarNode act);
  /// Second derivative; its reverse partial is the third derivative.
  ScalarNode activation_d2(Op activation, ScalarNode a, ScalarNode act);

  // Raw access for the batched replay compiler.
  std::span<const Op> ops() const { return op_; }
  std::span<const std::int32_t> operand_a() const { return a_; }
  std::span<const std::int32_t> operand_b() const { return b_; }
  std::span<const std::int32_t> operand_c() const { return c_; }
  std::span<const double> values() const { return val_; }

 private:
  ScalarNode push(Op op, std::int32_t a, std::int32_t b, std::int32_t c,
                  double value);
  double eval_node(std::size_t i) const;

  std::vector<Op> op_;
  std::vector<std::int32_t> a_, b_, c_;
  std::vector<double> val_;
  std::vector<double> adj_;
  std::int32_t zero_ = -1;
  std::int32_t one_ = -1;
};

/// Reverse-mode gradient of `loss` with respect to `params` (tape leaves).
/// Parameters that do not influence the loss get exactly zero.
std::vector<double> reverse_gradient(ScalarNode loss,
                                     std::span<const ScalarNode> params);

inline double ScalarNode::value() const { return tape_->value(*this); }

// Operator sugar; mixed double operands become recorded constants.
inline ScalarNode operator+(ScalarNode a, ScalarNode b) { return a.tape()->add(a, b); }
inline ScalarNode operator-(ScalarNode a, ScalarNode b) { return a.tape()->sub(a, b); }
inline ScalarNode operator*(ScalarNode a, ScalarNode b) { return a.tape()->mul(a, b); }
inline ScalarNode operator/(ScalarNode a, ScalarNode b) { return a.tape()->div(a, b); }
inline ScalarNode operator-(ScalarNode a) { return a.tape()->neg(a); }
inline ScalarNode operator+(ScalarNode a, double b) { return a + a.tape()->constant(b); }
inline ScalarNode operator+(double a, ScalarNode b) { return b.tape()->constant(a) + b; }
inline ScalarNode operator-(ScalarNode a, double b) { return a - a.tape()->constant(b); }
inline ScalarNode operator-(double a, ScalarNode b) { return b.tape()->constant(a) - b; }
inline ScalarNode operator*(ScalarNode a, double b) { return a * a.tape()->constant(b); }
inline ScalarNode operator*(double a, ScalarNode b) { return b.tape()->constant(a) * b; }
inline ScalarNode operator/(ScalarNode a, double b) { return a / a.tape()->constant(b); }
inline ScalarNode operator/(double a, ScalarNode b) { return b.tape()->constant(a) / b; }

}  // namespace dapinn
