#include "dapinn/tape.hpp"

#include <cmath>
#include <limits>

namespace dapinn {

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Var: return "var";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::MulAdd: return "mul_add";
    case Op::Abs: return "abs";
    case Op::Tanh: return "tanh";
    case Op::TanhP: return "tanh_d1";
    case Op::TanhPP: return "tanh_d2";
    case Op::Sigmoid: return "sigmoid";
    case Op::SigmoidP: return "sigmoid_d1";
    case Op::SigmoidPP: return "sigmoid_d2";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Pow: return "pow";
  }
  return "?";
}

ScalarNode Tape::push(Op op, std::int32_t a, std::int32_t b, std::int32_t c,
                      double value) {
  if (op_.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
    throw AutodiffError("tape overflow: more than 2^31-1 nodes");
  op_.push_back(op);
  a_.push_back(a);
  b_.push_back(b);
  c_.push_back(c);
  val_.push_back(value);
  return ScalarNode(this, static_cast<std::int32_t>(op_.size() - 1));
}

ScalarNode Tape::constant(double v) {
  if (v == 0.0 && zero_ >= 0) return ScalarNode(this, zero_);
  if (v == 1.0 && one_ >= 0) return ScalarNode(this, one_);
  ScalarNode n = push(Op::Const, -1, -1, -1, v);
  if (v == 0.0) zero_ = n.index();
  if (v == 1.0) one_ = n.index();
  return n;
}

ScalarNode Tape::variable(double v) { return push(Op::Var, -1, -1, -1, v); }

std::vector<ScalarNode> Tape::variables(std::span<const double> v) {
  std::vector<ScalarNode> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(variable(x));
  return out;
}

void Tape::set_value(ScalarNode n, double v) {
  if (op_[n.index()] != Op::Var)
    throw AutodiffError("set_value on a non-variable node");
  val_[n.index()] = v;
}

ScalarNode Tape::add(ScalarNode a, ScalarNode b) {
  if (is_const_value(a, 0.0)) return b;
  if (is_const_value(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return constant(value(a) + value(b));
  return push(Op::Add, a.index(), b.index(), -1, value(a) + value(b));
}

ScalarNode Tape::sub(ScalarNode a, ScalarNode b) {
  if (is_const_value(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return constant(value(a) - value(b));
  if (is_const_value(a, 0.0)) return neg(b);
  return push(Op::Sub, a.index(), b.index(), -1, value(a) - value(b));
}

ScalarNode Tape::mul(ScalarNode a, ScalarNode b) {
  if (is_const_value(a, 0.0) || is_const_value(b, 0.0)) return constant(0.0);
  if (is_const_value(a, 1.0)) return b;
  if (is_const_value(b, 1.0)) return a;
  if (is_const(a) && is_const(b)) return constant(value(a) * value(b));
  return push(Op::Mul, a.index(), b.index(), -1, value(a) * value(b));
}

ScalarNode Tape::div(ScalarNode a, ScalarNode b) {
  if (is_const_value(a, 0.0)) return constant(0.0);
  if (is_const_value(b, 1.0)) return a;
  if (is_const(a) && is_const(b)) return constant(value(a) / value(b));
  return push(Op::Div, a.index(), b.index(), -1, value(a) / value(b));
}

ScalarNode Tape::neg(ScalarNode a) {
  if (is_const(a)) return constant(-value(a));
  return push(Op::Neg, a.index(), -1, -1, -value(a));
}

ScalarNode Tape::mul_add(ScalarNode a, ScalarNode b, ScalarNode c) {
  if (is_const_value(a, 0.0) || is_const_value(b, 0.0)) return c;
  if (is_const_value(c, 0.0)) return mul(a, b);
  if (is_const_value(a, 1.0)) return add(b, c);
  if (is_const_value(b, 1.0)) return add(a, c);
  if (is_const(a) && is_const(b) && is_const(c))
    return constant(value(a) * value(b) + value(c));
  return push(Op::MulAdd, a.index(), b.index(), c.index(),
              value(a) * value(b) + value(c));
}

ScalarNode Tape::abs(ScalarNode a) {
  if (is_const(a)) return constant(std::abs(value(a)));
  return push(Op::Abs, a.index(), -1, -1, std::abs(value(a)));
}

ScalarNode Tape::tanh(ScalarNode a) {
  if (is_const(a)) return constant(std::tanh(value(a)));
  return push(Op::Tanh, a.index(), -1, -1, std::tanh(value(a)));
}

ScalarNode Tape::sigmoid(ScalarNode a) {
  const double s = 1.0 / (1.0 + std::exp(-value(a)));
  if (is_const(a)) return constant(s);
  return push(Op::Sigmoid, a.index(), -1, -1, s);
}

ScalarNode Tape::sin(ScalarNode a) {
  if (is_const(a)) return constant(std::sin(value(a)));
  return push(Op::Sin, a.index(), -1, -1, std::sin(value(a)));
}

ScalarNode Tape::cos(ScalarNode a) {
  if (is_const(a)) return constant(std::cos(value(a)));
  return push(Op::Cos, a.index(), -1, -1, std::cos(value(a)));
}

ScalarNode Tape::exp(ScalarNode a) {
  if (is_const(a)) return constant(std::exp(value(a)));
  return push(Op::Exp, a.index(), -1, -1, std::exp(value(a)));
}

ScalarNode Tape::pow(ScalarNode a, double exponent) {
  if (is_const(a)) return constant(std::pow(value(a), exponent));
  ScalarNode e = constant(exponent);
  return push(Op::Pow, a.index(), e.index(), -1, std::pow(value(a), exponent));
}

ScalarNode Tape::activation_d1(Op activation, ScalarNode a, ScalarNode act) {
  const double t = value(act);
  switch (activation) {
    case Op::Tanh:
      return push(Op::TanhP, a.index(), act.index(), -1, 1.0 - t * t);
    case Op::Sigmoid:
      return push(Op::SigmoidP, a.index(), act.index(), -1, t * (1.0 - t));
    default:
      throw AutodiffError("activation_d1: unsupported activation op");
  }
}

ScalarNode Tape::activation_d2(Op activation, ScalarNode a, ScalarNode act) {
  const double t = value(act);
  switch (activation) {
    case Op::Tanh:
      return push(Op::TanhPP, a.index(), act.index(), -1,
                  -2.0 * t * (1.0 - t * t));
    case Op::Sigmoid:
      return push(Op::SigmoidPP, a.index(), act.index(), -1,
                  t * (1.0 - t) * (1.0 - 2.0 * t));
    default:
      throw AutodiffError("activation_d2: unsupported activation op");
  }
}

double Tape::eval_node(std::size_t i) const {
  const auto va = [&](std::size_t k) { return val_[a_[k]]; };
  const auto vb = [&](std::size_t k) { return val_[b_[k]]; };
  switch (op_[i]) {
    case Op::Const:
    case Op::Var: return val_[i];
    case Op::Add: return va(i) + vb(i);
    case Op::Sub: return va(i) - vb(i);
    case Op::Mul: return va(i) * vb(i);
    case Op::Div: return va(i) / vb(i);
    case Op::Neg: return -va(i);
    case Op::MulAdd: return va(i) * vb(i) + val_[c_[i]];
    case Op::Abs: return std::abs(va(i));
    case Op::Tanh: return std::tanh(va(i));
    case Op::TanhP: {
      const double t = vb(i);
      return 1.0 - t * t;
    }
    case Op::TanhPP: {
      const double t = vb(i);
      return -2.0 * t * (1.0 - t * t);
    }
    case Op::Sigmoid: return 1.0 / (1.0 + std::exp(-va(i)));
    case Op::SigmoidP: {
      const double s = vb(i);
      return s * (1.0 - s);
    }
    case Op::SigmoidPP: {
      const double s = vb(i);
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    }
    case Op::Sin: return std::sin(va(i));
    case Op::Cos: return std::cos(va(i));
    case Op::Exp: return std::exp(va(i));
    case Op::Pow: return std::pow(va(i), vb(i));
  }
  return 0.0;
}

void Tape::forward() {
  const std::size_t n = op_.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (op_[i] == Op::Const || op_[i] == Op::Var) continue;
    val_[i] = eval_node(i);
  }
}

const std::vector<double>& Tape::reverse(ScalarNode of) {
  const std::size_t n = op_.size();
  adj_.assign(n, 0.0);
  adj_[of.index()] = 1.0;
  for (std::size_t ri = of.index() + 1; ri-- > 0;) {
    const double w = adj_[ri];
    if (w == 0.0) continue;
    if (!std::isfinite(w))
      throw AutodiffError(std::string("non-finite adjoint at node ") +
                          std::to_string(ri) + " (" + op_name(op_[ri]) + ")");
    const std::int32_t ia = a_[ri];
    const std::int32_t ib = b_[ri];
    switch (op_[ri]) {
      case Op::Const:
      case Op::Var: break;
      case Op::Add:
        adj_[ia] += w;
        adj_[ib] += w;
        break;
      case Op::Sub:
        adj_[ia] += w;
        adj_[ib] -= w;
        break;
      case Op::Mul:
        adj_[ia] += w * val_[ib];
        adj_[ib] += w * val_[ia];
        break;
      case Op::Div:
        adj_[ia] += w / val_[ib];
        adj_[ib] -= w * val_[ri] / val_[ib];
        break;
      case Op::Neg: adj_[ia] -= w; break;
      case Op::MulAdd:
        adj_[ia] += w * val_[ib];
        adj_[ib] += w * val_[ia];
        adj_[c_[ri]] += w;
        break;
      case Op::Abs:
        adj_[ia] += (val_[ia] < 0.0 ? -w : (val_[ia] > 0.0 ? w : 0.0));
        break;
      case Op::Tanh: {
        const double t = val_[ri];
        adj_[ia] += w * (1.0 - t * t);
        break;
      }
      case Op::TanhP: {
        // d/da sech^2(a) = -2 tanh(a) sech^2(a)
        const double t = val_[ib];
        adj_[ia] += w * (-2.0 * t * val_[ri]);
        break;
      }
      case Op::TanhPP: {
        // d/da tanh''(a) = tanh'''(a) = -2 sech^2(a) (sech^2(a) - 2 tanh^2(a))
        const double t = val_[ib];
        const double s = 1.0 - t * t;
        adj_[ia] += w * (-2.0 * s * (s - 2.0 * t * t));
        break;
      }
      case Op::Sigmoid: {
        const double s = val_[ri];
        adj_[ia] += w * s * (1.0 - s);
        break;
      }
      case Op::SigmoidP: {
        const double s = val_[ib];
        adj_[ia] += w * s * (1.0 - s) * (1.0 - 2.0 * s);
        break;
      }
      case Op::SigmoidPP: {
        const double s = val_[ib];
        adj_[ia] += w * s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
        break;
      }
      case Op::Sin: adj_[ia] += w * std::cos(val_[ia]); break;
      case Op::Cos: adj_[ia] -= w * std::sin(val_[ia]); break;
      case Op::Exp: adj_[ia] += w * val_[ri]; break;
      case Op::Pow: {
        const double e = val_[ib];
        adj_[ia] += w * e * std::pow(val_[ia], e - 1.0);
        break;
      }
    }
  }
  return adj_;
}

std::vector<double> reverse_gradient(ScalarNode loss,
                                     std::span<const ScalarNode> params) {
  Tape* tape = loss.tape();
  if (!std::isfinite(loss.value()))
    throw AutodiffError("reverse_gradient: non-finite loss value");
  tape->reverse(loss);
  std::vector<double> grad(params.size());
  for (std::size_t m = 0; m < params.size(); ++m)
    grad[m] = tape->adjoint(params[m]);
  return grad;
}

}  // namespace dapinn
