#include "dapinn/program.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace dapinn {

namespace {
constexpr std::size_t C = BatchedProgram::kChunk;
}

BatchedProgram::BatchedProgram(const Tape& tape,
                               std::span<const ScalarNode> shared_leaves,
                               std::span<const ScalarNode> point_leaves,
                               std::span<const ScalarNode> outputs) {
  const std::size_t n = tape.size();
  op_.assign(tape.ops().begin(), tape.ops().end());
  a_.assign(tape.operand_a().begin(), tape.operand_a().end());
  b_.assign(tape.operand_b().begin(), tape.operand_b().end());
  c_.assign(tape.operand_c().begin(), tape.operand_c().end());
  val_.assign(n * C, 0.0);
  adj_.assign(n * C, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    if (op_[i] == Op::Const) {
      const double v = tape.values()[i];
      for (std::size_t l = 0; l < C; ++l) val_[i * C + l] = v;
    }
  }
  for (const ScalarNode& s : shared_leaves) shared_.push_back(s.index());
  for (const ScalarNode& s : point_leaves) point_.push_back(s.index());
  for (const ScalarNode& s : outputs) outputs_.push_back(s.index());
}

void BatchedProgram::set_points(std::span<const double> inputs,
                                std::size_t n_points) {
  if (inputs.size() != n_points * point_.size())
    throw std::invalid_argument("BatchedProgram::set_points: size mismatch");
  inputs_.assign(inputs.begin(), inputs.end());
  n_points_ = n_points;
}

void BatchedProgram::set_shared(std::span<const double> values) {
  if (values.size() != shared_.size())
    throw std::invalid_argument("BatchedProgram::set_shared: size mismatch");
  for (std::size_t m = 0; m < shared_.size(); ++m) {
    double* row = &val_[static_cast<std::size_t>(shared_[m]) * C];
    const double v = values[m];
    for (std::size_t l = 0; l < C; ++l) row[l] = v;
  }
}

void BatchedProgram::bind_chunk(std::size_t base, std::size_t lanes) {
  const std::size_t L = point_.size();
  for (std::size_t j = 0; j < L; ++j) {
    double* row = &val_[static_cast<std::size_t>(point_[j]) * C];
    for (std::size_t l = 0; l < C; ++l) {
      // tail lanes replicate the last real point so every lane computes
      // with valid data; tail results are never accumulated.
      const std::size_t p = base + (l < lanes ? l : lanes - 1);
      row[l] = inputs_[p * L + j];
    }
  }
}

void BatchedProgram::run_forward(bool zero_adj) {
  const std::size_t n = op_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double* v = &val_[i * C];
    const double* x = a_[i] >= 0 ? &val_[static_cast<std::size_t>(a_[i]) * C] : nullptr;
    const double* y = b_[i] >= 0 ? &val_[static_cast<std::size_t>(b_[i]) * C] : nullptr;
    switch (op_[i]) {
      case Op::Const:
      case Op::Var:
        break;
      case Op::Add:
        for (std::size_t l = 0; l < C; ++l) v[l] = x[l] + y[l];
        break;
      case Op::Sub:
        for (std::size_t l = 0; l < C; ++l) v[l] = x[l] - y[l];
        break;
      case Op::Mul:
        for (std::size_t l = 0; l < C; ++l) v[l] = x[l] * y[l];
        break;
      case Op::Div:
        for (std::size_t l = 0; l < C; ++l) v[l] = x[l] / y[l];
        break;
      case Op::Neg:
        for (std::size_t l = 0; l < C; ++l) v[l] = -x[l];
        break;
      case Op::MulAdd: {
        const double* z = &val_[static_cast<std::size_t>(c_[i]) * C];
        for (std::size_t l = 0; l < C; ++l) v[l] = x[l] * y[l] + z[l];
        break;
      }
      case Op::Abs:
        for (std::size_t l = 0; l < C; ++l) v[l] = std::abs(x[l]);
        break;
      case Op::Tanh:
        for (std::size_t l = 0; l < C; ++l) v[l] = std::tanh(x[l]);
        break;
      case Op::TanhP:
        for (std::size_t l = 0; l < C; ++l) v[l] = 1.0 - y[l] * y[l];
        break;
      case Op::TanhPP:
        for (std::size_t l = 0; l < C; ++l)
          v[l] = -2.0 * y[l] * (1.0 - y[l] * y[l]);
        break;
      case Op::Sigmoid:
        for (std::size_t l = 0; l < C; ++l) v[l] = 1.0 / (1.0 + std::exp(-x[l]));
        break;
      case Op::SigmoidP:
        for (std::size_t l = 0; l < C; ++l) v[l] = y[l] * (1.0 - y[l]);
        break;
      case Op::SigmoidPP:
        for (std::size_t l = 0; l < C; ++l)
          v[l] = y[l] * (1.0 - y[l]) * (1.0 - 2.0 * y[l]);
        break;
      case Op::Sin:
        for (std::size_t l = 0; l < C; ++l) v[l] = std::sin(x[l]);
        break;
      case Op::Cos:
        for (std::size_t l = 0; l < C; ++l) v[l] = std::cos(x[l]);
        break;
      case Op::Exp:
        for (std::size_t l = 0; l < C; ++l) v[l] = std::exp(x[l]);
        break;
      case Op::Pow:
        for (std::size_t l = 0; l < C; ++l) v[l] = std::pow(x[l], y[l]);
        break;
    }
    if (zero_adj) {
      // reverse sweeps expect zeroed adjoints; clear while the line is hot
      double* ad = &adj_[i * C];
      for (std::size_t l = 0; l < C; ++l) ad[l] = 0.0;
    }
  }
}

void BatchedProgram::run_reverse() {
  for (std::size_t i = op_.size(); i-- > 0;) {
    const double* w = &adj_[i * C];
    const std::int32_t ia = a_[i];
    const std::int32_t ib = b_[i];
    double* aa = ia >= 0 ? &adj_[static_cast<std::size_t>(ia) * C] : nullptr;
    double* ab = ib >= 0 ? &adj_[static_cast<std::size_t>(ib) * C] : nullptr;
    const double* va = ia >= 0 ? &val_[static_cast<std::size_t>(ia) * C] : nullptr;
    const double* vb = ib >= 0 ? &val_[static_cast<std::size_t>(ib) * C] : nullptr;
    const double* vo = &val_[i * C];
    switch (op_[i]) {
      case Op::Const:
      case Op::Var:
        break;
      case Op::Add:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l];
        for (std::size_t l = 0; l < C; ++l) ab[l] += w[l];
        break;
      case Op::Sub:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l];
        for (std::size_t l = 0; l < C; ++l) ab[l] -= w[l];
        break;
      case Op::Mul:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * vb[l];
        for (std::size_t l = 0; l < C; ++l) ab[l] += w[l] * va[l];
        break;
      case Op::Div:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] / vb[l];
        for (std::size_t l = 0; l < C; ++l) ab[l] -= w[l] * vo[l] / vb[l];
        break;
      case Op::Neg:
        for (std::size_t l = 0; l < C; ++l) aa[l] -= w[l];
        break;
      case Op::MulAdd: {
        double* ac = &adj_[static_cast<std::size_t>(c_[i]) * C];
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * vb[l];
        for (std::size_t l = 0; l < C; ++l) ab[l] += w[l] * va[l];
        for (std::size_t l = 0; l < C; ++l) ac[l] += w[l];
        break;
      }
      case Op::Abs:
        for (std::size_t l = 0; l < C; ++l)
          aa[l] += va[l] < 0.0 ? -w[l] : (va[l] > 0.0 ? w[l] : 0.0);
        break;
      case Op::Tanh:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * (1.0 - vo[l] * vo[l]);
        break;
      case Op::TanhP:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * (-2.0 * vb[l] * vo[l]);
        break;
      case Op::TanhPP:
        for (std::size_t l = 0; l < C; ++l) {
          const double s = 1.0 - vb[l] * vb[l];
          aa[l] += w[l] * (-2.0 * s * (s - 2.0 * vb[l] * vb[l]));
        }
        break;
      case Op::Sigmoid:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * vo[l] * (1.0 - vo[l]);
        break;
      case Op::SigmoidP:
        for (std::size_t l = 0; l < C; ++l)
          aa[l] += w[l] * vb[l] * (1.0 - vb[l]) * (1.0 - 2.0 * vb[l]);
        break;
      case Op::SigmoidPP:
        for (std::size_t l = 0; l < C; ++l)
          aa[l] += w[l] * vb[l] * (1.0 - vb[l]) *
                   (1.0 - 6.0 * vb[l] + 6.0 * vb[l] * vb[l]);
        break;
      case Op::Sin:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * std::cos(va[l]);
        break;
      case Op::Cos:
        for (std::size_t l = 0; l < C; ++l) aa[l] -= w[l] * std::sin(va[l]);
        break;
      case Op::Exp:
        for (std::size_t l = 0; l < C; ++l) aa[l] += w[l] * vo[l];
        break;
      case Op::Pow:
        for (std::size_t l = 0; l < C; ++l)
          aa[l] += w[l] * vb[l] * std::pow(va[l], vb[l] - 1.0);
        break;
    }
  }
}

void BatchedProgram::forward_sums(std::span<double> out_sums) {
  if (out_sums.size() != outputs_.size())
    throw std::invalid_argument("forward_sums: output count mismatch");
  for (auto& s : out_sums) s = 0.0;
  for (std::size_t base = 0; base < n_points_; base += C) {
    const std::size_t lanes = std::min(C, n_points_ - base);
    bind_chunk(base, lanes);
    run_forward(false);
    for (std::size_t k = 0; k < outputs_.size(); ++k) {
      const double* row = &val_[static_cast<std::size_t>(outputs_[k]) * C];
      double s = 0.0;
      for (std::size_t l = 0; l < lanes; ++l) s += row[l];
      out_sums[k] += s;
    }
  }
}

void BatchedProgram::forward_each(std::span<double> out) {
  const std::size_t K = outputs_.size();
  if (out.size() != n_points_ * K)
    throw std::invalid_argument("forward_each: output buffer mismatch");
  for (std::size_t base = 0; base < n_points_; base += C) {
    const std::size_t lanes = std::min(C, n_points_ - base);
    bind_chunk(base, lanes);
    run_forward(false);
    for (std::size_t k = 0; k < K; ++k) {
      const double* row = &val_[static_cast<std::size_t>(outputs_[k]) * C];
      for (std::size_t l = 0; l < lanes; ++l) out[(base + l) * K + k] = row[l];
    }
  }
}

double BatchedProgram::forward_reverse(std::span<double> grad, double scale) {
  if (grad.size() != shared_.size())
    throw std::invalid_argument("forward_reverse: grad size mismatch");
  double total = 0.0;
  const std::int32_t out = outputs_[0];
  for (std::size_t base = 0; base < n_points_; base += C) {
    const std::size_t lanes = std::min(C, n_points_ - base);
    bind_chunk(base, lanes);
    run_forward(true);
    const double* vrow = &val_[static_cast<std::size_t>(out) * C];
    double s = 0.0;
    for (std::size_t l = 0; l < lanes; ++l) s += vrow[l];
    total += s;
    double* orow = &adj_[static_cast<std::size_t>(out) * C];
    for (std::size_t l = 0; l < lanes; ++l) orow[l] = 1.0;
    run_reverse();
    for (std::size_t m = 0; m < shared_.size(); ++m) {
      const double* row = &adj_[static_cast<std::size_t>(shared_[m]) * C];
      double g = 0.0;
      for (std::size_t l = 0; l < C; ++l) g += row[l];
      grad[m] += scale * g;
    }
  }
  return total;
}

}  // namespace dapinn
