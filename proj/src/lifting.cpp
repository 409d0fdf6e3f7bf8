#include "rhlearn/lifting.hpp"

namespace rhlearn {

void LiftingConfig::validate() const {
  if (m < 1) throw ValidationError("lift.m must be at least 1");
  if (output_dim < 1 || input_dim < 1) {
    throw ValidationError("raw signal dimensions must be positive");
  }
}

HistoryBuffer::HistoryBuffer(int output_dim, int input_dim, int depth)
    : output_dim_(output_dim), input_dim_(input_dim), depth_(depth) {
  if (output_dim < 1 || input_dim < 1 || depth < 1) {
    throw ValidationError("history buffer dimensions must be positive");
  }
}

void HistoryBuffer::push_output(const Vector& y) {
  if (y.size() != output_dim_) throw DimensionMismatch("output sample has wrong dimension");
  outputs_.push_front(y);
  if (static_cast<int>(outputs_.size()) > depth_) outputs_.pop_back();
}

void HistoryBuffer::push_input(const Vector& v) {
  if (v.size() != input_dim_) throw DimensionMismatch("input sample has wrong dimension");
  inputs_.push_front(v);
  if (static_cast<int>(inputs_.size()) > depth_) inputs_.pop_back();
}

Vector HistoryBuffer::output_at_lag(int lag) const {
  if (lag < 0) throw ValidationError("lag must be nonnegative");
  if (lag >= static_cast<int>(outputs_.size())) return Vector::Zero(output_dim_);
  return outputs_[lag];
}

Vector HistoryBuffer::input_at_lag(int lag) const {
  if (lag < 0) throw ValidationError("lag must be nonnegative");
  if (lag >= static_cast<int>(inputs_.size())) return Vector::Zero(input_dim_);
  return inputs_[lag];
}

Vector lift_output(const HistoryBuffer& buf, int m) {
  if (m < 1) throw ValidationError("stacking depth must be at least 1");
  Vector x(m * buf.output_dim());
  for (int j = 0; j < m; ++j) {
    x.segment(j * buf.output_dim(), buf.output_dim()) = buf.output_at_lag(j);
  }
  return x;
}

Vector lift_input(const HistoryBuffer& buf, int m) {
  if (m < 1) throw ValidationError("stacking depth must be at least 1");
  Vector u(m * buf.input_dim());
  for (int j = 0; j < m; ++j) {
    u.segment(j * buf.input_dim(), buf.input_dim()) = buf.input_at_lag(j);
  }
  return u;
}

AugmentedModel augment_model(const SignalModel& m, const LiftingConfig& cfg) {
  cfg.validate();
  const int n = cfg.lifted_state_dim();
  const int q = cfg.input_dim;
  if (m.state_dim() != n || m.input_dim() != cfg.lifted_input_dim()) {
    throw DimensionMismatch("model dimensions do not match the lifting configuration");
  }

  AugmentedModel out;
  out.lifted_dim = n;
  out.chain_len = cfg.chain_len();
  out.raw_input_dim = q;

  const int d = cfg.augmented_dim();
  Matrix At = Matrix::Zero(d, d);
  Matrix Bt = Matrix::Zero(d, q);

  At.topLeftCorner(n, n) = m.A;
  // B block j of the lifted model multiplies v(k-j); for j >= 1 that value
  // lives in chain state zeta_{m-j}.
  Bt.topRows(n) = m.B.middleCols(0, q);
  for (int j = 1; j <= out.chain_len; ++j) {
    const int col = n + (out.chain_len - j) * q;  // zeta_{m-j} block
    At.block(0, col, n, q) = m.B.middleCols(j * q, q);
  }
  // Shift chain: zeta_l+ = zeta_{l+1}, last element is fed by v.
  for (int l = 0; l + 1 < out.chain_len; ++l) {
    At.block(n + l * q, n + (l + 1) * q, q, q) = Matrix::Identity(q, q);
  }
  if (out.chain_len > 0) {
    Bt.bottomRows(q) = Matrix::Identity(q, q);
  }

  out.model = SignalModel{std::move(At), std::move(Bt)};
  return out;
}

Vector extract_raw_input(const Vector& u, const LiftingConfig& cfg) {
  const int q = cfg.input_dim;
  if (u.size() < q || u.size() % q != 0) {
    throw DimensionMismatch("input vector is not a stack of raw input blocks");
  }
  return u.head(q);
}

}  // namespace rhlearn
