#pragma once

#include <deque>

#include "rhlearn/signal_model.hpp"

namespace rhlearn {

/// Stacking configuration: the last `m` raw outputs (inputs) form one lifted
/// state (input) vector. m is the assumed upper bound on the plant order.
struct LiftingConfig {
  int m = 1;           // stacking depth
  int output_dim = 1;  // raw output dimension p
  int input_dim = 1;   // raw input dimension q

  int lifted_state_dim() const { return m * output_dim; }
  int lifted_input_dim() const { return m * input_dim; }
  int chain_len() const { return m - 1; }
  int augmented_dim() const { return lifted_state_dim() + chain_len() * input_dim; }

  void validate() const;
};

/// Ring buffers of the most recent raw outputs and inputs. Reads past the
/// recorded history return exact zeros, matching the convention that all
/// signals vanish for negative time.
class HistoryBuffer {
 public:
  HistoryBuffer(int output_dim, int input_dim, int depth);

  void push_output(const Vector& y);
  void push_input(const Vector& v);

  /// lag 0 is the most recently pushed sample.
  Vector output_at_lag(int lag) const;
  Vector input_at_lag(int lag) const;

  int output_dim() const { return output_dim_; }
  int input_dim() const { return input_dim_; }

 private:
  int output_dim_;
  int input_dim_;
  int depth_;
  std::deque<Vector> outputs_;  // front = newest
  std::deque<Vector> inputs_;
};

/// Stacked output vector [y(k); y(k-1); ...; y(k-m+1)], newest first.
Vector lift_output(const HistoryBuffer& buf, int m);

/// Stacked input vector [v(k); v(k-1); ...; v(k-m+1)], newest first.
Vector lift_input(const HistoryBuffer& buf, int m);

/// Signal model with shift states appended so that the input is the raw
/// v(k) instead of the stacked input vector. Layout of the augmented state:
/// [lifted x; zeta_1; ...; zeta_{m-1}] with zeta_l(k) = v(k - m + l).
struct AugmentedModel {
  SignalModel model;
  int lifted_dim = 0;
  int chain_len = 0;
  int raw_input_dim = 0;
};

AugmentedModel augment_model(const SignalModel& m, const LiftingConfig& cfg);

/// First raw input block of a stacked or augmented-model input vector.
Vector extract_raw_input(const Vector& u, const LiftingConfig& cfg);

}  // namespace rhlearn
