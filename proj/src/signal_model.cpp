#include "rhlearn/signal_model.hpp"

#include <iostream>

namespace rhlearn {

SignalModel theta_to_model(const Theta& theta, int state_dim, int input_dim) {
  if (state_dim < 1 || input_dim < 1) throw DimensionMismatch("model dimensions must be positive");
  const long expected = static_cast<long>(state_dim) * (state_dim + input_dim);
  if (theta.size() != expected) {
    throw DimensionMismatch("theta length " + std::to_string(theta.size()) +
                            " does not match dimensions (" + std::to_string(state_dim) + ", " +
                            std::to_string(input_dim) + ")");
  }
  SignalModel m;
  m.A = Eigen::Map<const Matrix>(theta.data(), state_dim, state_dim);
  m.B = Eigen::Map<const Matrix>(theta.data() + state_dim * state_dim, state_dim, input_dim);
  return m;
}

Theta model_to_theta(const SignalModel& m) {
  if (m.A.rows() != m.A.cols()) throw DimensionMismatch("A must be square");
  if (m.B.rows() != m.A.rows()) throw DimensionMismatch("B row count must match A");
  const int n = m.state_dim();
  const int q = m.input_dim();
  Theta t(n * (n + q));
  Eigen::Map<Matrix>(t.data(), n, n) = m.A;
  Eigen::Map<Matrix>(t.data() + n * n, n, q) = m.B;
  return t;
}

PredictorMaps build_predictor_maps(const SignalModel& m, int horizon) {
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  if (m.A.rows() != m.A.cols() || m.B.rows() != m.A.rows()) {
    throw DimensionMismatch("inconsistent model dimensions");
  }
  PredictorMaps maps;
  maps.A_pow.reserve(horizon + 1);
  maps.B_pow.reserve(horizon);
  maps.A_pow.push_back(Matrix::Identity(m.A.rows(), m.A.cols()));
  for (int i = 0; i < horizon; ++i) {
    maps.B_pow.push_back(maps.A_pow.back() * m.B);
    maps.A_pow.push_back(m.A * maps.A_pow.back());
  }
  return maps;
}

Vector predict(const PredictorMaps& maps, const Vector& x0,
               const std::vector<Vector>& inputs, int steps) {
  if (steps < 0 || steps > maps.horizon()) {
    throw HorizonExceeded("prediction step " + std::to_string(steps) + " exceeds horizon " +
                          std::to_string(maps.horizon()));
  }
  if (static_cast<int>(inputs.size()) != steps) {
    throw DimensionMismatch("predict needs exactly one input per step");
  }
  if (x0.size() != maps.state_dim()) throw DimensionMismatch("state dimension mismatch");
  Vector x = maps.A_pow[steps] * x0;
  for (int l = 0; l < steps; ++l) {
    x += maps.B_pow[steps - 1 - l] * inputs[l];
  }
  return x;
}

Matrix controllability_matrix(const SignalModel& m) {
  const int n = m.state_dim();
  const int q = m.input_dim();
  Matrix C(n, n * q);
  Matrix block = m.B;
  for (int i = 0; i < n; ++i) {
    C.middleCols(i * q, q) = block;
    if (i + 1 < n) block = m.A * block;
  }
  return C;
}

bool is_controllable(const SignalModel& m, double tol) {
  return numerical_rank(controllability_matrix(m), tol) == m.state_dim();
}

SignalModel blend(const SignalModel& a, const SignalModel& b, double lambda) {
  if (a.A.rows() != b.A.rows() || a.A.cols() != b.A.cols() || a.B.rows() != b.B.rows() ||
      a.B.cols() != b.B.cols()) {
    throw DimensionMismatch("blend requires models of identical dimensions");
  }
  if (lambda < 0.0 || lambda >= 1.0) throw ValidationError("lambda must lie in [0, 1)");
  SignalModel out;
  out.A = (1.0 - lambda) * a.A + lambda * b.A;
  out.B = (1.0 - lambda) * a.B + lambda * b.B;
  return out;
}

RestorationResult restore_controllability(const Theta& candidate, const Theta& previous,
                                          int state_dim, int input_dim, double lambda_max,
                                          double tol) {
  if (lambda_max <= 0.0 || lambda_max >= 1.0) {
    throw ValidationError("lambda_max must lie in (0, 1)");
  }
  const SignalModel cand = theta_to_model(candidate, state_dim, input_dim);
  if (is_controllable(cand, tol)) {
    return {candidate, 0.0};
  }
  const SignalModel prev = theta_to_model(previous, state_dim, input_dim);
  const int grid = 2 * state_dim * state_dim + 1;
  for (int i = 1; i <= grid; ++i) {
    const double lambda = static_cast<double>(i) * lambda_max / (grid + 1);
    const SignalModel mixed = blend(cand, prev, lambda);
    if (is_controllable(mixed, tol)) {
      return {model_to_theta(mixed), lambda};
    }
  }
  throw RestorationFailed("no lambda grid point restored controllability");
}

Theta canonical_theta(int state_dim, int input_dim, double scale) {
  if (state_dim < 1 || input_dim < 1) throw DimensionMismatch("model dimensions must be positive");
  if (input_dim > state_dim) {
    std::cerr << "rhlearn: warning: input dimension " << input_dim << " exceeds state dimension "
              << state_dim << "; the controllability grid is sized by the state dimension\n";
  }
  SignalModel m;
  m.A = Matrix::Zero(state_dim, state_dim);
  for (int i = 0; i + input_dim < state_dim; ++i) {
    m.A(i, i + input_dim) = scale;
  }
  m.B = Matrix::Zero(state_dim, input_dim);
  const int rows = std::min(state_dim, input_dim);
  for (int i = 0; i < rows; ++i) {
    m.B(state_dim - rows + i, input_dim - rows + i) = scale;
  }
  return model_to_theta(m);
}

}  // namespace rhlearn
