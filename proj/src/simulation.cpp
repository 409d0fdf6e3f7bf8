#include "rhlearn/simulation.hpp"

#include <cmath>

namespace rhlearn {

LinearPlant::LinearPlant(Matrix F, Matrix G, Matrix H, Vector z0)
    : F_(std::move(F)), G_(std::move(G)), H_(std::move(H)), z0_(std::move(z0)) {
  const auto n = F_.rows();
  if (F_.cols() != n) throw DimensionMismatch("F must be square");
  if (G_.rows() != n) throw DimensionMismatch("G rows must match F");
  if (H_.cols() != n) throw DimensionMismatch("H cols must match F");
  if (z0_.size() != n) throw DimensionMismatch("initial state must match F");
}

Vector LinearPlant::step(const Vector& state, const Vector& input) const {
  if (state.size() != state_dim() || input.size() != input_dim()) {
    throw DimensionMismatch("plant step dimension mismatch");
  }
  return F_ * state + G_ * input;
}

Vector LinearPlant::output(const Vector& state) const {
  if (state.size() != state_dim()) throw DimensionMismatch("plant output dimension mismatch");
  return H_ * state;
}

RobotArmPlant::RobotArmPlant(Vector x0) : x0_(std::move(x0)) {
  if (x0_.size() != 3) throw DimensionMismatch("robot arm state has dimension 3");
}

Vector RobotArmPlant::step(const Vector& state, const Vector& input) const {
  if (state.size() != 3 || input.size() != 1) {
    throw DimensionMismatch("robot arm step dimension mismatch");
  }
  constexpr double h = 0.01;
  const double x1 = state(0), x2 = state(1), x3 = state(2), u = input(0);
  Vector next(3);
  next(0) = x1 + h * x2;
  next(1) = x2 + h * (36.4 * x3 - 1.7 * x2 - 1309.0 * std::sin(x1));
  next(2) = x3 + h * (-1000.0 * x3 - 3.6 * x2 + 100.0 * u);
  return next;
}

const char* const kPlantLinearBenchmark = "linear_sec6a";
const char* const kPlantRobotArm = "robot_arm";

std::unique_ptr<Plant> make_builtin_plant(const std::string& kind, const Vector& initial_state) {
  if (kind == kPlantLinearBenchmark) {
    Matrix F(3, 3);
    F << 0.0, 1.0, 0.1,
         0.0, 1.02, 0.0,
         0.0, 0.0, 0.92;
    Matrix G(3, 1);
    G << 0.0, 1.0, 0.0;
    Matrix H(1, 3);
    H << 1.0, 0.0, 1.0;
    Vector z0 = initial_state;
    if (z0.size() == 0) {
      z0 = Vector(3);
      z0 << 0.1, 0.1, -10.0;
    }
    return std::make_unique<LinearPlant>(F, G, H, z0);
  }
  if (kind == kPlantRobotArm) {
    Vector x0 = initial_state;
    if (x0.size() == 0) {
      x0 = Vector(3);
      x0 << 5.0, -5.0, 1.0;
    }
    return std::make_unique<RobotArmPlant>(x0);
  }
  throw ValidationError("unknown builtin plant '" + kind + "'");
}

SignalModel exact_signal_model(const LinearPlant& plant, int m) {
  if (m < 1) throw ValidationError("stacking depth must be at least 1");
  const Matrix& F = plant.F();
  const Matrix& G = plant.G();
  const Matrix& H = plant.H();
  const int n = plant.state_dim();
  const int p = plant.output_dim();
  const int q = plant.input_dim();

  // x(k) = O z(k-m+1) + T u(k-1): O stacks H F^{m-1} .. H (newest output
  // first), T holds the Markov parameters of the intermediate inputs.
  Matrix O(m * p, n);
  Matrix powF = Matrix::Identity(n, n);
  std::vector<Matrix> Fpow(m);
  for (int i = 0; i < m; ++i) {
    Fpow[i] = powF;
    powF = F * powF;
  }
  for (int j = 0; j < m; ++j) {
    O.middleRows(j * p, p) = H * Fpow[m - 1 - j];
  }
  Matrix T = Matrix::Zero(m * p, m * q);
  for (int j = 0; j < m; ++j) {
    for (int l = j; l <= m - 2; ++l) {
      T.block(j * p, l * q, p, q) = H * Fpow[l - j] * G;
    }
  }

  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(O);
  if (cod.rank() < n) {
    throw ValidationError("plant is not observable at this stacking depth");
  }
  const Matrix Opinv = cod.pseudoInverse();
  const Matrix AF = O * F * Opinv;  // A = O F O^+

  SignalModel sm;
  sm.A = AF;
  sm.B = Matrix::Zero(m * p, m * q);
  // u(k) block l is v(k-l). Shifting the window by one step moves the
  // coefficient of each intermediate input one block to the right; the
  // newest input enters through T, the oldest through O G.
  const Matrix AFT = AF * T;
  if (m == 1) {
    sm.B = O * G;
  } else {
    sm.B.leftCols(q) = T.leftCols(q);
    for (int l = 1; l <= m - 2; ++l) {
      sm.B.middleCols(l * q, q) = T.middleCols(l * q, q) - AFT.middleCols((l - 1) * q, q);
    }
    sm.B.rightCols(q) = O * G - AFT.middleCols((m - 2) * q, q);
  }
  return sm;
}

TrajectoryLog run_closed_loop(const Plant& plant, const LiftingConfig& lift, Estimator& est,
                              const RhcConfig& rhc, int steps, const LogSink& sink) {
  lift.validate();
  if (steps < 1) throw ValidationError("step count must be at least 1");
  if (lift.output_dim != plant.output_dim() || lift.input_dim != plant.input_dim()) {
    throw DimensionMismatch("lifting configuration does not match the plant");
  }
  if (est.config().state_dim != lift.lifted_state_dim() ||
      est.config().input_dim != lift.lifted_input_dim()) {
    throw DimensionMismatch("estimator dimensions do not match the lifting configuration");
  }
  rhc.validate(lift.augmented_dim(), lift.input_dim);

  HistoryBuffer buf(lift.output_dim, lift.input_dim, lift.m + 1);
  Vector z = plant.initial_state();
  TrajectoryLog log;
  log.records.reserve(steps);

  for (int k = 0; k < steps; ++k) {
    const Vector y = plant.output(z);
    buf.push_output(y);
    const Vector x = lift_output(buf, lift.m);
    const Vector u_prev = lift_input(buf, lift.m);

    const EstimatorDiagnostics diag = est.update(x, u_prev);

    const AugmentedModel aug = augment_model(est.model(), lift);
    const PredictorMaps maps = build_predictor_maps(aug.model, rhc.horizon);

    Vector x_aug(lift.augmented_dim());
    x_aug.head(lift.lifted_state_dim()) = x;
    // zeta_l(k) = v(k-m+l); the most recent pushed input is v(k-1) at lag 0.
    for (int l = 1; l <= lift.chain_len(); ++l) {
      x_aug.segment(lift.lifted_state_dim() + (l - 1) * lift.input_dim, lift.input_dim) =
          buf.input_at_lag(lift.m - l - 1);
    }

    const double eps = rhc.epsilon.at(k);
    auto [u0, sol] = policy_step(maps, x_aug, k, rhc);
    const Vector v = extract_raw_input(u0, lift);

    const double state_norm = z.norm();
    z = plant.step(z, v);
    buf.push_input(v);

    StepRecord rec;
    rec.k = k;
    rec.y = y;
    rec.v = v;
    rec.plant_state_norm = state_norm;
    rec.eps = eps;
    rec.gamma_over_eps = gamma_weight(x_aug, rhc.alpha) / eps;
    rec.v1_value = sol.value;
    rec.est_residual = diag.residual;
    rec.lambda_used = diag.lambda_used;
    rec.controllable = diag.controllable;
    if (sink) sink(rec);
    log.records.push_back(std::move(rec));
  }
  return log;
}

ConvergenceMetrics convergence_metrics(const TrajectoryLog& log, double tau) {
  if (log.records.empty()) throw EmptyLog("trajectory log is empty");
  ConvergenceMetrics m;
  const int T = static_cast<int>(log.records.size());
  const int tail_start = T - (T + 9) / 10;
  int k_below = -1;
  for (int k = 0; k < T; ++k) {
    const double norm = log.records[k].y.norm();
    m.peak = std::max(m.peak, norm);
    if (k >= tail_start) m.tail_max = std::max(m.tail_max, norm);
    if (norm <= tau) {
      if (k_below < 0) k_below = k;
    } else {
      k_below = -1;
    }
  }
  m.first_k_below = k_below;
  return m;
}

}  // namespace rhlearn
