#pragma once

#include <functional>
#include <memory>

#include "rhlearn/estimator.hpp"
#include "rhlearn/lifting.hpp"
#include "rhlearn/rhc.hpp"

namespace rhlearn {

/// Deterministic plant. The harness owns the state; the controller only ever
/// sees outputs and inputs.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual Vector step(const Vector& state, const Vector& input) const = 0;
  virtual Vector output(const Vector& state) const = 0;
  virtual Vector initial_state() const = 0;
  virtual int state_dim() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
};

/// z(k+1) = F z(k) + G v(k), y(k) = H z(k).
class LinearPlant : public Plant {
 public:
  LinearPlant(Matrix F, Matrix G, Matrix H, Vector z0);

  Vector step(const Vector& state, const Vector& input) const override;
  Vector output(const Vector& state) const override;
  Vector initial_state() const override { return z0_; }
  int state_dim() const override { return static_cast<int>(F_.rows()); }
  int input_dim() const override { return static_cast<int>(G_.cols()); }
  int output_dim() const override { return static_cast<int>(H_.rows()); }

  const Matrix& F() const { return F_; }
  const Matrix& G() const { return G_; }
  const Matrix& H() const { return H_; }

 private:
  Matrix F_, G_, H_;
  Vector z0_;
};

/// Single-link robot arm with DC motor, Euler-forward discretized with step
/// size h = 0.01. State: position, velocity, motor current; full state
/// output; scalar voltage input.
class RobotArmPlant : public Plant {
 public:
  explicit RobotArmPlant(Vector x0);

  Vector step(const Vector& state, const Vector& input) const override;
  Vector output(const Vector& state) const override { return state; }
  Vector initial_state() const override { return x0_; }
  int state_dim() const override { return 3; }
  int input_dim() const override { return 1; }
  int output_dim() const override { return 3; }

 private:
  Vector x0_;
};

/// Built-in unstable third-order linear benchmark plant id and the robot arm.
extern const char* const kPlantLinearBenchmark;  // "linear_sec6a"
extern const char* const kPlantRobotArm;         // "robot_arm"

std::unique_ptr<Plant> make_builtin_plant(const std::string& kind, const Vector& initial_state);

/// Exact lifted signal model of an observable linear plant under depth-m
/// output/input stacking: the pair (A, B) for which the stacked trajectories
/// satisfy x(k+1) = A x(k) + B u(k) exactly. Diagnostic utility; the closed
/// loop never uses it.
SignalModel exact_signal_model(const LinearPlant& plant, int m);

struct StepRecord {
  int k = 0;
  Vector y;
  Vector v;
  double plant_state_norm = 0.0;
  double eps = 0.0;
  double gamma_over_eps = 0.0;
  double v1_value = 0.0;
  double est_residual = 0.0;
  double lambda_used = 0.0;
  bool controllable = true;
};

struct TrajectoryLog {
  std::vector<StepRecord> records;
};

using LogSink = std::function<void(const StepRecord&)>;

/// Runs the closed loop for `steps` steps: measure, lift, update the
/// estimator, rebuild the augmented predictor maps, solve the horizon
/// problem, apply the first input. Deterministic given configs and theta0.
TrajectoryLog run_closed_loop(const Plant& plant, const LiftingConfig& lift, Estimator& est,
                              const RhcConfig& rhc, int steps, const LogSink& sink = {});

struct ConvergenceMetrics {
  double peak = 0.0;            // max |y(k)| over the run
  double tail_max = 0.0;        // max |y(k)| over the last tenth of the run
  int first_k_below = -1;       // earliest k with |y| <= tau from there on
};

ConvergenceMetrics convergence_metrics(const TrajectoryLog& log, double tau);

}  // namespace rhlearn
