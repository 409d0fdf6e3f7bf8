#pragma once

#include <deque>
#include <functional>

#include "rhlearn/signal_model.hpp"

namespace rhlearn {

/// Stacked regression window: s holds the lifted states x(k)...x(k-N+1) top
/// down and each row block of R is [x(k-1-j)' (x) I, u(k-1-j)' (x) I], so
/// that s = R theta encodes x(j) = A x(j-1) + B u(j-1) over the window.
struct RegressionData {
  Vector s;
  Matrix R;
};

/// x_hist must hold at least window+1 states (newest first), u_hist at
/// least window inputs (newest first, starting at the input one step back).
/// Zero-padding for negative time is the caller's responsibility.
RegressionData build_regression(const std::vector<Vector>& x_hist,
                                const std::vector<Vector>& u_hist, int window);

/// Strictly convex generator of the Bregman distance
///   D(x, y) = g(x) - g(y) - (x - y)' grad g(y).
/// The default is the quadratic g(x) = x'Px with P positive definite, for
/// which D(x, y) = (x-y)'P(x-y). Arbitrary differentiable strictly convex
/// generators can be supplied as (value, gradient) callables; those route
/// the proximal step through an iterative inner solver.
struct BregmanGenerator {
  Matrix P;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;

  static BregmanGenerator quadratic(Matrix p);
  static BregmanGenerator custom(std::function<double(const Vector&)> value,
                                 std::function<Vector(const Vector&)> gradient);

  bool is_quadratic() const { return !value; }
  double distance(const Vector& x, const Vector& y) const;
};

/// Loss c(e) on the window residual. Quadratic e'We by default, with the
/// same (value, gradient) extension hook as the generator.
struct ResidualLoss {
  Matrix W;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;

  static ResidualLoss quadratic(Matrix w);
  static ResidualLoss custom(std::function<double(const Vector&)> value,
                             std::function<Vector(const Vector&)> gradient);

  bool is_quadratic() const { return !value; }
};

/// Minimizer of  c(s - R theta) + D(theta, anchor).  Closed form for the
/// quadratic/quadratic case, damped Newton with finite-difference Hessian
/// otherwise.
Theta proximal_step(const RegressionData& reg, const ResidualLoss& loss,
                    const BregmanGenerator& gen, const Theta& anchor);

struct EstimatorConfig {
  int state_dim = 0;   // lifted state dimension
  int input_dim = 0;   // lifted input dimension
  int window = 1;      // regression window length
  double lambda_max = 0.5;
  double ctrb_tol = kDefaultRankTol;
  Theta theta0;        // must decode to a controllable pair
  Matrix W;            // loss weight, defaults to identity
  Matrix P;            // generator weight, defaults to identity
  bool frozen = false; // hold theta fixed (diagnostics still computed)
};

struct EstimatorDiagnostics {
  double residual = 0.0;            // |s - R theta| at the emitted estimate
  double candidate_residual = 0.0;  // |s - R theta*| at the proximal optimum
  double lambda_used = 0.0;
  bool controllable = true;
};

/// Proximity-based estimator: on each update it pushes the newest lifted
/// state/input pair, solves the proximal problem over the window, and blends
/// the result with the previous estimate just enough to keep the decoded
/// pair controllable.
class Estimator {
 public:
  explicit Estimator(EstimatorConfig cfg);

  /// x is the lifted state at the current step, u_prev the lifted input one
  /// step back (the one that produced x).
  EstimatorDiagnostics update(const Vector& x, const Vector& u_prev);

  const Theta& theta() const { return theta_; }
  SignalModel model() const;
  RegressionData regression() const;
  const EstimatorConfig& config() const { return cfg_; }

 private:
  EstimatorConfig cfg_;
  Theta theta_;
  std::deque<Vector> x_hist_;  // front = newest
  std::deque<Vector> u_hist_;
};

}  // namespace rhlearn
