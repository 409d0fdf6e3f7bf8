#pragma once

#include <utility>

#include "rhlearn/signal_model.hpp"

namespace rhlearn {

/// Terminal-weight decay epsilon(k) = c0 / (1 + c1 k).
struct EpsilonSchedule {
  double c0 = 1.0;
  double c1 = 0.0;

  double at(int k) const;
};

/// Terminal scaling Gamma(x) = alpha |x|^2.
double gamma_weight(const Vector& x, double alpha);

struct RhcConfig {
  int horizon = 1;       // N
  Matrix Q;              // stage state weight, positive definite
  Matrix R;              // stage input weight, positive definite
  Matrix Q_N;            // terminal weight, positive definite
  double alpha = 1.0;    // Gamma scaling
  EpsilonSchedule epsilon;

  void validate(int state_dim, int input_dim) const;
};

/// Input/state sequence and objective value of one horizon problem.
struct RhcSolution {
  std::vector<Vector> inputs;  // u_0 .. u_{N-1}
  std::vector<Vector> states;  // x_0 .. x_N
  double value = 0.0;
};

/// Free-endpoint problem: minimizes
///   sum_i x_i'Q x_i + u_i'R u_i  +  (Gamma(x)/eps) x_N'Q_N x_N
/// over the inputs, with states generated by the predictor maps from x.
/// Gamma(x) is a constant with respect to the decision variables, so this is
/// an unconstrained strictly convex QP in the stacked inputs; it is solved
/// through a QR factorization of the square-root weighted residual stack,
/// which tolerates the extreme terminal weights the decaying eps produces.
RhcSolution solve_v1(const PredictorMaps& maps, const Vector& x, double eps,
                     const RhcConfig& cfg);

/// Minimal reachable terminal cost: min over inputs of x_N'Q_N x_N, with the
/// least-norm stacked input among the minimizers.
RhcSolution solve_v2(const PredictorMaps& maps, const Vector& x, const RhcConfig& cfg);

/// Fixed-endpoint problem: minimizes the stage cost subject to x_N = r.
/// Throws TerminalInfeasible when r is not reachable from x in N steps.
RhcSolution solve_v3(const PredictorMaps& maps, const Vector& x, const Vector& r,
                     const RhcConfig& cfg);

/// One receding-horizon step: solves the free-endpoint problem with
/// eps = epsilon(k) and returns its first input along with the solution.
std::pair<Vector, RhcSolution> policy_step(const PredictorMaps& maps, const Vector& x, int k,
                                           const RhcConfig& cfg);

}  // namespace rhlearn
