#pragma once

#include <vector>

#include "rhlearn/qp.hpp"

namespace rhlearn {

/// Linear signal model x(k+1) = A x(k) + B u(k) on lifted coordinates.
/// It reproduces one observed trajectory; it does not claim to identify
/// the plant.
struct SignalModel {
  Matrix A;  // state_dim x state_dim
  Matrix B;  // state_dim x input_dim

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

/// Flat parameter vector [vec(A); vec(B)], column-major.
using Theta = Vector;

/// Decodes theta of length n*(n+q) into the pair (A, B).
SignalModel theta_to_model(const Theta& theta, int state_dim, int input_dim);

/// Column-major vectorization, inverse of theta_to_model.
Theta model_to_theta(const SignalModel& m);

/// Horizon-indexed prediction maps A_i = A^i and B_i = A^i B, i up to N.
struct PredictorMaps {
  std::vector<Matrix> A_pow;  // A_pow[i] = A^i, i = 0..N (A_pow[0] = I)
  std::vector<Matrix> B_pow;  // B_pow[i] = A^i B, i = 0..N-1

  int horizon() const { return static_cast<int>(A_pow.size()) - 1; }
  int state_dim() const { return static_cast<int>(A_pow.front().rows()); }
  int input_dim() const { return static_cast<int>(B_pow.front().cols()); }
};

/// Builds the maps by repeated multiplication. horizon >= 1.
PredictorMaps build_predictor_maps(const SignalModel& m, int horizon);

/// i-step-ahead prediction A_i x0 + sum_l B_{i-1-l} u_l. Requires exactly
/// `steps` inputs and steps <= horizon. predict(maps, x0, {}, 0) == x0.
Vector predict(const PredictorMaps& maps, const Vector& x0,
               const std::vector<Vector>& inputs, int steps);

/// [B, AB, ..., A^{n-1}B].
Matrix controllability_matrix(const SignalModel& m);

/// True iff the controllability matrix has full numerical row rank.
bool is_controllable(const SignalModel& m, double tol = kDefaultRankTol);

/// Entrywise convex combination (1-lambda)*a + lambda*b, lambda in [0,1).
SignalModel blend(const SignalModel& a, const SignalModel& b, double lambda);

struct RestorationResult {
  Theta theta;
  double lambda_used = 0.0;
};

/// Returns the candidate unchanged (lambda 0) when it already decodes to a
/// controllable pair. Otherwise walks the grid
/// lambda_i = i * lambda_max / (2 n^2 + 2), i = 1..2n^2+1, in increasing
/// order and returns the first blend with `previous` that is controllable.
/// `previous` must decode to a controllable pair.
/// Throws RestorationFailed if no grid point passes, which signals numerical
/// breakdown rather than a reachable state of the algorithm.
RestorationResult restore_controllability(const Theta& candidate, const Theta& previous,
                                          int state_dim, int input_dim, double lambda_max,
                                          double tol = kDefaultRankTol);

/// Controllable initialization: A is the upshift-by-input_dim matrix, B has
/// an identity block in its last rows (right-aligned when input_dim exceeds
/// state_dim), both scaled by `scale`.
Theta canonical_theta(int state_dim, int input_dim, double scale = 1.0);

}  // namespace rhlearn
