#include "rhlearn/rhc.hpp"

#include <cmath>

namespace rhlearn {

double EpsilonSchedule::at(int k) const {
  if (k < 0) throw ValidationError("time index must be nonnegative");
  if (c0 <= 0.0 || c1 < 0.0) throw ValidationError("epsilon schedule requires c0 > 0, c1 >= 0");
  return c0 / (1.0 + c1 * static_cast<double>(k));
}

double gamma_weight(const Vector& x, double alpha) {
  if (alpha <= 0.0) throw ValidationError("alpha must be positive");
  return alpha * x.squaredNorm();
}

void RhcConfig::validate(int state_dim, int input_dim) const {
  if (horizon < 1) throw ValidationError("horizon must be at least 1");
  if (horizon < state_dim) {
    throw ValidationError("horizon must be at least the state dimension");
  }
  if (Q.rows() != state_dim || Q.cols() != state_dim) throw DimensionMismatch("Q has wrong size");
  if (Q_N.rows() != state_dim || Q_N.cols() != state_dim) {
    throw DimensionMismatch("Q_N has wrong size");
  }
  if (R.rows() != input_dim || R.cols() != input_dim) throw DimensionMismatch("R has wrong size");
  if (alpha <= 0.0) throw ValidationError("alpha must be positive");
  for (const Matrix* w : {&Q, &R, &Q_N}) {
    Eigen::LLT<Matrix> llt(*w);
    if (llt.info() != Eigen::Success) {
      throw ValidationError("weight matrices must be positive definite");
    }
  }
}

namespace {

// Stacked input-to-state map for step i: x_i = A_i x + G_i U with
// G_i = [B_{i-1}, ..., B_0, 0, ..., 0] over U = [u_0; ...; u_{N-1}].
std::vector<Matrix> input_to_state_maps(const PredictorMaps& maps, int N) {
  const int n = maps.state_dim();
  const int q = maps.input_dim();
  std::vector<Matrix> G(N + 1);
  for (int i = 1; i <= N; ++i) {
    G[i] = Matrix::Zero(n, N * q);
    for (int l = 0; l < i; ++l) {
      G[i].middleCols(l * q, q) = maps.B_pow[i - 1 - l];
    }
  }
  return G;
}

Matrix sqrt_weight(const Matrix& W) {
  Eigen::LLT<Matrix> llt(W);
  if (llt.info() != Eigen::Success) throw ValidationError("weight matrix not positive definite");
  return llt.matrixU();
}

void check_setup(const PredictorMaps& maps, const Vector& x, const RhcConfig& cfg) {
  cfg.validate(maps.state_dim(), maps.input_dim());
  if (maps.horizon() < cfg.horizon) {
    throw HorizonExceeded("predictor maps are shorter than the configured horizon");
  }
  if (x.size() != maps.state_dim()) throw DimensionMismatch("state dimension mismatch");
}

RhcSolution assemble_solution(const PredictorMaps& maps, const Vector& x, const Vector& U,
                              int N) {
  const int q = maps.input_dim();
  RhcSolution sol;
  sol.inputs.reserve(N);
  for (int i = 0; i < N; ++i) sol.inputs.push_back(U.segment(i * q, q));
  sol.states.reserve(N + 1);
  sol.states.push_back(x);
  std::vector<Vector> prefix;
  prefix.reserve(N);
  for (int i = 1; i <= N; ++i) {
    prefix.push_back(sol.inputs[i - 1]);
    sol.states.push_back(predict(maps, x, prefix, i));
  }
  return sol;
}

double stage_cost(const RhcSolution& sol, const RhcConfig& cfg) {
  double v = 0.0;
  for (int i = 0; i < cfg.horizon; ++i) {
    v += sol.states[i].dot(cfg.Q * sol.states[i]);
    v += sol.inputs[i].dot(cfg.R * sol.inputs[i]);
  }
  return v;
}

}  // namespace

RhcSolution solve_v1(const PredictorMaps& maps, const Vector& x, double eps,
                     const RhcConfig& cfg) {
  check_setup(maps, x, cfg);
  if (eps <= 0.0) throw ValidationError("eps must be positive");

  const int N = cfg.horizon;
  const int n = maps.state_dim();
  const int q = maps.input_dim();
  const double w_term = gamma_weight(x, cfg.alpha) / eps;

  const std::vector<Matrix> G = input_to_state_maps(maps, N);
  const Matrix Sq = sqrt_weight(cfg.Q);
  const Matrix Sr = sqrt_weight(cfg.R);
  const Matrix Sqn = sqrt_weight(cfg.Q_N);

  // Square-root residual stack: stage states, weighted terminal state, inputs.
  const long rows = static_cast<long>(N - 1) * n + n + static_cast<long>(N) * q;
  Matrix M = Matrix::Zero(rows, static_cast<long>(N) * q);
  Vector rhs = Vector::Zero(rows);
  long row = 0;
  for (int i = 1; i < N; ++i) {
    M.middleRows(row, n) = Sq * G[i];
    rhs.segment(row, n) = -Sq * (maps.A_pow[i] * x);
    row += n;
  }
  const double sw = std::sqrt(w_term);
  M.middleRows(row, n) = sw * (Sqn * G[N]);
  rhs.segment(row, n) = -sw * (Sqn * (maps.A_pow[N] * x));
  row += n;
  for (int i = 0; i < N; ++i) {
    M.block(row + i * q, i * q, q, q) = Sr;
  }

  const Vector U = M.colPivHouseholderQr().solve(rhs);
  if (!U.allFinite()) throw NumericalFailure("free-endpoint solve produced non-finite inputs");

  RhcSolution sol = assemble_solution(maps, x, U, N);
  sol.value = stage_cost(sol, cfg) + w_term * sol.states[N].dot(cfg.Q_N * sol.states[N]);
  if (!std::isfinite(sol.value)) throw NumericalFailure("free-endpoint value is not finite");
  return sol;
}

RhcSolution solve_v2(const PredictorMaps& maps, const Vector& x, const RhcConfig& cfg) {
  check_setup(maps, x, cfg);
  const int N = cfg.horizon;
  const std::vector<Matrix> G = input_to_state_maps(maps, N);
  const Matrix Sqn = sqrt_weight(cfg.Q_N);

  const Matrix T = Sqn * G[N];
  const Vector target = -Sqn * (maps.A_pow[N] * x);
  const Vector U = min_norm_least_squares(T, target);

  RhcSolution sol = assemble_solution(maps, x, U, N);
  sol.value = sol.states[N].dot(cfg.Q_N * sol.states[N]);
  return sol;
}

RhcSolution solve_v3(const PredictorMaps& maps, const Vector& x, const Vector& r,
                     const RhcConfig& cfg) {
  check_setup(maps, x, cfg);
  if (r.size() != maps.state_dim()) throw DimensionMismatch("terminal state dimension mismatch");

  const int N = cfg.horizon;
  const int q = maps.input_dim();
  const std::vector<Matrix> G = input_to_state_maps(maps, N);
  const Vector beq = r - maps.A_pow[N] * x;

  const Vector U_ls = min_norm_least_squares(G[N], beq);
  if ((G[N] * U_ls - beq).norm() > 1e-6 * (1.0 + r.norm())) {
    throw TerminalInfeasible("terminal state not reachable within the horizon");
  }

  EqQpProblem p;
  p.H = Matrix::Zero(N * q, N * q);
  p.f = Vector::Zero(N * q);
  for (int i = 1; i < N; ++i) {
    p.H += 2.0 * (G[i].transpose() * cfg.Q * G[i]);
    p.f += 2.0 * (G[i].transpose() * (cfg.Q * (maps.A_pow[i] * x)));
  }
  for (int i = 0; i < N; ++i) {
    p.H.block(i * q, i * q, q, q) += 2.0 * cfg.R;
  }
  p.Aeq = G[N];
  p.beq = beq;

  const EqQpSolution qp = solve_eq_qp(p);
  RhcSolution sol = assemble_solution(maps, x, qp.w, N);
  sol.value = stage_cost(sol, cfg);
  return sol;
}

std::pair<Vector, RhcSolution> policy_step(const PredictorMaps& maps, const Vector& x, int k,
                                           const RhcConfig& cfg) {
  RhcSolution sol = solve_v1(maps, x, cfg.epsilon.at(k), cfg);
  Vector u0 = sol.inputs.front();
  return {std::move(u0), std::move(sol)};
}

}  // namespace rhlearn
