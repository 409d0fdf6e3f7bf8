#include "rhlearn/selftest.hpp"

#include <functional>
#include <ostream>
#include <random>

#include "rhlearn/estimator.hpp"
#include "rhlearn/lifting.hpp"
#include "rhlearn/rhc.hpp"

namespace rhlearn {

namespace {

using Rng = std::mt19937_64;

Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

Vector random_vector(Rng& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

SignalModel random_controllable_model(Rng& rng, int n, int q) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    SignalModel m{random_matrix(rng, n, n), random_matrix(rng, n, q)};
    // Keep the spectral radius moderate so horizon powers stay tame.
    m.A *= 0.9 / std::max(1.0, m.A.cwiseAbs().rowwise().sum().maxCoeff());
    if (is_controllable(m)) return m;
  }
  throw NumericalFailure("failed to sample a controllable model");
}

RhcConfig identity_config(int n, int q, int N) {
  RhcConfig cfg;
  cfg.horizon = N;
  cfg.Q = Matrix::Identity(n, n);
  cfg.R = Matrix::Identity(q, q);
  cfg.Q_N = Matrix::Identity(n, n);
  cfg.alpha = 1.0;
  cfg.epsilon = {1.0, 0.0};
  return cfg;
}

bool check_commutation(Rng& rng) {
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const SignalModel m = random_controllable_model(rng, n, q);
    const int N = 6;
    const PredictorMaps maps = build_predictor_maps(m, N);
    std::vector<Vector> inputs;
    for (int i = 0; i < N; ++i) inputs.push_back(random_vector(rng, q));
    const Vector x0 = random_vector(rng, n);
    for (int i = 0; i + 1 <= N; ++i) {
      const int j = N - i;
      std::vector<Vector> head(inputs.begin(), inputs.begin() + i);
      std::vector<Vector> tail(inputs.begin() + i, inputs.begin() + i + j);
      const Vector two_stage = predict(maps, predict(maps, x0, head, i), tail, j);
      const Vector direct = predict(maps, x0, inputs, i + j);
      if ((two_stage - direct).norm() > 1e-10 * (1.0 + direct.norm())) return false;
    }
  }
  return true;
}

bool check_restoration(Rng& rng) {
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const Theta prev = model_to_theta(random_controllable_model(rng, n, q));
    Theta cand;
    if (trial % 2 == 0) {
      // Uncontrollable candidate: identity dynamics, zero input map.
      cand = model_to_theta(SignalModel{Matrix::Identity(n, n), Matrix::Zero(n, q)});
    } else {
      cand = model_to_theta(SignalModel{random_matrix(rng, n, n), random_matrix(rng, n, q)});
    }
    const bool cand_ok = is_controllable(theta_to_model(cand, n, q));
    const RestorationResult res = restore_controllability(cand, prev, n, q, 0.5);
    if (!is_controllable(theta_to_model(res.theta, n, q))) return false;
    if (cand_ok != (res.lambda_used == 0.0)) return false;
  }
  return true;
}

bool check_terminal_inequality(Rng& rng) {
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const SignalModel m = random_controllable_model(rng, n, q);
    const int N = n + 2;
    const PredictorMaps maps = build_predictor_maps(m, N);
    RhcConfig cfg = identity_config(n, q, N);
    const Vector x = random_vector(rng, n, 2.0);
    if (x.norm() < 1e-6) continue;
    for (const double eps : {1.0, 1e-1, 1e-3}) {
      const RhcSolution v1 = solve_v1(maps, x, eps, cfg);
      const RhcSolution v2 = solve_v2(maps, x, cfg);
      double stage = 0.0;
      for (int i = 0; i < N; ++i) {
        stage += v2.states[i].dot(cfg.Q * v2.states[i]);
        stage += v2.inputs[i].dot(cfg.R * v2.inputs[i]);
      }
      const double lhs = v1.states[N].dot(cfg.Q_N * v1.states[N]);
      const double rhs = v2.value + eps * stage / gamma_weight(x, cfg.alpha);
      if (lhs > rhs + 1e-8) return false;
    }
  }
  return true;
}

bool check_v2_zero(Rng& rng) {
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const SignalModel m = random_controllable_model(rng, n, q);
    const PredictorMaps maps = build_predictor_maps(m, n);
    const RhcConfig cfg = identity_config(n, q, n);
    const RhcSolution v2 = solve_v2(maps, random_vector(rng, n, 3.0), cfg);
    if (v2.value > 1e-9) return false;
  }
  return true;
}

bool check_augmentation(Rng& rng) {
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 1 + static_cast<int>(rng() % 3);
    const int p = 1 + static_cast<int>(rng() % 2);
    const int q = 1 + static_cast<int>(rng() % 2);
    LiftingConfig lift{m, p, q};
    SignalModel model{random_matrix(rng, lift.lifted_state_dim(), lift.lifted_state_dim(), 0.4),
                      random_matrix(rng, lift.lifted_state_dim(), lift.lifted_input_dim(), 0.4)};
    const AugmentedModel aug = augment_model(model, lift);

    HistoryBuffer buf(p, q, m + 1);
    Vector x_lift = random_vector(rng, lift.lifted_state_dim());
    Vector x_aug(lift.augmented_dim());
    x_aug.head(lift.lifted_state_dim()) = x_lift;
    x_aug.tail(lift.chain_len() * q).setZero();

    for (int k = 0; k < 20; ++k) {
      const Vector v = random_vector(rng, q);
      buf.push_input(v);
      const Vector u = lift_input(buf, m);
      x_lift = model.A * x_lift + model.B * u;
      x_aug = aug.model.A * x_aug + aug.model.B * v;
      if ((x_aug.head(lift.lifted_state_dim()) - x_lift).norm() >
          1e-12 * (1.0 + x_lift.norm())) {
        return false;
      }
    }
  }
  return true;
}

bool check_estimator_convergence(Rng& rng) {
  SignalModel truth{Matrix(2, 2), Matrix(2, 1)};
  truth.A << 0.6, 0.2, -0.1, 0.8;
  truth.B << 1.0, 0.5;

  EstimatorConfig cfg;
  cfg.state_dim = 2;
  cfg.input_dim = 1;
  cfg.window = 6;
  Estimator est(cfg);

  Vector x(2);
  x << 1.0, -1.0;
  Vector u_prev = Vector::Zero(1);
  double residual = 1.0;
  for (int k = 0; k < 200; ++k) {
    residual = est.update(x, u_prev).residual;
    const Vector u = random_vector(rng, 1);
    x = truth.A * x + truth.B * u;
    u_prev = u;
  }
  return residual < 1e-5;
}

}  // namespace

int selftest(std::ostream& out) {
  Rng rng(0x5eed5eedULL);
  struct Check {
    const char* name;
    std::function<bool(Rng&)> fn;
  };
  const Check checks[] = {
      {"predictor commutation", check_commutation},
      {"controllability restoration", check_restoration},
      {"terminal-cost inequality", check_terminal_inequality},
      {"reachable terminal cost vanishes", check_v2_zero},
      {"augmented/lifted equivalence", check_augmentation},
      {"estimator convergence", check_estimator_convergence},
  };
  int failures = 0;
  for (const auto& check : checks) {
    const bool ok = check.fn(rng);
    out << (ok ? "[ ok ] " : "[fail] ") << check.name << "\n";
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace rhlearn
