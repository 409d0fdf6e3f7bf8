// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each check pins its tolerances in code; the two benchmark runs also
// enforce their wall-clock budgets.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rhlearn/experiment.hpp"
#include "test_util.hpp"

using namespace rhlearn;
using testutil::Rng;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double stage_cost(const RhcSolution& sol, const RhcConfig& cfg) {
  double v = 0.0;
  for (int i = 0; i < cfg.horizon; ++i) {
    v += sol.states[i].dot(cfg.Q * sol.states[i]) + sol.inputs[i].dot(cfg.R * sol.inputs[i]);
  }
  return v;
}

// ---- 1. linear benchmark ---------------------------------------------------

bool linear_benchmark(std::string& detail) {
  const auto t0 = Clock::now();
  auto plant = make_builtin_plant(kPlantLinearBenchmark, Vector());
  LiftingConfig lift{4, 1, 1};
  EstimatorConfig ec;
  ec.state_dim = lift.lifted_state_dim();
  ec.input_dim = lift.lifted_input_dim();
  ec.window = 8;
  ec.lambda_max = 0.5;
  Estimator est(ec);
  RhcConfig rhc;
  rhc.horizon = 20;
  const int aug = lift.augmented_dim();
  rhc.Q = 100.0 * Matrix::Identity(aug, aug);
  rhc.Q_N = 100.0 * Matrix::Identity(aug, aug);
  rhc.R = 10000.0 * Matrix::Identity(1, 1);
  rhc.alpha = 1.0;
  rhc.epsilon = {1.0, 1000.0};

  const TrajectoryLog log = run_closed_loop(*plant, lift, est, rhc, 41);
  const double elapsed = seconds_since(t0);

  int peak_k = 0;
  double peak = 0.0;
  for (const auto& rec : log.records) {
    if (rec.y.norm() > peak) {
      peak = rec.y.norm();
      peak_k = rec.k;
    }
  }
  double tail = 0.0;
  for (int k = 35; k <= 40; ++k) tail = std::max(tail, log.records[k].y.norm());

  char buf[160];
  std::snprintf(buf, sizeof(buf), "steps=41 peak=%.3g@k=%d max|y| k>=35: %.3g time=%.2fs", peak,
                peak_k, tail, elapsed);
  detail = buf;
  return static_cast<int>(log.records.size()) == 41 && peak_k < 15 && tail <= 0.5 &&
         elapsed <= 10.0;
}

// ---- 2. robot arm ----------------------------------------------------------

bool robot_arm_benchmark(std::string& detail) {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg =
      parse_config_file(std::string(RHLEARN_CONFIG_DIR) + "/robot_arm.cfg");
  ClosedLoopSetup setup = build_setup(cfg);
  Estimator est(setup.estimator);
  const TrajectoryLog log =
      run_closed_loop(*setup.plant, setup.lift, est, setup.rhc, 61);
  const double elapsed = seconds_since(t0);

  double tail = 0.0;
  for (int k = 50; k <= 60; ++k) tail = std::max(tail, std::abs(log.records[k].y(0)));

  char buf[160];
  std::snprintf(buf, sizeof(buf), "steps=61 max|x1| k>=50: %.3g time=%.2fs", tail, elapsed);
  detail = buf;
  return static_cast<int>(log.records.size()) == 61 && tail <= 0.1 && elapsed <= 10.0;
}

// ---- 3. terminal-cost inequality -------------------------------------------

bool terminal_cost_inequality(std::string& detail) {
  Rng rng(0xACCE0003ULL);
  double worst = -1e9;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const int N = n + 1 + static_cast<int>(rng() % 3);
    const SignalModel m = testutil::random_controllable_model(rng, n, q);
    const PredictorMaps maps = build_predictor_maps(m, N);
    RhcConfig cfg;
    cfg.horizon = N;
    cfg.Q = testutil::random_spd(rng, n);
    cfg.R = testutil::random_spd(rng, q);
    cfg.Q_N = testutil::random_spd(rng, n);
    cfg.alpha = 1.0;
    Vector x = testutil::random_vector(rng, n, 2.0);
    if (x.norm() < 1e-3) x = Vector::Ones(n);
    const RhcSolution v2 = solve_v2(maps, x, cfg);
    const double stage = stage_cost(v2, cfg);
    for (const double eps : {1.0, 1e-1, 1e-3}) {
      const RhcSolution v1 = solve_v1(maps, x, eps, cfg);
      const double lhs = v1.states[N].dot(cfg.Q_N * v1.states[N]);
      const double rhs = v2.value + eps * stage / gamma_weight(x, cfg.alpha);
      worst = std::max(worst, lhs - rhs);
      if (lhs > rhs + 1e-8) {
        detail = "violated at trial " + std::to_string(trial);
        return false;
      }
    }
  }
  detail = "300 instances, worst slack " + std::to_string(worst);
  return true;
}

// ---- 4. estimator convergence ----------------------------------------------

bool estimator_convergence(std::string& detail) {
  Rng rng(0xACCE0004ULL);
  const SignalModel truth = testutil::random_controllable_model(rng, 2, 1);
  const Theta theta_true = model_to_theta(truth);

  // residual decay from a nonzero initial state
  EstimatorConfig cfg;
  cfg.state_dim = 2;
  cfg.input_dim = 1;
  cfg.window = 8;
  Estimator est(cfg);
  Vector x(2);
  x << 1.0, -2.0;
  Vector u_prev = Vector::Zero(1);
  double residual = 1e9;
  int hit = -1;
  for (int k = 0; k < 200; ++k) {
    residual = est.update(x, u_prev).residual;
    if (residual < 1e-6 && hit < 0) hit = k;
    const Vector u = testutil::random_vector(rng, 1);
    x = truth.A * x + truth.B * u;
    u_prev = u;
  }
  if (hit < 0) {
    detail = "residual stayed at " + std::to_string(residual);
    return false;
  }

  // monotone anchor distance on a stream that admits an exact solution
  Estimator est2(cfg);
  Vector x2 = Vector::Zero(2);
  Vector u2 = Vector::Zero(1);
  double last = (theta_true - est2.theta()).squaredNorm();
  bool monotone = true;
  for (int k = 0; k < 150; ++k) {
    est2.update(x2, u2);
    const double dist = (theta_true - est2.theta()).squaredNorm();
    if (dist > last + 1e-12) monotone = false;
    last = dist;
    const Vector u = testutil::random_vector(rng, 1);
    x2 = truth.A * x2 + truth.B * u;
    u2 = u;
  }
  detail = "residual<1e-6 at k=" + std::to_string(hit) +
           std::string(monotone ? ", anchor distance monotone" : ", monotonicity violated");
  return monotone;
}

// ---- 5. controllability safeguard ------------------------------------------

bool controllability_safeguard(std::string& detail) {
  Rng rng(0xACCE0005ULL);
  int lambda_positive = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const Theta prev = model_to_theta(testutil::random_controllable_model(rng, n, q));
    Theta cand;
    switch (trial % 4) {
      case 0:
        cand = model_to_theta(SignalModel{Matrix::Identity(n, n), Matrix::Zero(n, q)});
        break;
      case 1:
        cand = model_to_theta(SignalModel{testutil::random_matrix(rng, n, n),
                                          Matrix::Zero(n, q)});
        break;
      case 2: {
        // single uncontrollable direction: B in an A-invariant subspace
        Matrix A = Matrix::Zero(n, n);
        A.diagonal().setLinSpaced(n, 0.5, 1.5);
        Matrix B = Matrix::Zero(n, q);
        B(0, 0) = 1.0;
        cand = model_to_theta(SignalModel{A, B});
        break;
      }
      default:
        cand = model_to_theta(SignalModel{testutil::random_matrix(rng, n, n),
                                          testutil::random_matrix(rng, n, q)});
        break;
    }
    const bool cand_ok = is_controllable(theta_to_model(cand, n, q), 1e-8);
    const RestorationResult res = restore_controllability(cand, prev, n, q, 0.5, 1e-8);
    if (!is_controllable(theta_to_model(res.theta, n, q), 1e-8)) {
      detail = "uncontrollable output at trial " + std::to_string(trial);
      return false;
    }
    if (cand_ok != (res.lambda_used == 0.0)) {
      detail = "lambda policy violated at trial " + std::to_string(trial);
      return false;
    }
    if (res.lambda_used > 0.0) ++lambda_positive;
  }
  detail = "1000 steps, " + std::to_string(lambda_positive) + " needed blending";
  return lambda_positive > 0;
}

// ---- 6. QP oracle equivalence ----------------------------------------------

// The oracle runs in extended precision and refines its solves so its own
// rounding does not eat into the comparison budget (plain long double is
// not enough on platforms that emulate it at double precision).
using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

LVector refined_solve(const LMatrix& A, const LVector& b) {
  const auto ldlt = A.ldlt();
  LVector x = ldlt.solve(b);
  for (int iter = 0; iter < 3; ++iter) {
    const LVector r = b - A * x;
    const LVector dx = ldlt.solve(r);
    if (!dx.allFinite()) break;
    x += dx;
  }
  return x;
}

bool qp_oracle_equivalence(std::string& detail) {
  Rng rng(0xACCE0006ULL);
  double worst_val = 0.0, worst_vec = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 4);
    const int q = 1 + static_cast<int>(rng() % 2);
    const int N = n + static_cast<int>(rng() % (n + 1));
    const SignalModel m = testutil::random_controllable_model(rng, n, q, 1.1);
    const PredictorMaps maps = build_predictor_maps(m, N);
    RhcConfig cfg;
    cfg.horizon = N;
    cfg.Q = testutil::random_spd(rng, n);
    cfg.R = testutil::random_spd(rng, q);
    cfg.Q_N = testutil::random_spd(rng, n);
    cfg.alpha = 1.0;
    const Vector x = testutil::random_vector(rng, n, 2.0);
    const double eps = (trial % 2 == 0) ? 1.0 : 1e-2;

    // independently coded stacked maps
    const LMatrix A = m.A.cast<long double>();
    const LMatrix B = m.B.cast<long double>();
    const LMatrix Q = cfg.Q.cast<long double>();
    const LMatrix R = cfg.R.cast<long double>();
    const LMatrix QN = cfg.Q_N.cast<long double>();
    const LVector xl = x.cast<long double>();
    std::vector<LMatrix> apow(1, LMatrix::Identity(n, n));
    for (int i = 0; i < N; ++i) apow.push_back(A * apow.back());
    std::vector<LMatrix> G(N + 1);
    for (int i = 1; i <= N; ++i) {
      G[i] = LMatrix::Zero(n, N * q);
      for (int l = 0; l < i; ++l) G[i].middleCols(l * q, q) = apow[i - 1 - l] * B;
    }

    // normal equations for the free endpoint
    const long double w = static_cast<long double>(cfg.alpha * x.squaredNorm() / eps);
    LMatrix H = LMatrix::Zero(N * q, N * q);
    LVector f = LVector::Zero(N * q);
    for (int i = 1; i < N; ++i) {
      H += G[i].transpose() * Q * G[i];
      f += G[i].transpose() * (Q * (apow[i] * xl));
    }
    H += w * (G[N].transpose() * QN * G[N]);
    f += w * (G[N].transpose() * (QN * (apow[N] * xl)));
    for (int i = 0; i < N; ++i) H.block(i * q, i * q, q, q) += R;
    const LVector U_ref = refined_solve(H, -f);
    long double val_ref = xl.dot(Q * xl);
    for (int i = 1; i < N; ++i) {
      const LVector xi = apow[i] * xl + G[i] * U_ref;
      val_ref += xi.dot(Q * xi);
    }
    {
      const LVector xn = apow[N] * xl + G[N] * U_ref;
      val_ref += w * xn.dot(QN * xn);
    }
    for (int i = 0; i < N; ++i) {
      val_ref += U_ref.segment(i * q, q).dot(R * U_ref.segment(i * q, q));
    }

    const RhcSolution v1 = solve_v1(maps, x, eps, cfg);
    LVector U(N * q);
    for (int i = 0; i < N; ++i) U.segment(i * q, q) = v1.inputs[i].cast<long double>();
    worst_vec = std::max(worst_vec, static_cast<double>((U - U_ref).norm() /
                                                        (1.0L + U_ref.norm())));
    worst_val = std::max(worst_val,
                         static_cast<double>(std::abs(v1.value - val_ref) /
                                             (1.0L + std::abs(val_ref))));

    // Lagrange oracle for the pinned endpoint
    std::vector<Vector> rin;
    for (int i = 0; i < N; ++i) rin.push_back(testutil::random_vector(rng, q));
    const Vector r = predict(maps, x, rin, N);
    const LVector rl = r.cast<long double>();
    LMatrix H3 = LMatrix::Zero(N * q, N * q);
    LVector f3 = LVector::Zero(N * q);
    for (int i = 1; i < N; ++i) {
      H3 += G[i].transpose() * Q * G[i];
      f3 += G[i].transpose() * (Q * (apow[i] * xl));
    }
    for (int i = 0; i < N; ++i) H3.block(i * q, i * q, q, q) += R;
    const LMatrix H3inv = H3.inverse();
    const LVector d = rl - apow[N] * xl;
    const LMatrix S = G[N] * H3inv * G[N].transpose();
    LVector lam = S.ldlt().solve(-(G[N] * (H3inv * f3)) - d);
    LVector U3_ref = H3inv * (-f3 - G[N].transpose() * lam);
    for (int iter = 0; iter < 3; ++iter) {
      // correct (U, lambda) with the residual of the stationarity and
      // endpoint equations through the same Schur operators
      const LVector r1 = -f3 - H3 * U3_ref - G[N].transpose() * lam;
      const LVector r2 = d - G[N] * U3_ref;
      const LVector dlam = S.ldlt().solve(G[N] * (H3inv * r1) - r2);
      const LVector dU = H3inv * (r1 - G[N].transpose() * dlam);
      if (!dU.allFinite() || !dlam.allFinite()) break;
      U3_ref += dU;
      lam += dlam;
    }
    long double val3_ref = xl.dot(Q * xl);
    for (int i = 1; i < N; ++i) {
      const LVector xi = apow[i] * xl + G[i] * U3_ref;
      val3_ref += xi.dot(Q * xi);
    }
    for (int i = 0; i < N; ++i) {
      val3_ref += U3_ref.segment(i * q, q).dot(R * U3_ref.segment(i * q, q));
    }

    const RhcSolution v3 = solve_v3(maps, x, r, cfg);
    LVector U3(N * q);
    for (int i = 0; i < N; ++i) U3.segment(i * q, q) = v3.inputs[i].cast<long double>();
    worst_vec = std::max(worst_vec, static_cast<double>((U3 - U3_ref).norm() /
                                                        (1.0L + U3_ref.norm())));
    worst_val = std::max(worst_val,
                         static_cast<double>(std::abs(v3.value - val3_ref) /
                                             (1.0L + std::abs(val3_ref))));
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "200 instances, worst value err %.2e, input err %.2e",
                worst_val, worst_vec);
  detail = buf;
  return worst_val <= 1e-8 && worst_vec <= 1e-7;
}

// ---- 7. exact-predictor stabilization --------------------------------------

bool exact_predictor_stabilization(std::string& detail) {
  auto plant = make_builtin_plant(kPlantLinearBenchmark, Vector());
  auto* lp = dynamic_cast<LinearPlant*>(plant.get());
  LiftingConfig lift{4, 1, 1};
  EstimatorConfig ec;
  ec.state_dim = lift.lifted_state_dim();
  ec.input_dim = lift.lifted_input_dim();
  ec.window = 8;
  ec.theta0 = model_to_theta(exact_signal_model(*lp, 4));
  ec.frozen = true;
  Estimator est(ec);
  RhcConfig rhc;
  rhc.horizon = 20;
  const int aug = lift.augmented_dim();
  rhc.Q = 100.0 * Matrix::Identity(aug, aug);
  rhc.Q_N = 100.0 * Matrix::Identity(aug, aug);
  rhc.R = 100.0 * Matrix::Identity(1, 1);
  rhc.alpha = 1.0;
  rhc.epsilon = {1.0, 1000.0};
  const TrajectoryLog log = run_closed_loop(*plant, lift, est, rhc, 61);
  const double y60 = log.records[60].y.norm();
  char buf[80];
  std::snprintf(buf, sizeof(buf), "|y(60)| = %.3g", y60);
  detail = buf;
  return y60 < 1e-3;
}

// ---- 8. structural properties ----------------------------------------------

bool structural_properties(std::string& detail) {
  Rng rng(0xACCE0008ULL);

  // predictor commutation
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const int q = 1 + static_cast<int>(rng() % 2);
    const SignalModel m = testutil::random_controllable_model(rng, n, q);
    const int N = 6;
    const PredictorMaps maps = build_predictor_maps(m, N);
    const Vector x0 = testutil::random_vector(rng, n);
    std::vector<Vector> inputs;
    for (int i = 0; i < N; ++i) inputs.push_back(testutil::random_vector(rng, q));
    for (int i = 0; i <= N; ++i) {
      for (int j = 0; i + j <= N; ++j) {
        std::vector<Vector> head(inputs.begin(), inputs.begin() + i);
        std::vector<Vector> tail(inputs.begin() + i, inputs.begin() + i + j);
        const Vector split = predict(maps, predict(maps, x0, head, i), tail, j);
        const Vector direct = predict(
            maps, x0, std::vector<Vector>(inputs.begin(), inputs.begin() + i + j), i + j);
        if ((split - direct).norm() > 1e-10 * (1.0 + direct.norm())) {
          detail = "commutation violated";
          return false;
        }
      }
    }
  }

  // quadratic homogeneity of the pinned-endpoint value
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 2);
    const SignalModel m = testutil::random_controllable_model(rng, n, 1);
    const int N = n + 1;
    const PredictorMaps maps = build_predictor_maps(m, N);
    RhcConfig cfg;
    cfg.horizon = N;
    cfg.Q = testutil::random_spd(rng, n);
    cfg.R = testutil::random_spd(rng, 1);
    cfg.Q_N = Matrix::Identity(n, n);
    const Vector x = testutil::random_vector(rng, n);
    std::vector<Vector> rin;
    for (int i = 0; i < N; ++i) rin.push_back(testutil::random_vector(rng, 1));
    const Vector r = predict(maps, x, rin, N);
    const double v = solve_v3(maps, x, r, cfg).value;
    const double v4 = solve_v3(maps, 2.0 * x, 2.0 * r, cfg).value;
    if (std::abs(v4 - 4.0 * v) > 1e-9 * (1.0 + 4.0 * std::abs(v))) {
      detail = "homogeneity violated";
      return false;
    }
  }

  // reachable terminal cost vanishes for controllable maps with N >= n
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const int q = 1 + static_cast<int>(rng() % 2);
    const SignalModel m = testutil::random_controllable_model(rng, n, q);
    const PredictorMaps maps = build_predictor_maps(m, n);
    RhcConfig cfg;
    cfg.horizon = n;
    cfg.Q = Matrix::Identity(n, n);
    cfg.R = Matrix::Identity(q, q);
    cfg.Q_N = Matrix::Identity(n, n);
    const RhcSolution v2 = solve_v2(maps, testutil::random_vector(rng, n, 5.0), cfg);
    if (v2.value > 1e-9) {
      detail = "reachable terminal cost " + std::to_string(v2.value);
      return false;
    }
  }

  // augmented/lifted simulation equivalence over 20-step streams
  for (int trial = 0; trial < 40; ++trial) {
    const int depth = 1 + static_cast<int>(rng() % 4);
    const int p = 1 + static_cast<int>(rng() % 2);
    const int q = 1 + static_cast<int>(rng() % 2);
    LiftingConfig lift{depth, p, q};
    const SignalModel model{
        testutil::random_matrix(rng, lift.lifted_state_dim(), lift.lifted_state_dim(), 0.5),
        testutil::random_matrix(rng, lift.lifted_state_dim(), lift.lifted_input_dim(), 0.5)};
    const AugmentedModel aug = augment_model(model, lift);
    HistoryBuffer buf(p, q, depth + 1);
    Vector x = testutil::random_vector(rng, lift.lifted_state_dim());
    Vector xa = Vector::Zero(lift.augmented_dim());
    xa.head(lift.lifted_state_dim()) = x;
    for (int k = 0; k < 20; ++k) {
      const Vector v = testutil::random_vector(rng, q);
      buf.push_input(v);
      x = model.A * x + model.B * lift_input(buf, depth);
      xa = aug.model.A * xa + aug.model.B * v;
      if ((xa.head(lift.lifted_state_dim()) - x).norm() > 1e-12 * (1.0 + x.norm())) {
        detail = "augmentation equivalence violated";
        return false;
      }
    }
  }

  detail = "commutation, homogeneity, reachability, augmentation";
  return true;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"linear benchmark closed loop", linear_benchmark},
      {"robot arm closed loop", robot_arm_benchmark},
      {"terminal-cost inequality", terminal_cost_inequality},
      {"proximal estimator convergence", estimator_convergence},
      {"controllability safeguard", controllability_safeguard},
      {"QP oracle equivalence", qp_oracle_equivalence},
      {"exact-predictor stabilization", exact_predictor_stabilization},
      {"structural properties", structural_properties},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string detail;
    bool ok = false;
    try {
      ok = criteria[i].run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s  [%zu] %s%s%s\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
