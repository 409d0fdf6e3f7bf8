#include "rhlearn/estimator.hpp"

#include <cmath>
#include <iostream>

namespace rhlearn {

RegressionData build_regression(const std::vector<Vector>& x_hist,
                                const std::vector<Vector>& u_hist, int window) {
  if (window < 1) throw ValidationError("regression window must be at least 1");
  if (static_cast<int>(x_hist.size()) < window + 1) {
    throw DimensionMismatch("need at least window+1 states");
  }
  if (static_cast<int>(u_hist.size()) < window) {
    throw DimensionMismatch("need at least window inputs");
  }
  const int n = static_cast<int>(x_hist.front().size());
  const int q = static_cast<int>(u_hist.front().size());
  const int cols = n * (n + q);

  RegressionData reg;
  reg.s = Vector(n * window);
  reg.R = Matrix::Zero(n * window, cols);
  for (int j = 0; j < window; ++j) {
    const Vector& xj = x_hist[j];
    const Vector& xprev = x_hist[j + 1];
    const Vector& uprev = u_hist[j];
    if (xj.size() != n || xprev.size() != n) throw DimensionMismatch("state dimension varies");
    if (uprev.size() != q) throw DimensionMismatch("input dimension varies");
    reg.s.segment(j * n, n) = xj;
    // Row block [xprev' (x) I, uprev' (x) I].
    for (int c = 0; c < n; ++c) {
      reg.R.block(j * n, c * n, n, n).diagonal().setConstant(xprev(c));
    }
    for (int c = 0; c < q; ++c) {
      reg.R.block(j * n, n * n + c * n, n, n).diagonal().setConstant(uprev(c));
    }
  }
  return reg;
}

BregmanGenerator BregmanGenerator::quadratic(Matrix p) {
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("generator weight must be positive definite");
  }
  BregmanGenerator g;
  g.P = std::move(p);
  return g;
}

BregmanGenerator BregmanGenerator::custom(std::function<double(const Vector&)> value,
                                          std::function<Vector(const Vector&)> gradient) {
  BregmanGenerator g;
  g.value = std::move(value);
  g.gradient = std::move(gradient);
  return g;
}

double BregmanGenerator::distance(const Vector& x, const Vector& y) const {
  if (x.size() != y.size()) throw DimensionMismatch("distance arguments differ in size");
  if (is_quadratic()) {
    const Vector d = x - y;
    return d.dot(P * d);
  }
  return value(x) - value(y) - (x - y).dot(gradient(y));
}

ResidualLoss ResidualLoss::quadratic(Matrix w) {
  Eigen::LLT<Matrix> llt(w);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("loss weight must be positive definite");
  }
  ResidualLoss l;
  l.W = std::move(w);
  return l;
}

ResidualLoss ResidualLoss::custom(std::function<double(const Vector&)> value,
                                  std::function<Vector(const Vector&)> gradient) {
  ResidualLoss l;
  l.value = std::move(value);
  l.gradient = std::move(gradient);
  return l;
}

namespace {

// Damped Newton on the proximal objective with finite-difference Hessian of
// the gradient; only used for non-quadratic losses or generators.
Theta proximal_step_iterative(const RegressionData& reg, const ResidualLoss& loss,
                              const BregmanGenerator& gen, const Theta& anchor) {
  const auto loss_value = [&](const Vector& e) {
    return loss.is_quadratic() ? e.dot(loss.W * e) : loss.value(e);
  };
  const auto loss_grad = [&](const Vector& e) -> Vector {
    return loss.is_quadratic() ? Vector(2.0 * (loss.W * e)) : loss.gradient(e);
  };
  const auto gen_grad = [&](const Vector& t) -> Vector {
    return gen.is_quadratic() ? Vector(2.0 * (gen.P * t)) : gen.gradient(t);
  };
  const Vector ga = gen_grad(anchor);
  const auto objective = [&](const Theta& t) {
    return loss_value(reg.s - reg.R * t) + gen.distance(t, anchor);
  };
  const auto gradient = [&](const Theta& t) -> Vector {
    return Vector(-reg.R.transpose() * loss_grad(reg.s - reg.R * t) + gen_grad(t) - ga);
  };

  Theta t = anchor;
  for (int iter = 0; iter < 100; ++iter) {
    const Vector g = gradient(t);
    if (g.norm() <= 1e-11 * (1.0 + reg.s.norm())) break;
    const long d = t.size();
    Matrix hess(d, d);
    const double h = 1e-6 * (1.0 + t.norm());
    for (long i = 0; i < d; ++i) {
      Theta tp = t;
      tp(i) += h;
      hess.col(i) = (gradient(tp) - g) / h;
    }
    hess = 0.5 * (hess + hess.transpose());
    Vector step = (hess + 1e-10 * Matrix::Identity(d, d)).ldlt().solve(-g);
    double alpha = 1.0;
    const double f0 = objective(t);
    while (alpha > 1e-8 && objective(t + alpha * step) > f0 - 1e-4 * alpha * (-g.dot(step))) {
      alpha *= 0.5;
    }
    t += alpha * step;
  }
  return t;
}

}  // namespace

Theta proximal_step(const RegressionData& reg, const ResidualLoss& loss,
                    const BregmanGenerator& gen, const Theta& anchor) {
  if (reg.R.rows() != reg.s.size()) throw DimensionMismatch("regression rows mismatch");
  if (reg.R.cols() != anchor.size()) throw DimensionMismatch("anchor length mismatch");

  if (!loss.is_quadratic() || !gen.is_quadratic()) {
    return proximal_step_iterative(reg, loss, gen, anchor);
  }

  // argmin (s-Rt)'W(s-Rt) + (t-a)'P(t-a) = (R'WR + P)^{-1} (R'Ws + Pa)
  const Matrix RtW = reg.R.transpose() * loss.W;
  const Matrix lhs = RtW * reg.R + gen.P;
  const Vector rhs = RtW * reg.s + gen.P * anchor;
  Eigen::LLT<Matrix> llt(lhs);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("proximal system factorization failed");
  }
  Theta t = llt.solve(rhs);
  if ((lhs * t - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) {
    throw NumericalFailure("proximal solve exceeded the optimality tolerance");
  }
  return t;
}

Estimator::Estimator(EstimatorConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.state_dim < 1 || cfg_.input_dim < 1) {
    throw ValidationError("estimator dimensions must be positive");
  }
  if (cfg_.input_dim > cfg_.state_dim) {
    std::cerr << "rhlearn: warning: lifted input dimension " << cfg_.input_dim
              << " exceeds the lifted state dimension " << cfg_.state_dim
              << "; the controllability grid is sized by the state dimension\n";
  }
  if (cfg_.window < 1) throw ValidationError("estimator window must be at least 1");
  if (cfg_.lambda_max <= 0.0 || cfg_.lambda_max >= 1.0) {
    throw ValidationError("lambda_max must lie in (0, 1)");
  }
  const int dim = cfg_.state_dim * (cfg_.state_dim + cfg_.input_dim);
  if (cfg_.theta0.size() == 0) {
    cfg_.theta0 = canonical_theta(cfg_.state_dim, cfg_.input_dim);
  }
  if (cfg_.theta0.size() != dim) throw ValidationError("theta0 has the wrong length");
  if (cfg_.W.size() == 0) cfg_.W = Matrix::Identity(cfg_.state_dim * cfg_.window,
                                                    cfg_.state_dim * cfg_.window);
  if (cfg_.P.size() == 0) cfg_.P = Matrix::Identity(dim, dim);
  if (!is_controllable(theta_to_model(cfg_.theta0, cfg_.state_dim, cfg_.input_dim),
                       cfg_.ctrb_tol)) {
    throw ValidationError("theta0 must decode to a controllable pair");
  }
  theta_ = cfg_.theta0;
}

SignalModel Estimator::model() const {
  return theta_to_model(theta_, cfg_.state_dim, cfg_.input_dim);
}

RegressionData Estimator::regression() const {
  std::vector<Vector> xs(x_hist_.begin(), x_hist_.end());
  std::vector<Vector> us(u_hist_.begin(), u_hist_.end());
  while (static_cast<int>(xs.size()) < cfg_.window + 1) xs.push_back(Vector::Zero(cfg_.state_dim));
  while (static_cast<int>(us.size()) < cfg_.window) us.push_back(Vector::Zero(cfg_.input_dim));
  return build_regression(xs, us, cfg_.window);
}

EstimatorDiagnostics Estimator::update(const Vector& x, const Vector& u_prev) {
  if (x.size() != cfg_.state_dim) throw DimensionMismatch("lifted state has wrong dimension");
  if (u_prev.size() != cfg_.input_dim) throw DimensionMismatch("lifted input has wrong dimension");

  x_hist_.push_front(x);
  if (static_cast<int>(x_hist_.size()) > cfg_.window + 1) x_hist_.pop_back();
  u_hist_.push_front(u_prev);
  if (static_cast<int>(u_hist_.size()) > cfg_.window) u_hist_.pop_back();

  const RegressionData reg = regression();

  EstimatorDiagnostics diag;
  const bool no_data = reg.R.isZero(0.0);
  if (!cfg_.frozen && !no_data) {
    const Theta star = proximal_step(reg, ResidualLoss::quadratic(cfg_.W),
                                     BregmanGenerator::quadratic(cfg_.P), theta_);
    diag.candidate_residual = (reg.s - reg.R * star).norm();
    const RestorationResult restored = restore_controllability(
        star, theta_, cfg_.state_dim, cfg_.input_dim, cfg_.lambda_max, cfg_.ctrb_tol);
    theta_ = restored.theta;
    diag.lambda_used = restored.lambda_used;
  } else {
    diag.candidate_residual = (reg.s - reg.R * theta_).norm();
  }
  diag.residual = (reg.s - reg.R * theta_).norm();
  diag.controllable = is_controllable(model(), cfg_.ctrb_tol);
  return diag;
}

}  // namespace rhlearn
