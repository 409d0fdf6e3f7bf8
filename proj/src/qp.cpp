#include "rhlearn/qp.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace rhlearn {

namespace {

void check_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw NumericalFailure(std::string(name) + " contains non-finite entries");
  }
}

bool stationarity_ok(const EqQpProblem& p, const Vector& w, const Vector& lambda) {
  Vector grad = p.H * w + p.f;
  if (p.Aeq.rows() > 0) grad += p.Aeq.transpose() * lambda;
  return grad.norm() <= 1e-8 * (1.0 + p.f.norm());
}

bool feasibility_ok(const EqQpProblem& p, const Vector& w) {
  if (p.Aeq.rows() == 0) return true;
  return (p.Aeq * w - p.beq).norm() <= 1e-9 * (1.0 + p.beq.norm());
}

// Eliminates the constraints: w = w0 + Z y with Z an orthonormal basis of
// ker(Aeq), then solves the reduced positive definite system.
EqQpSolution solve_by_null_space(const EqQpProblem& p) {
  const auto d = p.H.rows();

  Eigen::JacobiSVD<Matrix> svd(p.Aeq, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const double smax = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  long rank = 0;
  for (long i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > 1e-12 * std::max(1.0, smax)) ++rank;
  }

  // Minimum-norm particular solution; detects inconsistent right-hand sides.
  Vector w0 = Vector::Zero(d);
  if (rank > 0) {
    Vector utb = svd.matrixU().transpose() * p.beq;
    Vector y = Vector::Zero(svd.singularValues().size());
    for (long i = 0; i < rank; ++i) y(i) = utb(i) / svd.singularValues()(i);
    w0 = svd.matrixV().leftCols(svd.singularValues().size()) * y;
  }
  if (!feasibility_ok(p, w0)) {
    throw InfeasibleConstraints("equality constraints are inconsistent");
  }

  EqQpSolution sol;
  if (rank == d) {
    sol.w = w0;
  } else {
    Matrix Z = svd.matrixV().rightCols(d - rank);
    Matrix Hr = Z.transpose() * p.H * Z;
    Eigen::LLT<Matrix> llt(Hr);
    if (llt.info() != Eigen::Success) {
      throw IndefiniteReducedHessian("reduced Hessian is not positive definite");
    }
    Vector y = llt.solve(-Z.transpose() * (p.H * w0 + p.f));
    sol.w = w0 + Z * y;
  }

  if (p.Aeq.rows() > 0) {
    sol.multipliers =
        p.Aeq.transpose().completeOrthogonalDecomposition().solve(-(p.H * sol.w + p.f));
  } else {
    sol.multipliers = Vector::Zero(0);
  }
  return sol;
}

}  // namespace

EqQpSolution solve_eq_qp(const EqQpProblem& p) {
  const auto d = p.H.rows();
  if (p.H.cols() != d) throw DimensionMismatch("H must be square");
  if (p.f.size() != d) throw DimensionMismatch("f length must match H");
  if (p.Aeq.rows() != p.beq.size()) throw DimensionMismatch("Aeq rows must match beq");
  if (p.Aeq.rows() > 0 && p.Aeq.cols() != d) throw DimensionMismatch("Aeq cols must match H");
  check_finite(p.H, "H");
  if ((p.H - p.H.transpose()).norm() > 1e-12 * (1.0 + p.H.norm())) {
    throw ValidationError("H is not symmetric");
  }

  EqQpProblem ps = p;
  ps.H = 0.5 * (p.H + p.H.transpose());

  EqQpSolution sol;
  const auto c = ps.Aeq.rows();
  if (c == 0) {
    Eigen::LDLT<Matrix> ldlt(ps.H);
    sol.w = ldlt.solve(-ps.f);
    sol.multipliers = Vector::Zero(0);
    const double dmin = ldlt.vectorD().minCoeff();
    const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || dmin < -1e-10 * std::max(1.0, dmax) ||
        !sol.w.allFinite() || !stationarity_ok(ps, sol.w, sol.multipliers)) {
      throw IndefiniteReducedHessian("unconstrained problem has no finite minimizer");
    }
  } else {
    // The KKT route is only safe when H is positive definite outright;
    // otherwise a nonsingular KKT system may hand back a saddle point.
    bool solved = false;
    Eigen::LLT<Matrix> hllt(ps.H);
    if (hllt.info() == Eigen::Success) {
      Matrix kkt = Matrix::Zero(d + c, d + c);
      kkt.topLeftCorner(d, d) = ps.H;
      kkt.topRightCorner(d, c) = ps.Aeq.transpose();
      kkt.bottomLeftCorner(c, d) = ps.Aeq;
      Vector rhs(d + c);
      rhs << -ps.f, ps.beq;

      Eigen::FullPivLU<Matrix> lu(kkt);
      if (lu.isInvertible()) {
        Vector wl = lu.solve(rhs);
        // Iterative refinement recovers the digits LU loses on the
        // ill-conditioned saddle systems the horizon problems produce.
        double best = (kkt * wl - rhs).norm();
        for (int iter = 0; iter < 3 && best > 0.0; ++iter) {
          const Vector corrected = wl + lu.solve(rhs - kkt * wl);
          const double res = (kkt * corrected - rhs).norm();
          if (res >= best) break;
          wl = corrected;
          best = res;
        }
        sol.w = wl.head(d);
        sol.multipliers = wl.tail(c);
        solved = sol.w.allFinite() && feasibility_ok(ps, sol.w) &&
                 stationarity_ok(ps, sol.w, sol.multipliers);
      }
    }
    if (!solved) {
      sol = solve_by_null_space(ps);
    }
  }

  sol.value = 0.5 * sol.w.dot(ps.H * sol.w) + ps.f.dot(sol.w);
  if (!std::isfinite(sol.value)) throw NumericalFailure("QP value is not finite");
  return sol;
}

Vector min_norm_least_squares(const Matrix& M, const Vector& b) {
  if (M.rows() != b.size()) throw DimensionMismatch("M rows must match b length");
  return M.completeOrthogonalDecomposition().solve(b);
}

int numerical_rank(const Matrix& M, double tol) {
  if (tol <= 0.0) throw ValidationError("rank tolerance must be positive");
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (long i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol * sv(0)) ++r;
  }
  return r;
}

}  // namespace rhlearn
