#pragma once

#include <Eigen/Dense>

#include "rhlearn/errors.hpp"

namespace rhlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Relative singular-value cutoff used by rank tests throughout the library.
inline constexpr double kDefaultRankTol = 1e-8;

/// Equality-constrained quadratic program
///
///   minimize  0.5 w'Hw + f'w   subject to  Aeq w = beq.
///
/// H must be symmetric (within 1e-12 relative) and positive semidefinite on
/// the null space of Aeq. Aeq may be empty (unconstrained problem).
/// Note the 0.5 factor: callers that work with plain w'Hw objectives scale
/// H by two before handing the problem over.
struct EqQpProblem {
  Matrix H;
  Vector f;
  Matrix Aeq;
  Vector beq;
};

struct EqQpSolution {
  Vector w;
  double value = 0.0;   // 0.5 w'Hw + f'w at the minimizer
  Vector multipliers;   // lambda with Hw + f + Aeq'lambda = 0
};

/// Solves an equality-constrained QP via an LU factorization of the KKT
/// system, falling back to explicit null-space elimination when the KKT
/// matrix is singular (rank-deficient constraints).
///
/// Throws InfeasibleConstraints if Aeq w = beq has no solution and
/// IndefiniteReducedHessian if the reduced Hessian is not positive definite.
EqQpSolution solve_eq_qp(const EqQpProblem& p);

/// Minimum-norm least-squares solution: the x minimizing |Mx - b| that has
/// the smallest |x| among all minimizers (pseudoinverse solution).
Vector min_norm_least_squares(const Matrix& M, const Vector& b);

/// Number of singular values above tol * sigma_max. Zero matrices (and
/// empty matrices) have rank 0.
int numerical_rank(const Matrix& M, double tol = kDefaultRankTol);

}  // namespace rhlearn
