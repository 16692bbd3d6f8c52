#pragma once

#include <Eigen/Dense>
#include <string>

#include "gedi/errors.hpp"

namespace gedi {

/// Convex projection problem: minimize 1/2 * sum_i w_i (z_i - anchor_i)^2
/// subject to eq_A z = eq_b, ineq_A z <= ineq_b and optional box bounds.
/// Weights default to all ones (plain squared distance); auxiliary variables
/// introduced by constraint encodings carry weight 0.
struct QpProblem {
  Eigen::VectorXd anchor;
  Eigen::VectorXd weights;  // empty = all ones

  Eigen::MatrixXd eq_A;
  Eigen::VectorXd eq_b;
  Eigen::MatrixXd ineq_A;
  Eigen::VectorXd ineq_b;

  Eigen::VectorXd lower;  // empty = unbounded
  Eigen::VectorXd upper;

  // Optional feasible point; enables the active-set path.
  Eigen::VectorXd start;

  Eigen::Index size() const { return anchor.size(); }
};

struct QpSolution {
  Eigen::VectorXd z;
  int iterations = 0;
  double max_violation = 0.0;  // largest constraint violation at return
  double objective = 0.0;
  bool polished = false;
  std::string method;  // "direct", "active_set" or "admm"
};

/// Solves the projection QP. Pure equality problems are solved in one KKT
/// step; inequality problems with a feasible start and unit weights use a
/// primal active-set method; everything else runs ADMM with an exact
/// equality-constrained polish step. Deterministic for fixed inputs.
///
/// Throws Infeasible when the constraints are detected inconsistent and
/// MaxIterations when the iteration budget runs out before reaching tol.
QpSolution solve_constrained_ls(const QpProblem& p, double tol = 1e-8,
                                int max_iter = 50000);

}  // namespace gedi
