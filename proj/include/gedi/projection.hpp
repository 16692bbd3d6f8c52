#pragma once

#include <Eigen/Dense>

#include "gedi/constraints.hpp"
#include "gedi/qp.hpp"

namespace gedi {

struct ProjectionOptions {
  double feas_tol = kDefaultFeasTol;
  double qp_tol = 1e-9;
  int max_iter = 100000;
};

struct ProjectionResult {
  Eigen::VectorXd z;
  double objective = 0.0;         // ||z - y||^2 against the projection anchor
  Eigen::VectorXd violation;      // evaluate_constraint on z
  double total_violation = 0.0;
  bool satisfied = false;
  int iterations = 0;
  double wall_time_ms = 0.0;
  std::string method;

  // Classification only.
  int hamming_distance = 0;
  int repair_flips = 0;
  double relaxed_tol = 0.0;
};

/// Minimally adjusts the targets (squared distance) so the constraint holds.
/// Coarse mode encodes ||M z||_1 <= q through auxiliary variables and runs
/// ADMM; fine and exclusive modes are equality-dominant and run the exact
/// active-set path from the always-feasible mean anchor. Relative thresholds
/// are resolved against the y passed here.
ProjectionResult project_regression(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                    const ConstraintSpec& cs,
                                    const ProjectionOptions& opts = {});

/// The [0, 1]-relaxed projection used for classification targets: same
/// constraint encodings plus box bounds, no rounding. Anchor may be
/// fractional (model probabilities).
ProjectionResult project_relaxed(const Eigen::VectorXd& x, const Eigen::VectorXd& y0,
                                 const ConstraintSpec& cs,
                                 const ProjectionOptions& opts = {});

/// Relax-round-repair for binary targets: solves the [0, 1] relaxation,
/// rounds to {0, 1}, then greedily re-flips entries to pull the violation
/// under a tolerance relaxed by the single-flip quantization floor. Throws
/// RepairFailed when the violation still exceeds 10x that tolerance.
ProjectionResult project_classification(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                        const ConstraintSpec& cs,
                                        const ProjectionOptions& opts = {});

}  // namespace gedi
