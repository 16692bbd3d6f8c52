#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gedi/constraints.hpp"
#include "gedi/learners.hpp"
#include "gedi/projection.hpp"

namespace gedi {

/// Bilevel alternation: a master step projects blended targets onto the
/// constraint set, a learner step refits on the projected targets.
struct MtConfig {
  int iterations = 10;
  bool harmonic_alpha = true;   // alpha_i = 1/i; otherwise alpha_constant
  double alpha_constant = 1.0;
  LearnerSpec learner;
  ProjectionOptions master;
};

struct MtTraceEntry {
  int iteration = 0;
  double alpha = 0.0;
  double master_objective = 0.0;   // (1/n)(||z-f||^2 + alpha ||z-y||^2)
  double master_violation = 0.0;   // constraint violation of the master output z
  double train_metric = 0.0;       // R^2 (regression) or accuracy (classification)
  double pred_indicator = 0.0;     // gedi of the refit model's predictions
  double pred_violation = 0.0;
};

struct MtResult {
  LearnerModel model;
  std::vector<MtTraceEntry> trace;
};

MtResult moving_targets(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_prot,
                        const Eigen::VectorXd& y, const ConstraintSpec& cs,
                        const MtConfig& cfg, Task task);

/// Lagrangian-dual penalized descent: full-batch gradient steps on
/// loss + lambda^T P, one multiplier ascent step per epoch.
struct SbrConfig {
  double rho = 1.0;    // multiplier ascent step
  double lr = 0.05;    // model gradient step
  int epochs = 1000;
  double tol = 1e-3;   // violations above this at exit flag non-convergence
  LearnerSpec learner; // Ridge => linear model, Logistic => sigmoid model
};

struct SbrTraceEntry {
  int epoch = 0;
  double loss = 0.0;
  double penalty = 0.0;  // lambda^T P after the epoch
  Eigen::VectorXd lambda;
  Eigen::VectorXd violation;
};

struct SbrResult {
  LearnerModel model;
  std::vector<SbrTraceEntry> trace;
  bool converged = false;
};

SbrResult sbr_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_prot,
                    const Eigen::VectorXd& y, const ConstraintSpec& cs,
                    const SbrConfig& cfg, Task task);

/// Gradient of the summed constraint violations with respect to the model
/// outputs. The map yhat -> alpha_tilde is a fixed matrix M, so the active
/// coarse penalty has gradient M^T sign(alpha_tilde); fine penalties
/// contribute row-wise. The subgradient at kinks is taken as 0.
Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& yhat, const Eigen::VectorXd& x_prot,
                                 const ConstraintSpec& cs);

}  // namespace gedi
