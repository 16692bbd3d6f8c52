#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gedi/errors.hpp"
#include "gedi/indicators.hpp"

namespace gedi {

enum class LearnerKind { Ridge, Logistic, GbStumps };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Ridge;
  double l2 = 0.0;         // ridge / logistic
  double lr = 0.1;         // logistic full-batch step
  int epochs = 2000;       // logistic epoch cap
  int n_trees = 50;        // boosted stumps
  double shrinkage = 0.1;  // boosted stumps learning rate
  int max_bins = 64;       // candidate thresholds per feature
  std::uint64_t seed = 0;  // kept for API uniformity; all learners are deterministic

  /// CLI grammar: `ridge:<l2>`, `logistic:<lr>,<epochs>[,<l2>]`,
  /// `gb:<n_trees>,<lr>[,<max_bins>]`.
  static LearnerSpec parse(const std::string& text);
  std::string name() const;
  void validate() const;
};

struct Stump {
  int feature = 0;
  double threshold = 0.0;
  double left = 0.0;   // value when x <= threshold
  double right = 0.0;
};

/// Immutable fitted model; predict is deterministic and thread-safe.
struct LearnerModel {
  LearnerKind kind = LearnerKind::Ridge;
  Task task = Task::Regression;
  Eigen::Index n_features = 0;

  Eigen::VectorXd coef;  // linear models
  double intercept = 0.0;

  std::vector<Stump> stumps;  // boosted stumps
  double base_score = 0.0;
  double shrinkage = 0.1;

  /// Regression: values. Classification: probabilities in [0, 1].
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

/// Fits the requested learner. Ridge solves the regularized normal equations
/// exactly (plain least squares when l2 = 0); Logistic runs full-batch
/// gradient descent to gradient-norm <= 1e-6 or the epoch cap; GbStumps fits
/// depth-1 trees on residuals (regression) or log-odds gradients
/// (classification). Classification targets may be fractional in [0, 1]
/// (relaxed master-step labels).
LearnerModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, Task task);

Eigen::VectorXd predict(const LearnerModel& m, const Eigen::MatrixXd& X);

}  // namespace gedi
