#include "gedi/training.hpp"

#include <cmath>

namespace gedi {

namespace {

double train_metric(const Eigen::VectorXd& y, const Eigen::VectorXd& preds, Task task) {
  if (task == Task::Classification) {
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      hits += ((preds[i] >= 0.5) == (y[i] >= 0.5)) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
  }
  const double sse = (y - preds).squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  if (sst <= 0.0) return sse <= 0.0 ? 1.0 : 0.0;
  return 1.0 - sse / sst;
}

Eigen::VectorXd violations_of(const Eigen::VectorXd& alpha, const ConstraintSpec& cs) {
  if (cs.mode == ConstraintMode::Coarse) {
    Eigen::VectorXd v(1);
    v[0] = std::max(0.0, alpha.lpNorm<1>() - cs.bounds[0]);
    return v;
  }
  const Eigen::VectorXd q = cs.fine_bounds();
  return (alpha.cwiseAbs() - q).cwiseMax(0.0);
}

// Gradient with respect to the model outputs of lambda^T P(yhat); the
// subgradient at |.| kinks and at exact bound hits is 0.
Eigen::VectorXd weighted_penalty_gradient(const CoefficientMap& map,
                                          const Eigen::VectorXd& alpha,
                                          const ConstraintSpec& cs,
                                          const Eigen::VectorXd& lambda) {
  const int k = map.order();
  Eigen::VectorXd s = Eigen::VectorXd::Zero(k);
  if (cs.mode == ConstraintMode::Coarse) {
    if (alpha.lpNorm<1>() > cs.bounds[0]) {
      for (int j = 0; j < k; ++j)
        s[j] = lambda[0] * (alpha[j] > 0.0 ? 1.0 : (alpha[j] < 0.0 ? -1.0 : 0.0));
    }
  } else {
    const Eigen::VectorXd q = cs.fine_bounds();
    for (int j = 0; j < k; ++j)
      if (std::abs(alpha[j]) > q[j])
        s[j] = lambda[j] * (alpha[j] > 0.0 ? 1.0 : -1.0);
  }
  if ((s.array() == 0.0).all()) return Eigen::VectorXd::Zero(map.rows());
  return map.apply_transpose(s);
}

}  // namespace

MtResult moving_targets(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_prot,
                        const Eigen::VectorXd& y, const ConstraintSpec& cs,
                        const MtConfig& cfg, Task task) {
  if (cfg.iterations < 1) throw std::invalid_argument("moving targets needs iterations >= 1");
  if (X.rows() != y.size() || x_prot.size() != y.size())
    throw LengthMismatch("feature/protected/target lengths disagree");

  const ConstraintSpec abs = cs.resolved(x_prot, y);
  const KernelMatrix km = build_kernel(x_prot, abs.kernel);
  const CoefficientMap map = coefficient_map(km);
  const double n = static_cast<double>(y.size());

  MtResult out;
  out.model = fit(cfg.learner, X, y, task);  // theta_0 by pre-training

  for (int i = 1; i <= cfg.iterations; ++i) {
    const Eigen::VectorXd preds = out.model.predict(X);
    const double alpha = cfg.harmonic_alpha ? 1.0 / static_cast<double>(i) : cfg.alpha_constant;

    // argmin_z ||z - f||^2 + alpha ||z - y||^2 subject to the constraint is
    // the projection of the blend (f + alpha y) / (1 + alpha).
    const Eigen::VectorXd blend = (preds + alpha * y) / (1.0 + alpha);
    const ProjectionResult master =
        task == Task::Regression ? project_regression(x_prot, blend, abs, cfg.master)
                                 : project_relaxed(x_prot, blend, abs, cfg.master);
    const Eigen::VectorXd& z = master.z;

    out.model = fit(cfg.learner, X, z, task);
    const Eigen::VectorXd refit_preds = out.model.predict(X);

    MtTraceEntry t;
    t.iteration = i;
    t.alpha = alpha;
    t.master_objective = ((z - preds).squaredNorm() + alpha * (z - y).squaredNorm()) / n;
    t.master_violation = master.total_violation;
    t.train_metric = train_metric(y, refit_preds, task);
    t.pred_indicator = gedi(map, km, refit_preds).value;
    t.pred_violation = evaluate_constraint(map, refit_preds, abs).total_violation;
    out.trace.push_back(std::move(t));
  }
  return out;
}

SbrResult sbr_train(const Eigen::MatrixXd& X, const Eigen::VectorXd& x_prot,
                    const Eigen::VectorXd& y, const ConstraintSpec& cs,
                    const SbrConfig& cfg, Task task) {
  if (cfg.rho <= 0.0 || cfg.lr <= 0.0 || cfg.epochs < 1)
    throw std::invalid_argument("sbr needs rho > 0, lr > 0, epochs >= 1");
  if (cfg.learner.kind == LearnerKind::GbStumps)
    throw NonDifferentiableLearner("boosted stumps have no output gradient; use ridge or logistic");
  const bool use_sigmoid = cfg.learner.kind == LearnerKind::Logistic;
  if (task == Task::Classification && !use_sigmoid)
    throw std::invalid_argument("classification sbr needs the logistic learner");
  if (X.rows() != y.size() || x_prot.size() != y.size())
    throw LengthMismatch("feature/protected/target lengths disagree");

  const ConstraintSpec abs = cs.resolved(x_prot, y);
  const KernelMatrix km = build_kernel(x_prot, abs.kernel);
  const CoefficientMap map = coefficient_map(km);

  const Eigen::Index n = y.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::Index k_pen = abs.mode == ConstraintMode::Coarse ? 1 : map.order();

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  double intercept = 0.0;
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k_pen);  // null start

  const auto forward = [&](Eigen::VectorXd& raw, Eigen::VectorXd& yhat) {
    raw = (X * beta).array() + intercept;
    yhat = use_sigmoid
               ? raw.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); }).eval()
               : raw;
  };

  SbrResult out;
  out.trace.reserve(static_cast<std::size_t>(cfg.epochs));
  Eigen::VectorXd viol = Eigen::VectorXd::Zero(k_pen);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Eigen::VectorXd raw, yhat;
    forward(raw, yhat);

    double loss;
    Eigen::VectorXd grad_raw(n);
    if (task == Task::Regression) {
      const Eigen::VectorXd err = yhat - y;
      loss = err.squaredNorm() * inv_n;
      grad_raw = 2.0 * inv_n * err;
      if (use_sigmoid)
        grad_raw.array() *= yhat.array() * (1.0 - yhat.array());
    } else {
      // Binary cross-entropy on probabilities; classification indicators use
      // the predicted probabilities as well.
      loss = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p = std::clamp(yhat[i], 1e-12, 1.0 - 1e-12);
        loss -= (y[i] * std::log(p) + (1.0 - y[i]) * std::log(1.0 - p)) * inv_n;
      }
      grad_raw = (yhat - y) * inv_n;
    }

    const Eigen::VectorXd alpha = map.alpha(yhat);
    Eigen::VectorXd pen_grad = weighted_penalty_gradient(map, alpha, abs, lambda);
    if (use_sigmoid) pen_grad.array() *= yhat.array() * (1.0 - yhat.array());
    grad_raw += pen_grad;

    // The penalty subgradient scales with lambda and keeps a fixed magnitude
    // at the kinks, so plain descent needs the classic diminishing step:
    // normalize by the multiplier mass and decay with 1/sqrt(epoch).
    const double step =
        cfg.lr / ((1.0 + lambda.lpNorm<1>()) * std::sqrt(static_cast<double>(epoch)));
    const Eigen::VectorXd grad_beta = X.transpose() * grad_raw + cfg.learner.l2 * beta;
    const double grad_b = grad_raw.sum();
    beta -= step * grad_beta;
    intercept -= step * grad_b;

    // One ascent step per epoch on the violations at the new parameters.
    Eigen::VectorXd raw2, yhat2;
    forward(raw2, yhat2);
    viol = violations_of(map.alpha(yhat2), abs);
    lambda += cfg.rho * viol;

    SbrTraceEntry t;
    t.epoch = epoch;
    t.loss = loss;
    t.penalty = lambda.dot(viol);
    t.lambda = lambda;
    t.violation = viol;
    out.trace.push_back(std::move(t));
  }

  out.converged = (viol.array() <= cfg.tol).all();
  out.model.kind = cfg.learner.kind;
  out.model.task = task;
  out.model.n_features = X.cols();
  out.model.coef = std::move(beta);
  out.model.intercept = intercept;
  return out;
}

Eigen::VectorXd penalty_gradient(const Eigen::VectorXd& yhat, const Eigen::VectorXd& x_prot,
                                 const ConstraintSpec& cs) {
  if (yhat.size() != x_prot.size())
    throw LengthMismatch("yhat and protected attribute lengths disagree");
  if (cs.threshold_is_relative)
    throw std::invalid_argument("resolve relative thresholds before taking gradients");
  const KernelMatrix km = build_kernel(x_prot, cs.kernel);
  const CoefficientMap map = coefficient_map(km);
  const Eigen::VectorXd alpha = map.alpha(yhat);
  const Eigen::Index k_pen = cs.mode == ConstraintMode::Coarse ? 1 : map.order();
  return weighted_penalty_gradient(map, alpha, cs, Eigen::VectorXd::Ones(k_pen));
}

}  // namespace gedi
