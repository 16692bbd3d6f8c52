#include "gedi/learners.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gedi/parallel.hpp"

namespace gedi {

namespace {

std::vector<double> parse_numbers(const std::string& args, const std::string& ctx) {
  std::vector<double> vals;
  std::stringstream ss(args);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad number '" + tok + "' in " + ctx);
    }
  }
  return vals;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

LearnerSpec LearnerSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
  const std::vector<double> v = parse_numbers(args, "learner spec '" + text + "'");

  LearnerSpec s;
  if (kind == "ridge") {
    s.kind = LearnerKind::Ridge;
    if (v.size() > 1) throw std::invalid_argument("ridge takes at most one argument (l2)");
    if (!v.empty()) s.l2 = v[0];
  } else if (kind == "logistic") {
    s.kind = LearnerKind::Logistic;
    if (v.size() > 3) throw std::invalid_argument("logistic takes lr,epochs[,l2]");
    if (v.size() > 0) s.lr = v[0];
    if (v.size() > 1) s.epochs = static_cast<int>(v[1]);
    if (v.size() > 2) s.l2 = v[2];
  } else if (kind == "gb") {
    s.kind = LearnerKind::GbStumps;
    if (v.size() > 3) throw std::invalid_argument("gb takes n_trees,lr[,max_bins]");
    if (v.size() > 0) s.n_trees = static_cast<int>(v[0]);
    if (v.size() > 1) s.shrinkage = v[1];
    if (v.size() > 2) s.max_bins = static_cast<int>(v[2]);
  } else {
    throw std::invalid_argument("unknown learner '" + kind + "'");
  }
  s.validate();
  return s;
}

std::string LearnerSpec::name() const {
  switch (kind) {
    case LearnerKind::Ridge:
      return "ridge:" + std::to_string(l2);
    case LearnerKind::Logistic:
      return "logistic:" + std::to_string(lr) + "," + std::to_string(epochs);
    case LearnerKind::GbStumps:
      return "gb:" + std::to_string(n_trees) + "," + std::to_string(shrinkage);
  }
  return "?";
}

void LearnerSpec::validate() const {
  if (l2 < 0.0) throw std::invalid_argument("l2 must be >= 0");
  switch (kind) {
    case LearnerKind::Ridge:
      break;
    case LearnerKind::Logistic:
      if (lr <= 0.0 || epochs < 1)
        throw std::invalid_argument("logistic needs lr > 0 and epochs >= 1");
      break;
    case LearnerKind::GbStumps:
      if (n_trees < 1 || shrinkage <= 0.0 || max_bins < 2)
        throw std::invalid_argument("gb needs n_trees >= 1, lr > 0 and max_bins >= 2");
      break;
  }
}

namespace {

void check_fit_inputs(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size())
    throw LengthMismatch("feature matrix has " + std::to_string(X.rows()) +
                         " rows, targets " + std::to_string(y.size()));
  if (!X.allFinite() || !y.allFinite())
    throw NonFiniteInput("training data contains non-finite values");
  if (X.rows() < 1) throw EmptyInput("no training rows");
}

LearnerModel fit_ridge(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd& y, Task task) {
  const Eigen::Index m = X.cols();
  const Eigen::RowVectorXd x_mean = X.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd Xc = X.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;

  LearnerModel model;
  model.kind = LearnerKind::Ridge;
  model.task = task;
  model.n_features = m;
  if (spec.l2 > 0.0) {
    Eigen::MatrixXd gram = Xc.transpose() * Xc;
    gram.diagonal().array() += spec.l2;
    model.coef = Eigen::LDLT<Eigen::MatrixXd>(gram).solve(Xc.transpose() * yc);
  } else {
    model.coef = Xc.colPivHouseholderQr().solve(yc);
  }
  model.intercept = y_mean - x_mean.dot(model.coef);
  return model;
}

LearnerModel fit_logistic(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& y, Task task) {
  if (y.minCoeff() == y.maxCoeff())
    throw DegenerateLabels("logistic regression needs at least two label values");

  const Eigen::Index n = X.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.cols());
  double intercept = 0.0;

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    const Eigen::VectorXd p =
        ((X * beta).array() + intercept).unaryExpr([](double v) { return sigmoid(v); });
    const Eigen::VectorXd err = (p - y) * inv_n;
    Eigen::VectorXd grad = X.transpose() * err + spec.l2 * beta;
    const double grad_b = err.sum();
    const double gnorm = std::max(grad.cwiseAbs().maxCoeff(), std::abs(grad_b));
    if (gnorm <= 1e-6) break;
    beta -= spec.lr * grad;
    intercept -= spec.lr * grad_b;
  }

  LearnerModel model;
  model.kind = LearnerKind::Logistic;
  model.task = task;
  model.n_features = X.cols();
  model.coef = std::move(beta);
  model.intercept = intercept;
  return model;
}

struct SplitResult {
  double score = -1.0;  // explained sum of squares; higher is better
  double threshold = 0.0;
  double left = 0.0, right = 0.0;
};

// Best single split of one feature against the residuals, scanning either
// every midpoint between distinct values or max_bins quantile cuts.
SplitResult best_split_for_feature(const Eigen::VectorXd& x, const Eigen::VectorXd& r,
                                   int max_bins) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return x[a] < x[b]; });

  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i)
    prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + r[order[static_cast<std::size_t>(i)]];
  const double total = prefix.back();

  // Candidate boundaries: positions where the sorted value changes.
  std::vector<Eigen::Index> cuts;
  for (Eigen::Index i = 1; i < n; ++i)
    if (x[order[static_cast<std::size_t>(i)]] > x[order[static_cast<std::size_t>(i - 1)]])
      cuts.push_back(i);
  if (cuts.empty()) return {};

  // Thin to ~max_bins evenly spaced candidates when there are too many.
  if (static_cast<int>(cuts.size()) > max_bins) {
    std::vector<Eigen::Index> thinned;
    thinned.reserve(static_cast<std::size_t>(max_bins));
    const double step = static_cast<double>(cuts.size()) / static_cast<double>(max_bins);
    for (int j = 0; j < max_bins; ++j) {
      const auto idx = static_cast<std::size_t>(std::floor(step * (j + 0.5)));
      thinned.push_back(cuts[std::min(idx, cuts.size() - 1)]);
    }
    thinned.erase(std::unique(thinned.begin(), thinned.end()), thinned.end());
    cuts = std::move(thinned);
  }

  SplitResult best;
  for (const Eigen::Index c : cuts) {
    const double nl = static_cast<double>(c);
    const double nr = static_cast<double>(n - c);
    const double sl = prefix[static_cast<std::size_t>(c)];
    const double sr = total - sl;
    const double score = sl * sl / nl + sr * sr / nr;
    if (score > best.score + 1e-15) {
      best.score = score;
      best.threshold = 0.5 * (x[order[static_cast<std::size_t>(c - 1)]] +
                              x[order[static_cast<std::size_t>(c)]]);
      best.left = sl / nl;
      best.right = sr / nr;
    }
  }
  return best;
}

LearnerModel fit_gb_stumps(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& y, Task task) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();

  LearnerModel model;
  model.kind = LearnerKind::GbStumps;
  model.task = task;
  model.n_features = m;
  model.shrinkage = spec.shrinkage;

  if (task == Task::Regression) {
    model.base_score = y.mean();
  } else {
    const double p = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(p / (1.0 - p));
  }

  Eigen::VectorXd raw = Eigen::VectorXd::Constant(n, model.base_score);
  Eigen::VectorXd residual(n);
  const bool nested = omp_in_parallel();

  for (int t = 0; t < spec.n_trees; ++t) {
    if (task == Task::Regression) {
      residual = y - raw;
    } else {
      residual = y - raw.unaryExpr([](double v) { return sigmoid(v); });
    }

    std::vector<SplitResult> per_feature(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(static) if (!nested && m > 1)
    for (Eigen::Index f = 0; f < m; ++f)
      per_feature[static_cast<std::size_t>(f)] =
          best_split_for_feature(X.col(f), residual, spec.max_bins);

    // Deterministic argmax: first feature wins ties.
    int best_f = -1;
    double best_score = 0.0;
    for (Eigen::Index f = 0; f < m; ++f) {
      const auto& s = per_feature[static_cast<std::size_t>(f)];
      if (s.score > best_score + 1e-15) {
        best_score = s.score;
        best_f = static_cast<int>(f);
      }
    }
    if (best_f < 0) break;  // nothing left to explain

    const auto& s = per_feature[static_cast<std::size_t>(best_f)];
    model.stumps.push_back({best_f, s.threshold, s.left, s.right});
    for (Eigen::Index i = 0; i < n; ++i)
      raw[i] += spec.shrinkage * (X(i, best_f) <= s.threshold ? s.left : s.right);
  }
  return model;
}

}  // namespace

LearnerModel fit(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, Task task) {
  spec.validate();
  check_fit_inputs(X, y);
  if (task == Task::Classification && (y.minCoeff() < 0.0 || y.maxCoeff() > 1.0))
    throw std::invalid_argument("classification targets must lie in [0, 1]");

  switch (spec.kind) {
    case LearnerKind::Ridge:
      return fit_ridge(spec, X, y, task);
    case LearnerKind::Logistic:
      return fit_logistic(spec, X, y, task);
    case LearnerKind::GbStumps:
      return fit_gb_stumps(spec, X, y, task);
  }
  throw std::logic_error("unreachable");
}

Eigen::VectorXd LearnerModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features)
    throw SchemaMismatch("model expects " + std::to_string(n_features) +
                         " features, got " + std::to_string(X.cols()));
  if (!X.allFinite()) throw NonFiniteInput("prediction input contains non-finite values");

  Eigen::VectorXd raw;
  if (kind == LearnerKind::GbStumps) {
    raw = Eigen::VectorXd::Constant(X.rows(), base_score);
    const bool nested = omp_in_parallel();
#pragma omp parallel for schedule(static) if (!nested && X.rows() > 4096)
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double acc = 0.0;
      for (const Stump& s : stumps)
        acc += X(i, s.feature) <= s.threshold ? s.left : s.right;
      raw[i] += shrinkage * acc;
    }
  } else {
    raw = (X * coef).array() + intercept;
  }

  if (task == Task::Classification) {
    if (kind == LearnerKind::Logistic || kind == LearnerKind::GbStumps)
      return raw.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return raw.cwiseMax(0.0).cwiseMin(1.0);  // linear model clamped to probabilities
  }
  return raw;
}

Eigen::VectorXd predict(const LearnerModel& m, const Eigen::MatrixXd& X) {
  return m.predict(X);
}

}  // namespace gedi
