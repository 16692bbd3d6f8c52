#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "gedi/learners.hpp"
#include "test_util.hpp"

using namespace gedi;

TEST_CASE("plain least squares recovers exactly linear data") {
  testutil::Rng rng(60);
  const int n = 40, m = 3;
  Eigen::MatrixXd X(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
  Eigen::VectorXd w(m);
  w << 1.5, -2.0, 0.25;
  const Eigen::VectorXd y = (X * w).array() + 4.0;

  LearnerSpec spec;
  spec.kind = LearnerKind::Ridge;
  spec.l2 = 0.0;
  const LearnerModel model = fit(spec, X, y, Task::Regression);
  CHECK(model.coef.isApprox(w, 1e-9));
  CHECK(model.intercept == doctest::Approx(4.0).epsilon(1e-9));

  const Eigen::VectorXd preds = model.predict(X);
  const double sse = (y - preds).squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  CHECK(1.0 - sse / sst == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ridge solution zeroes the regularized gradient") {
  testutil::Rng rng(61);
  const int n = 60, m = 4;
  Eigen::MatrixXd X(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) X(i, j) = rng.normal();
  const Eigen::VectorXd y = rng.normal_vec(n);

  LearnerSpec spec;
  spec.kind = LearnerKind::Ridge;
  spec.l2 = 0.7;
  const LearnerModel model = fit(spec, X, y, Task::Regression);

  const Eigen::MatrixXd Xc = X.rowwise() - X.colwise().mean();
  const Eigen::VectorXd yc = y.array() - y.mean();
  const Eigen::VectorXd grad =
      Xc.transpose() * (Xc * model.coef - yc) + spec.l2 * model.coef;
  CHECK(grad.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("logistic orders probabilities with separable labels") {
  Eigen::MatrixXd X(2, 1);
  X << -1.0, 1.0;
  Eigen::VectorXd y(2);
  y << 0.0, 1.0;
  LearnerSpec spec;
  spec.kind = LearnerKind::Logistic;
  spec.lr = 0.5;
  spec.epochs = 500;
  const LearnerModel model = fit(spec, X, y, Task::Classification);
  const Eigen::VectorXd p = model.predict(X);
  CHECK(p[0] < 0.5);
  CHECK(p[1] > 0.5);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() <= 1.0);
}

TEST_CASE("logistic rejects single-class labels") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(6, 2);
  LearnerSpec spec;
  spec.kind = LearnerKind::Logistic;
  CHECK_THROWS_AS(fit(spec, X, Eigen::VectorXd::Ones(6), Task::Classification),
                  DegenerateLabels);
}

TEST_CASE("a single stump reproduces a step function threshold") {
  Eigen::MatrixXd X(8, 1);
  X << 0, 1, 2, 3, 10, 11, 12, 13;
  Eigen::VectorXd y(8);
  y << -1, -1, -1, -1, 1, 1, 1, 1;

  LearnerSpec spec;
  spec.kind = LearnerKind::GbStumps;
  spec.n_trees = 1;
  spec.shrinkage = 1.0;
  const LearnerModel model = fit(spec, X, y, Task::Regression);
  REQUIRE(model.stumps.size() == 1);

  // Brute-force best-split oracle over every midpoint.
  double best_sse = 1e300, best_thr = 0.0;
  for (int c = 1; c < 8; ++c) {
    const double thr = 0.5 * (X(c - 1, 0) + X(c, 0));
    double sl = 0, sr = 0;
    int nl = 0, nr = 0;
    for (int i = 0; i < 8; ++i) (X(i, 0) <= thr ? (sl += y[i], ++nl) : (sr += y[i], ++nr));
    double sse = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double mu = X(i, 0) <= thr ? sl / nl : sr / nr;
      sse += (y[i] - mu) * (y[i] - mu);
    }
    if (sse < best_sse) {
      best_sse = sse;
      best_thr = thr;
    }
  }
  CHECK(model.stumps[0].threshold == doctest::Approx(best_thr));
  CHECK(model.predict(X).isApprox(y, 1e-12));
}

TEST_CASE("boosted prediction equals base plus shrinkage times stump sum") {
  testutil::Rng rng(62);
  const int n = 50;
  Eigen::MatrixXd X(n, 2);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.uniform(-2.0, 2.0);
    X(i, 1) = rng.uniform(-2.0, 2.0);
  }
  const Eigen::VectorXd y =
      X.col(0).array().sin().matrix() + 0.5 * X.col(1).cwiseAbs();

  LearnerSpec spec;
  spec.kind = LearnerKind::GbStumps;
  spec.n_trees = 12;
  spec.shrinkage = 0.3;
  const LearnerModel model = fit(spec, X, y, Task::Regression);
  const Eigen::VectorXd preds = model.predict(X);

  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (const Stump& s : model.stumps)
      acc += X(i, s.feature) <= s.threshold ? s.left : s.right;
    CHECK(preds[i] == doctest::Approx(model.base_score + spec.shrinkage * acc).epsilon(1e-12));
  }
}

TEST_CASE("fits are bitwise deterministic") {
  testutil::Rng rng(63);
  const int n = 80;
  Eigen::MatrixXd X(n, 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
  Eigen::VectorXd y = rng.normal_vec(n);

  for (const char* text : {"ridge:0.1", "logistic:0.2,200", "gb:10,0.2"}) {
    const LearnerSpec spec = LearnerSpec::parse(text);
    const Task task = spec.kind == LearnerKind::Logistic ? Task::Classification
                                                         : Task::Regression;
    Eigen::VectorXd labels = y;
    if (task == Task::Classification)
      for (int i = 0; i < n; ++i) labels[i] = y[i] > 0.0 ? 1.0 : 0.0;

    const LearnerModel a = fit(spec, X, labels, task);
    const LearnerModel b = fit(spec, X, labels, task);
    const Eigen::VectorXd pa = a.predict(X);
    const Eigen::VectorXd pb = b.predict(X);
    CHECK(std::memcmp(pa.data(), pb.data(), sizeof(double) * n) == 0);
  }
}

TEST_CASE("prediction schema is enforced") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
  Eigen::VectorXd y = X.col(0);
  const LearnerModel model = fit(LearnerSpec::parse("ridge:0"), X, y, Task::Regression);
  Eigen::MatrixXd wrong = Eigen::MatrixXd::Random(5, 3);
  CHECK_THROWS_AS(model.predict(wrong), SchemaMismatch);
}

TEST_CASE("learner grammar") {
  CHECK(LearnerSpec::parse("ridge:0.5").l2 == doctest::Approx(0.5));
  const LearnerSpec lg = LearnerSpec::parse("logistic:0.3,400");
  CHECK(lg.lr == doctest::Approx(0.3));
  CHECK(lg.epochs == 400);
  const LearnerSpec gb = LearnerSpec::parse("gb:25,0.05");
  CHECK(gb.n_trees == 25);
  CHECK(gb.shrinkage == doctest::Approx(0.05));
  CHECK_THROWS_AS(LearnerSpec::parse("svm:1"), std::invalid_argument);
  CHECK_THROWS_AS(LearnerSpec::parse("ridge:-1"), std::invalid_argument);
}

TEST_CASE("non-finite training data is rejected") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(5, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Random(5);
  y[2] = std::nan("");
  CHECK_THROWS_AS(fit(LearnerSpec::parse("ridge:0"), X, y, Task::Regression), NonFiniteInput);
}
