#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gedi/qp.hpp"
#include "test_util.hpp"

using namespace gedi;

TEST_CASE("no constraints: the anchor is the solution") {
  QpProblem p;
  p.anchor = Eigen::VectorXd::LinSpaced(5, -2.0, 2.0);
  const QpSolution s = solve_constrained_ls(p);
  CHECK(s.z.isApprox(p.anchor));
  CHECK(s.objective == doctest::Approx(0.0));
}

TEST_CASE("single mean equality, hand-derived Lagrangian solution") {
  QpProblem p;
  p.anchor = Eigen::VectorXd::Ones(2);
  p.eq_A = Eigen::MatrixXd::Constant(1, 2, 0.5);  // mean(z) = 0
  p.eq_b = Eigen::VectorXd::Zero(1);
  const QpSolution s = solve_constrained_ls(p);
  CHECK(s.z[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.z[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.method == "direct");
}

TEST_CASE("interior anchor is returned untouched") {
  QpProblem p;
  p.anchor = Eigen::VectorXd::Constant(3, 0.1);
  p.ineq_A = Eigen::MatrixXd::Identity(3, 3);
  p.ineq_b = Eigen::VectorXd::Ones(3);
  const QpSolution s = solve_constrained_ls(p);
  CHECK(s.z == p.anchor);
  CHECK(s.iterations == 0);
}

TEST_CASE("halfplane projection via the active set") {
  QpProblem p;
  p.anchor = Eigen::VectorXd(2);
  p.anchor << 2.0, 0.0;
  p.ineq_A = Eigen::MatrixXd::Ones(1, 2);  // z1 + z2 <= 1
  p.ineq_b = Eigen::VectorXd::Ones(1);
  p.start = Eigen::VectorXd::Zero(2);
  const QpSolution s = solve_constrained_ls(p);
  CHECK(s.method == "active_set");
  CHECK(s.z[0] == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(s.z[1] == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("box projection via ADMM with polish") {
  QpProblem p;
  p.anchor = Eigen::VectorXd(2);
  p.anchor << 2.0, -1.0;
  p.lower = Eigen::VectorXd::Zero(2);
  p.upper = Eigen::VectorXd::Ones(2);
  const QpSolution s = solve_constrained_ls(p, 1e-9);
  CHECK(s.z[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(s.z[1] == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(s.max_violation <= 1e-9);
}

TEST_CASE("equality plus binding inequality") {
  // min ||z - (1, 1, 1)||^2  s.t.  z1 + z2 + z3 = 0,  z1 <= -1.
  // Without the inequality the answer is (0, 0, 0); with it z1 = -1 binds and
  // the remainder splits the slack: z = (-1, 1/2, 1/2).
  QpProblem p;
  p.anchor = Eigen::VectorXd::Ones(3);
  p.eq_A = Eigen::MatrixXd::Ones(1, 3);
  p.eq_b = Eigen::VectorXd::Zero(1);
  p.ineq_A = Eigen::MatrixXd::Zero(1, 3);
  p.ineq_A(0, 0) = 1.0;
  p.ineq_b = Eigen::VectorXd::Constant(1, -1.0);
  const QpSolution s = solve_constrained_ls(p, 1e-10);
  CHECK(s.z[0] == doctest::Approx(-1.0).epsilon(1e-8));
  CHECK(s.z[1] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(s.z[2] == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("dependent equality rows are dropped, inconsistent ones rejected") {
  QpProblem p;
  p.anchor = Eigen::VectorXd::Ones(3);
  p.eq_A = Eigen::MatrixXd(2, 3);
  p.eq_A << 1, 1, 0, 2, 2, 0;  // same hyperplane twice
  p.eq_b = Eigen::VectorXd(2);
  p.eq_b << 1, 2;
  const QpSolution s = solve_constrained_ls(p);
  CHECK((p.eq_A.topRows(1) * s.z)(0) == doctest::Approx(1.0).epsilon(1e-10));

  p.eq_b << 1, 3;  // now contradictory
  CHECK_THROWS_AS(solve_constrained_ls(p), Infeasible);
}

TEST_CASE("crossed box bounds are infeasible") {
  QpProblem p;
  p.anchor = Eigen::VectorXd::Zero(2);
  p.lower = Eigen::VectorXd::Ones(2);
  p.upper = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(solve_constrained_ls(p), Infeasible);
}

TEST_CASE("random low-dimensional problems agree with a dense grid oracle") {
  testutil::Rng rng(40);
  for (int rep = 0; rep < 5; ++rep) {
    QpProblem p;
    p.anchor = rng.uniform_vec(2, -1.0, 1.0) * 2.0;
    p.ineq_A = Eigen::MatrixXd(2, 2);
    p.ineq_A << rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), -rng.uniform(0.2, 1.0),
        rng.uniform(0.2, 1.0);
    p.ineq_b = Eigen::VectorXd(2);
    p.ineq_b << rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5);
    p.start = Eigen::VectorXd::Zero(2);  // not necessarily feasible; solver checks

    QpSolution s;
    try {
      s = solve_constrained_ls(p, 1e-10);
    } catch (const Infeasible&) {
      continue;
    }

    // Dense scan of the feasible square.
    double best = 1e300;
    for (int i = 0; i <= 400; ++i) {
      for (int j = 0; j <= 400; ++j) {
        Eigen::VectorXd z(2);
        z << -4.0 + 8.0 * i / 400.0, -4.0 + 8.0 * j / 400.0;
        if (((p.ineq_A * z - p.ineq_b).array() <= 1e-12).all())
          best = std::min(best, 0.5 * (z - p.anchor).squaredNorm());
      }
    }
    CHECK(s.objective <= best + 1e-3);
    CHECK(s.max_violation <= 1e-8);
  }
}
