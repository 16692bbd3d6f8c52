#include "gedi/projection.hpp"

#include <chrono>
#include <cmath>

#include "gedi/parallel.hpp"

namespace gedi {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Encoded {
  QpProblem qp;
  bool has_aux = false;  // coarse: k trailing auxiliary variables
};

// Inequality/equality rows for fine-grained bounds |M_j z| <= q_j; zero
// bounds become equalities so the active-set path never sees a degenerate
// +-pair.
void encode_fine_rows(const CoefficientMap& map, const Eigen::VectorXd& q,
                      QpProblem& qp) {
  const Eigen::Index n = map.rows();
  const int k = map.order();
  int n_eq = 0, n_in = 0;
  for (int j = 0; j < k; ++j) (q[j] == 0.0 ? n_eq : n_in) += 1;

  qp.eq_A.resize(n_eq, n);
  qp.eq_b = Eigen::VectorXd::Zero(n_eq);
  qp.ineq_A.resize(2 * n_in, n);
  qp.ineq_b.resize(2 * n_in);
  int e = 0, i = 0;
  for (int j = 0; j < k; ++j) {
    const auto row = map.Mt.col(j).transpose();
    if (q[j] == 0.0) {
      qp.eq_A.row(e++) = row;
    } else {
      qp.ineq_A.row(2 * i) = row;
      qp.ineq_b[2 * i] = q[j];
      qp.ineq_A.row(2 * i + 1) = -row;
      qp.ineq_b[2 * i + 1] = q[j];
      ++i;
    }
  }
}

// Optimized exclusive encoding for polynomial kernels: the k-1 covariance
// identities cov(x^j, x) cov(x, z) = cov(x^j, z) var(x) plus a band on the
// degree-1 covariance. Equivalent to fine bounds (q1, 0, ..., 0).
void encode_exclusive_poly(const KernelMatrix& km, double q1, QpProblem& qp) {
  const Eigen::Index n = km.rows();
  const int k = km.order();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::VectorXd c1 = km.centered.col(0);
  const double var_x = c1.squaredNorm() * inv_n;

  qp.eq_A.resize(k - 1, n);
  qp.eq_b = Eigen::VectorXd::Zero(k - 1);
  for (int j = 2; j <= k; ++j) {
    const Eigen::VectorXd cj = km.centered.col(j - 1);
    const double cov_j1 = cj.dot(c1) * inv_n;
    qp.eq_A.row(j - 2) = (var_x * cj - cov_j1 * c1).transpose() * inv_n;
  }
  qp.ineq_A.resize(2, n);
  qp.ineq_b.resize(2);
  qp.ineq_A.row(0) = c1.transpose() * inv_n;
  qp.ineq_b[0] = q1 * var_x;
  qp.ineq_A.row(1) = -c1.transpose() * inv_n;
  qp.ineq_b[1] = q1 * var_x;
}

// Coarse ||M z||_1 <= q through auxiliary certificates t_j >= +-(M z)_j,
// sum t <= q. Variables are (z, t), with t rescaled by the row norms of M so
// the inequality rows are balanced between the z and t blocks.
void encode_coarse_aux(const CoefficientMap& map, double q, const Eigen::VectorXd& y0,
                       QpProblem& qp) {
  const Eigen::Index n = map.rows();
  const int k = map.order();
  qp.anchor.resize(n + k);
  qp.anchor << y0, Eigen::VectorXd::Zero(k);
  qp.weights.resize(n + k);
  qp.weights << Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(k);

  qp.ineq_A = Eigen::MatrixXd::Zero(2 * k + 1, n + k);
  qp.ineq_b.resize(2 * k + 1);
  for (int j = 0; j < k; ++j) {
    const double scale = std::max(map.Mt.col(j).norm(), 1e-30);
    qp.ineq_A.block(2 * j, 0, 1, n) = map.Mt.col(j).transpose() / scale;
    qp.ineq_A(2 * j, n + j) = -1.0;
    qp.ineq_b[2 * j] = 0.0;
    qp.ineq_A.block(2 * j + 1, 0, 1, n) = -map.Mt.col(j).transpose() / scale;
    qp.ineq_A(2 * j + 1, n + j) = -1.0;
    qp.ineq_b[2 * j + 1] = 0.0;
    qp.ineq_A(2 * k, n + j) = scale;
  }
  qp.ineq_b[2 * k] = q;
}

Encoded encode(const CoefficientMap& map, const KernelMatrix& km,
               const ConstraintSpec& cs, const Eigen::VectorXd& y0) {
  Encoded enc;
  switch (cs.mode) {
    case ConstraintMode::Coarse:
      if (cs.bounds[0] == 0.0) {
        // Zero radius pins every coefficient; use the exact equality path.
        enc.qp.anchor = y0;
        encode_fine_rows(map, Eigen::VectorXd::Zero(map.order()), enc.qp);
      } else {
        encode_coarse_aux(map, cs.bounds[0], y0, enc.qp);
        enc.has_aux = true;
      }
      break;
    case ConstraintMode::Fine:
      enc.qp.anchor = y0;
      encode_fine_rows(map, cs.bounds, enc.qp);
      break;
    case ConstraintMode::Exclusive:
      enc.qp.anchor = y0;
      if (cs.kernel.family == KernelFamily::Polynomial)
        encode_exclusive_poly(km, cs.bounds[0], enc.qp);
      else
        encode_fine_rows(map, cs.fine_bounds(), enc.qp);
      break;
  }
  return enc;
}

// Exact face re-solve for the coarse path, in coefficient space: the optimal
// z differs from the anchor only within the row space of M, so the problem
// reduces to a k-dimensional QP over the L1 ball whose active face the ADMM
// point identifies.
bool coarse_face_polish(const CoefficientMap& map, const Eigen::VectorXd& y0, double q,
                        Eigen::VectorXd& z) {
  const int k = map.order();
  const Eigen::MatrixXd gram = map.Mt.transpose() * map.Mt;  // M M^T
  const Eigen::LDLT<Eigen::MatrixXd> gram_ldlt(gram);
  const Eigen::VectorXd a0 = map.alpha(y0);
  const Eigen::VectorXd a_now = map.alpha(z);

  const double scale = std::max(1e-12, a_now.cwiseAbs().maxCoeff());
  std::vector<int> support;
  Eigen::VectorXd sign = Eigen::VectorXd::Zero(k);
  for (int j = 0; j < k; ++j) {
    if (std::abs(a_now[j]) > 1e-7 * scale) {
      sign[j] = a_now[j] > 0.0 ? 1.0 : -1.0;
      support.push_back(j);
    }
  }
  if (support.empty()) return false;

  // minimize (a - a0)^T B (a - a0) with B = (M M^T)^-1 over the face
  // {a_j = 0 off-support, sum sign_j a_j = q}.
  const Eigen::MatrixXd B = gram_ldlt.solve(Eigen::MatrixXd::Identity(k, k));
  const auto s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd sys(s + 1, s + 1);
  Eigen::VectorXd rhs(s + 1);
  for (Eigen::Index r = 0; r < s; ++r) {
    for (Eigen::Index c = 0; c < s; ++c) sys(r, c) = B(support[r], support[c]);
    sys(r, s) = sign[support[r]];
    rhs[r] = (B * a0)[support[r]];
  }
  for (Eigen::Index c = 0; c < s; ++c) sys(s, c) = sign[support[c]];
  sys(s, s) = 0.0;
  rhs[s] = q;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(k);
  for (Eigen::Index j = 0; j < s; ++j) alpha[support[j]] = sol[j];
  const double theta = sol[s];

  // KKT of the L1-ball face: multiplier >= 0, coefficients keep their sign,
  // zero coordinates dual-feasible.
  if (theta < -1e-10) return false;
  for (int j : support)
    if (alpha[j] * sign[j] < -1e-12) return false;
  const Eigen::VectorXd grad = B * (alpha - a0);
  for (int j = 0; j < k; ++j)
    if (sign[j] == 0.0 && std::abs(grad[j]) > theta + 1e-9) return false;

  // Lift back: the closest z with M z = alpha.
  const Eigen::VectorXd cand = y0 - map.Mt * gram_ldlt.solve(a0 - alpha);
  const double old_gap = (z - y0).squaredNorm();
  const double new_gap = (cand - y0).squaredNorm();
  if (!cand.allFinite() || new_gap > old_gap + 1e-7 * (1.0 + old_gap)) return false;
  z = cand;
  return true;
}

ProjectionResult run_projection(const CoefficientMap& map, const KernelMatrix& km,
                                const Eigen::VectorXd& y0, const ConstraintSpec& cs,
                                const ProjectionOptions& opts, bool boxed) {
  const auto t0 = Clock::now();
  const Eigen::Index n = y0.size();

  ProjectionResult res;
  const ConstraintReport before = evaluate_constraint(map, y0, cs, 0.0, opts.feas_tol);
  const bool anchor_feasible_and_boxed_ok =
      before.satisfied && (!boxed || ((y0.array() >= 0.0).all() && (y0.array() <= 1.0).all()));
  if (anchor_feasible_and_boxed_ok) {
    res.z = y0;
    res.violation = before.violation;
    res.total_violation = before.total_violation;
    res.satisfied = true;
    res.method = "noop";
    res.wall_time_ms = ms_since(t0);
    return res;
  }

  Encoded enc = encode(map, km, cs, y0);
  if (enc.qp.anchor.size() == 0) enc.qp.anchor = y0;
  const Eigen::Index nv = enc.qp.anchor.size();

  if (boxed) {
    enc.qp.lower = Eigen::VectorXd::Constant(nv, -std::numeric_limits<double>::infinity());
    enc.qp.upper = Eigen::VectorXd::Constant(nv, std::numeric_limits<double>::infinity());
    enc.qp.lower.head(n).setZero();
    enc.qp.upper.head(n).setOnes();
  } else if (!enc.has_aux) {
    // The mean vector zeroes every coefficient, so it is always feasible.
    enc.qp.start = Eigen::VectorXd::Constant(n, par::mean({y0.data(), static_cast<std::size_t>(n)}));
  }

  QpSolution sol = solve_constrained_ls(enc.qp, opts.qp_tol, opts.max_iter);
  res.z = sol.z.head(n);
  res.iterations = sol.iterations;
  res.method = sol.method;

  if (enc.has_aux && !boxed) {
    if (coarse_face_polish(map, y0, cs.bounds[0], res.z)) res.method += "+face";
  }

  const ConstraintReport after = evaluate_constraint(map, res.z, cs, 0.0, opts.feas_tol);
  res.violation = after.violation;
  res.total_violation = after.total_violation;
  res.satisfied = after.satisfied;
  res.objective = (res.z - y0).squaredNorm();
  res.wall_time_ms = ms_since(t0);
  return res;
}

void check_xy(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw LengthMismatch("x has " + std::to_string(x.size()) + " entries, y has " +
                         std::to_string(y.size()));
  if (!y.allFinite()) throw NonFiniteInput("targets contain non-finite values");
}

}  // namespace

ProjectionResult project_regression(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                    const ConstraintSpec& cs, const ProjectionOptions& opts) {
  check_xy(x, y);
  const ConstraintSpec abs = cs.resolved(x, y);
  const KernelMatrix km = build_kernel(x, abs.kernel);
  const CoefficientMap map = coefficient_map(km);
  return run_projection(map, km, y, abs, opts, /*boxed=*/false);
}

ProjectionResult project_relaxed(const Eigen::VectorXd& x, const Eigen::VectorXd& y0,
                                 const ConstraintSpec& cs, const ProjectionOptions& opts) {
  check_xy(x, y0);
  const ConstraintSpec abs = cs.resolved(x, y0);
  const KernelMatrix km = build_kernel(x, abs.kernel);
  const CoefficientMap map = coefficient_map(km);
  return run_projection(map, km, y0, abs, opts, /*boxed=*/true);
}

ProjectionResult project_classification(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                        const ConstraintSpec& cs,
                                        const ProjectionOptions& opts) {
  check_xy(x, y);
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0.0 && y[i] != 1.0)
      throw std::invalid_argument("classification targets must be 0/1");

  const auto t0 = Clock::now();
  const ConstraintSpec abs = cs.resolved(x, y);
  const KernelMatrix km = build_kernel(x, abs.kernel);
  const CoefficientMap map = coefficient_map(km);

  ProjectionResult relaxed = run_projection(map, km, y, abs, opts, /*boxed=*/true);
  const Eigen::VectorXd z_rel = relaxed.z;
  const Eigen::Index n = y.size();

  // Nearest rounding; the repair passes below do the constraint-aware work.
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = z_rel[i] >= 0.5 ? 1.0 : 0.0;

  // One flip moves alpha by a row of M^T; violations cannot be positioned
  // more precisely than that quantization floor.
  double granularity = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    granularity = std::max(granularity, map.Mt.row(i).cwiseAbs().sum());
  const double relaxed_tol = std::max(opts.feas_tol, granularity);

  const bool coarse = abs.mode == ConstraintMode::Coarse;
  const Eigen::VectorXd q = coarse ? abs.bounds : abs.fine_bounds();
  const auto viol_of = [&](const Eigen::VectorXd& alpha) {
    if (coarse) return std::max(0.0, alpha.lpNorm<1>() - q[0]);
    return (alpha.cwiseAbs() - q).cwiseMax(0.0).sum();
  };

  Eigen::VectorXd alpha = map.alpha(z);
  double viol = viol_of(alpha);
  int flips = 0;
  const int max_flips = static_cast<int>(4 * n);
  // Repair toward the exact tolerance; relaxed_tol only gates acceptance.
  while (viol > opts.feas_tol && flips < max_flips) {
    double best_viol = viol - 1e-15;
    Eigen::Index best_i = -1;
    double best_margin = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double delta = z[i] == 0.0 ? 1.0 : -1.0;
      const Eigen::VectorXd cand = alpha + delta * map.Mt.row(i).transpose();
      const double v = viol_of(cand);
      const double margin = std::abs(z_rel[i] - 0.5);
      // Prefer the biggest violation drop; break ties toward low-confidence
      // entries, then the lowest index.
      if (v < best_viol - 1e-15 ||
          (v < best_viol + 1e-15 && best_i >= 0 && margin < best_margin)) {
        best_viol = v;
        best_i = i;
        best_margin = margin;
      }
    }
    if (best_i < 0) break;  // no strict improvement available
    const double delta = z[best_i] == 0.0 ? 1.0 : -1.0;
    alpha += delta * map.Mt.row(best_i).transpose();
    z[best_i] += delta;
    viol = viol_of(alpha);
    ++flips;
  }

  if (viol > 10.0 * relaxed_tol)
    throw RepairFailed("rounded targets violate the constraint by " + std::to_string(viol) +
                       " (allowed " + std::to_string(10.0 * relaxed_tol) + ")");

  ProjectionResult res;
  res.z = z;
  res.iterations = relaxed.iterations;
  res.method = relaxed.method + "+round";
  const ConstraintReport after = evaluate_constraint(map, z, abs, 0.0, relaxed_tol);
  res.violation = after.violation;
  res.total_violation = after.total_violation;
  res.satisfied = after.satisfied;
  res.objective = (z - y).squaredNorm();
  res.hamming_distance = static_cast<int>((z - y).cwiseAbs().sum() + 0.5);
  res.repair_flips = flips;
  res.relaxed_tol = relaxed_tol;
  res.wall_time_ms = ms_since(t0);
  return res;
}

}  // namespace gedi
