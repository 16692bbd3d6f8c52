#include "gedi/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace gedi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Work {
  Eigen::VectorXd y0;
  Eigen::VectorXd w;  // objective weights
  Eigen::MatrixXd C;  // pruned, row-normalized equalities
  Eigen::VectorXd d;
  Eigen::MatrixXd A;  // row-normalized inequalities
  Eigen::VectorXd b;
  Eigen::VectorXd lo, hi;  // full-size, +-inf where unbounded
  bool has_box = false;
};

double max_violation(const Work& wk, const Eigen::VectorXd& z) {
  double v = 0.0;
  if (wk.C.rows() > 0) v = (wk.C * z - wk.d).cwiseAbs().maxCoeff();
  if (wk.A.rows() > 0)
    v = std::max(v, (wk.A * z - wk.b).cwiseMax(0.0).maxCoeff());
  if (wk.has_box) {
    v = std::max(v, (wk.lo - z).cwiseMax(0.0).maxCoeff());
    v = std::max(v, (z - wk.hi).cwiseMax(0.0).maxCoeff());
  }
  return v;
}

double objective(const Work& wk, const Eigen::VectorXd& z) {
  return 0.5 * (wk.w.array() * (z - wk.y0).array().square()).sum();
}

// Row-normalizes [R | r]; drops null rows, flags contradictory ones.
void normalize_rows(Eigen::MatrixXd& R, Eigen::VectorXd& r, bool is_equality) {
  if (R.rows() == 0) return;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < R.rows(); ++i) {
    const double norm = R.row(i).norm();
    if (norm < 1e-14) {
      const bool violated = is_equality ? std::abs(r[i]) > 1e-12 : r[i] < -1e-12;
      if (violated) throw Infeasible("constraint row " + std::to_string(i) +
                                     " has a zero normal and cannot hold");
      continue;
    }
    R.row(i) /= norm;
    r[i] /= norm;
    keep.push_back(i);
  }
  if (static_cast<Eigen::Index>(keep.size()) == R.rows()) return;
  Eigen::MatrixXd R2(static_cast<Eigen::Index>(keep.size()), R.cols());
  Eigen::VectorXd r2(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    R2.row(static_cast<Eigen::Index>(i)) = R.row(keep[i]);
    r2[static_cast<Eigen::Index>(i)] = r[keep[i]];
  }
  R = std::move(R2);
  r = std::move(r2);
}

// Keeps a maximal independent subset of equality rows; throws if a dropped
// row is inconsistent with the kept ones.
void prune_equalities(Work& wk) {
  const Eigen::Index m = wk.C.rows();
  if (m == 0) return;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wk.C.transpose());
  qr.setThreshold(1e-12);
  const Eigen::Index r = qr.rank();
  if (r == m) return;

  const auto perm = qr.colsPermutation().indices();
  std::vector<Eigen::Index> kept(perm.data(), perm.data() + r);
  std::sort(kept.begin(), kept.end());

  Eigen::MatrixXd Ck(r, wk.C.cols());
  Eigen::VectorXd dk(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    Ck.row(i) = wk.C.row(kept[static_cast<std::size_t>(i)]);
    dk[i] = wk.d[kept[static_cast<std::size_t>(i)]];
  }
  // Min-norm solution of the kept rows decides consistency of the rest.
  Eigen::LDLT<Eigen::MatrixXd> gram((Ck * Ck.transpose()));
  Eigen::VectorXd zstar = Ck.transpose() * gram.solve(dk);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::binary_search(kept.begin(), kept.end(), i)) continue;
    if (std::abs(wk.C.row(i).dot(zstar) - wk.d[i]) > 1e-8)
      throw Infeasible("equality constraints are mutually inconsistent");
  }
  wk.C = std::move(Ck);
  wk.d = std::move(dk);
}

QpSolution finish(const Work& wk, Eigen::VectorXd z, int iters, const char* method,
                  bool polished = false) {
  QpSolution s;
  s.max_violation = max_violation(wk, z);
  s.objective = objective(wk, z);
  s.z = std::move(z);
  s.iterations = iters;
  s.method = method;
  s.polished = polished;
  return s;
}

// --- direct KKT: equalities only, strictly positive weights ---------------

QpSolution solve_direct(const Work& wk) {
  if (wk.C.rows() == 0) return finish(wk, wk.y0, 0, "direct");
  const Eigen::VectorXd winv = wk.w.cwiseInverse();
  Eigen::MatrixXd CWCt = wk.C * winv.asDiagonal() * wk.C.transpose();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(CWCt);
  Eigen::VectorXd mu = ldlt.solve(wk.C * wk.y0 - wk.d);
  Eigen::VectorXd z = wk.y0 - winv.asDiagonal() * (wk.C.transpose() * mu);
  return finish(wk, std::move(z), 1, "direct");
}

// --- primal active set: unit weights, no box, feasible start --------------

QpSolution solve_active_set(const Work& wk, Eigen::VectorXd z, int max_iter) {
  const Eigen::Index me = wk.C.rows();
  std::vector<Eigen::Index> active;  // inequality rows in the working set

  const double step_eps = 1e-12 * (1.0 + wk.y0.cwiseAbs().maxCoeff());
  int iter = 0;
  while (iter++ < max_iter) {
    const Eigen::Index mw = me + static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd mu;
    Eigen::VectorXd zstar;
    if (mw == 0) {
      zstar = wk.y0;
    } else {
      Eigen::MatrixXd G(mw, wk.y0.size());
      Eigen::VectorXd h(mw);
      G.topRows(me) = wk.C;
      h.head(me) = wk.d;
      for (std::size_t i = 0; i < active.size(); ++i) {
        G.row(me + static_cast<Eigen::Index>(i)) = wk.A.row(active[i]);
        h[me + static_cast<Eigen::Index>(i)] = wk.b[active[i]];
      }
      Eigen::LDLT<Eigen::MatrixXd> gram(G * G.transpose());
      mu = gram.solve(G * wk.y0 - h);
      zstar = wk.y0 - G.transpose() * mu;
    }

    const Eigen::VectorXd p = zstar - z;
    if (p.cwiseAbs().maxCoeff() <= step_eps) {
      // At the optimum of the current working set; check inequality signs.
      Eigen::Index worst = -1;
      double worst_mu = -1e-10;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double m = mu[me + static_cast<Eigen::Index>(i)];
        if (m < worst_mu) {
          worst_mu = m;
          worst = static_cast<Eigen::Index>(i);
        }
      }
      if (worst < 0) return finish(wk, std::move(zstar), iter, "active_set");
      active.erase(active.begin() + worst);
      continue;
    }

    // Step toward the EQP optimum, stopping at the first blocking row.
    double alpha = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index i = 0; i < wk.A.rows(); ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = wk.A.row(i).dot(p);
      if (s <= 1e-12) continue;
      const double gap = wk.b[i] - wk.A.row(i).dot(z);
      const double a = std::max(0.0, gap / s);
      if (a < alpha) {
        alpha = a;
        blocking = i;
      }
    }
    z += alpha * p;
    if (blocking >= 0) active.push_back(blocking);
  }
  throw MaxIterations("active-set solver exceeded " + std::to_string(max_iter) +
                      " iterations");
}

// --- ADMM with Woodbury-structured linear solves ---------------------------

struct AdmmFactors {
  Eigen::VectorXd dinv;
  Eigen::LLT<Eigen::MatrixXd> s2;       // 1/rho I + A Dinv A^T
  Eigen::MatrixXd eq_cols;              // solveH(C^T)
  Eigen::LDLT<Eigen::MatrixXd> eq_gram; // C * eq_cols
};

Eigen::VectorXd solve_h(const Work& wk, const AdmmFactors& f, const Eigen::VectorXd& r) {
  Eigen::VectorXd t = f.dinv.asDiagonal() * r;
  if (wk.A.rows() > 0) {
    Eigen::VectorXd s = f.s2.solve(wk.A * t);
    t -= f.dinv.asDiagonal() * (wk.A.transpose() * s);
  }
  return t;
}

AdmmFactors factorize(const Work& wk, double rho, double sigma) {
  AdmmFactors f;
  Eigen::VectorXd diag = wk.w.array() + sigma + (wk.has_box ? rho : 0.0);
  f.dinv = diag.cwiseInverse();
  if (wk.A.rows() > 0) {
    Eigen::MatrixXd s2 = wk.A * f.dinv.asDiagonal() * wk.A.transpose();
    s2.diagonal().array() += 1.0 / rho;
    f.s2.compute(s2);
  }
  if (wk.C.rows() > 0) {
    f.eq_cols.resize(wk.y0.size(), wk.C.rows());
    for (Eigen::Index j = 0; j < wk.C.rows(); ++j)
      f.eq_cols.col(j) = solve_h(wk, f, wk.C.row(j).transpose());
    f.eq_gram.compute(wk.C * f.eq_cols);
  }
  return f;
}

// Exact equality-constrained re-solve on the active set guessed from the ADMM
// point. Handles zero-weight auxiliary variables and box-fixed coordinates.
bool try_polish(const Work& wk, Eigen::VectorXd& z, double act_eps) {
  const Eigen::Index n = wk.y0.size();

  std::vector<Eigen::Index> act_rows;
  for (Eigen::Index i = 0; i < wk.A.rows(); ++i)
    if (wk.b[i] - wk.A.row(i).dot(z) <= act_eps) act_rows.push_back(i);

  enum class VarState { FreeUnit, FreeZero, FixedLo, FixedHi };
  std::vector<VarState> state(static_cast<std::size_t>(n));
  std::vector<Eigen::Index> f1, f0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& st = state[static_cast<std::size_t>(i)];
    if (wk.has_box && std::isfinite(wk.lo[i]) && z[i] - wk.lo[i] <= act_eps)
      st = VarState::FixedLo;
    else if (wk.has_box && std::isfinite(wk.hi[i]) && wk.hi[i] - z[i] <= act_eps)
      st = VarState::FixedHi;
    else if (wk.w[i] > 0.0)
      st = VarState::FreeUnit, f1.push_back(i);
    else
      st = VarState::FreeZero, f0.push_back(i);
  }

  const Eigen::Index me = wk.C.rows();
  const Eigen::Index ma = static_cast<Eigen::Index>(act_rows.size());
  const Eigen::Index mg = me + ma;
  const Eigen::Index n1 = static_cast<Eigen::Index>(f1.size());
  const Eigen::Index n0 = static_cast<Eigen::Index>(f0.size());

  Eigen::MatrixXd G1(mg, n1), G0(mg, n0);
  Eigen::VectorXd h(mg);
  Eigen::VectorXd zfix = z;  // carries the fixed coordinates
  for (Eigen::Index i = 0; i < n; ++i) {
    if (state[static_cast<std::size_t>(i)] == VarState::FixedLo) zfix[i] = wk.lo[i];
    if (state[static_cast<std::size_t>(i)] == VarState::FixedHi) zfix[i] = wk.hi[i];
  }
  for (Eigen::Index r = 0; r < mg; ++r) {
    const Eigen::VectorXd row =
        r < me ? wk.C.row(r).transpose() : wk.A.row(act_rows[static_cast<std::size_t>(r - me)]).transpose();
    const double rhs = r < me ? wk.d[r] : wk.b[act_rows[static_cast<std::size_t>(r - me)]];
    double shift = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      switch (state[static_cast<std::size_t>(i)]) {
        case VarState::FixedLo:
        case VarState::FixedHi:
          shift += row[i] * zfix[i];
          break;
        default:
          break;
      }
    }
    for (Eigen::Index c = 0; c < n1; ++c) G1(r, c) = row[f1[static_cast<std::size_t>(c)]];
    for (Eigen::Index c = 0; c < n0; ++c) G0(r, c) = row[f0[static_cast<std::size_t>(c)]];
    h[r] = rhs - shift;
  }

  // Unknowns: multipliers mu (mg) and the zero-weight frees t (n0).
  //   G1 G1^T mu - G0 t = G1 y0_1 - h
  //   G0^T mu            = 0
  Eigen::MatrixXd sys(mg + n0, mg + n0);
  Eigen::VectorXd rhs(mg + n0);
  Eigen::VectorXd y01(n1);
  for (Eigen::Index c = 0; c < n1; ++c) y01[c] = wk.y0[f1[static_cast<std::size_t>(c)]];
  sys.setZero();
  sys.topLeftCorner(mg, mg) = G1 * G1.transpose();
  sys.topRightCorner(mg, n0) = -G0;
  sys.bottomLeftCorner(n0, mg) = G0.transpose();
  rhs.head(mg) = G1 * y01 - h;
  rhs.tail(n0).setZero();

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return false;
  const Eigen::VectorXd mu = sol.head(mg);
  const Eigen::VectorXd tvals = sol.tail(n0);

  Eigen::VectorXd cand = zfix;
  const Eigen::VectorXd z1 = y01 - G1.transpose() * mu;
  for (Eigen::Index c = 0; c < n1; ++c) cand[f1[static_cast<std::size_t>(c)]] = z1[c];
  for (Eigen::Index c = 0; c < n0; ++c) cand[f0[static_cast<std::size_t>(c)]] = tvals[c];

  // KKT sign conditions: active inequalities need mu >= 0, fixed coordinates
  // need the reduced gradient to push into the feasible side.
  constexpr double mu_eps = 1e-9;
  for (Eigen::Index r = me; r < mg; ++r)
    if (mu[r] < -mu_eps) return false;
  Eigen::VectorXd grad = wk.w.asDiagonal() * (cand - wk.y0);
  for (Eigen::Index r = 0; r < mg; ++r) {
    const Eigen::VectorXd row =
        r < me ? wk.C.row(r).transpose() : wk.A.row(act_rows[static_cast<std::size_t>(r - me)]).transpose();
    grad += mu[r] * row;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (state[static_cast<std::size_t>(i)] == VarState::FixedLo && grad[i] < -mu_eps) return false;
    if (state[static_cast<std::size_t>(i)] == VarState::FixedHi && grad[i] > mu_eps) return false;
  }

  if (max_violation(wk, cand) > 1e-9) return false;
  z = std::move(cand);
  return true;
}

QpSolution solve_admm(const Work& wk, double tol, int max_iter) {
  const Eigen::Index n = wk.y0.size();
  const Eigen::Index m = wk.A.rows();
  const double sigma = 1e-6;
  double rho = 1.0;

  AdmmFactors f = factorize(wk, rho, sigma);

  Eigen::VectorXd z = wk.y0;
  Eigen::VectorXd w1, u1, v, u2;
  if (m > 0) {
    w1 = (wk.A * z).cwiseMin(wk.b);
    u1 = Eigen::VectorXd::Zero(m);
  }
  if (wk.has_box) {
    v = z.cwiseMax(wk.lo).cwiseMin(wk.hi);
    u2 = Eigen::VectorXd::Zero(n);
  }

  int iter = 0;
  double primal = kInf, dual = kInf;
  while (iter++ < max_iter) {
    Eigen::VectorXd rhs = wk.w.asDiagonal() * wk.y0 + sigma * z;
    if (m > 0) rhs += rho * (wk.A.transpose() * (w1 - u1));
    if (wk.has_box) rhs += rho * (v - u2);

    Eigen::VectorXd zh = solve_h(wk, f, rhs);
    if (wk.C.rows() > 0) {
      const Eigen::VectorXd nu = f.eq_gram.solve(wk.C * zh - wk.d);
      zh -= f.eq_cols * nu;
    }
    z = std::move(zh);

    primal = 0.0;
    dual = 0.0;
    if (m > 0) {
      const Eigen::VectorXd az = wk.A * z;
      const Eigen::VectorXd w1_next = (az + u1).cwiseMin(wk.b);
      dual = std::max(dual, rho * (wk.A.transpose() * (w1_next - w1)).cwiseAbs().maxCoeff());
      w1 = w1_next;
      u1 += az - w1;
      primal = std::max(primal, (az - w1).cwiseAbs().maxCoeff());
    }
    if (wk.has_box) {
      const Eigen::VectorXd v_next = (z + u2).cwiseMax(wk.lo).cwiseMin(wk.hi);
      dual = std::max(dual, rho * (v_next - v).cwiseAbs().maxCoeff());
      v = v_next;
      u2 += z - v;
      primal = std::max(primal, (z - v).cwiseAbs().maxCoeff());
    }
    if (primal <= tol && dual <= tol) break;

    // A polish candidate that passes the full KKT checks is the exact
    // optimum of this convex QP, so the loop can stop as soon as the active
    // face has stabilized.
    if (iter % 100 == 0 && primal <= 1e-3) {
      Eigen::VectorXd cand = z;
      if (wk.has_box) cand = cand.cwiseMax(wk.lo).cwiseMin(wk.hi);
      if (try_polish(wk, cand, std::max(1e-7, std::min(10.0 * primal, 1e-3))))
        return finish(wk, std::move(cand), iter, "admm", true);
    }

    if (iter % 100 == 0 && iter < max_iter / 2) {
      // Standard residual-balancing update.
      double next = rho;
      if (primal > 10.0 * dual)
        next = std::min(rho * 2.0, 1e6);
      else if (dual > 10.0 * primal)
        next = std::max(rho * 0.5, 1e-6);
      if (next != rho) {
        if (m > 0) u1 *= rho / next;
        if (wk.has_box) u2 *= rho / next;
        rho = next;
        f = factorize(wk, rho, sigma);
      }
    }
  }

  // Clamp the box block exactly, then try the exact active-set re-solve.
  if (wk.has_box) z = z.cwiseMax(wk.lo).cwiseMin(wk.hi);
  bool polished = try_polish(wk, z, std::max(100.0 * tol, 1e-7));

  if (!polished && (primal > tol || dual > tol)) {
    if (max_violation(wk, z) > std::max(1e3 * tol, 1e-5))
      throw Infeasible("ADMM did not reach feasibility; the constraint set appears empty");
    throw MaxIterations("ADMM stopped after " + std::to_string(max_iter) +
                        " iterations with residual " + std::to_string(primal));
  }
  return finish(wk, std::move(z), iter, "admm", polished);
}

}  // namespace

QpSolution solve_constrained_ls(const QpProblem& p, double tol, int max_iter) {
  const Eigen::Index n = p.anchor.size();
  if (n == 0) throw EmptyInput("QP has no variables");

  Work wk;
  wk.y0 = p.anchor;
  wk.w = p.weights.size() ? p.weights : Eigen::VectorXd::Ones(n);
  if (wk.w.size() != n || (wk.w.array() < 0.0).any())
    throw std::invalid_argument("objective weights must be non-negative, one per variable");
  wk.C = p.eq_A;
  wk.d = p.eq_b;
  wk.A = p.ineq_A;
  wk.b = p.ineq_b;
  if (wk.C.rows() != wk.d.size() || (wk.C.rows() > 0 && wk.C.cols() != n))
    throw std::invalid_argument("equality block dimensions are inconsistent");
  if (wk.A.rows() != wk.b.size() || (wk.A.rows() > 0 && wk.A.cols() != n))
    throw std::invalid_argument("inequality block dimensions are inconsistent");

  wk.has_box = p.lower.size() > 0 || p.upper.size() > 0;
  if (wk.has_box) {
    wk.lo = p.lower.size() ? p.lower : Eigen::VectorXd::Constant(n, -kInf);
    wk.hi = p.upper.size() ? p.upper : Eigen::VectorXd::Constant(n, kInf);
    if (wk.lo.size() != n || wk.hi.size() != n)
      throw std::invalid_argument("box bounds must have one entry per variable");
    if ((wk.lo.array() > wk.hi.array()).any())
      throw Infeasible("box bounds cross (lower > upper)");
  }

  normalize_rows(wk.C, wk.d, true);
  normalize_rows(wk.A, wk.b, false);
  prune_equalities(wk);

  // Interior anchor: nothing to do.
  if (max_violation(wk, wk.y0) <= 1e-14) return finish(wk, wk.y0, 0, "direct");

  const bool unit_weights = (wk.w.array() == 1.0).all();
  if (wk.A.rows() == 0 && !wk.has_box) {
    if (unit_weights || (wk.w.array() > 0.0).all()) return solve_direct(wk);
    return solve_admm(wk, tol, max_iter);
  }

  if (!wk.has_box && unit_weights) {
    // A feasible start enables the exact active-set path.
    Eigen::VectorXd start = p.start.size() ? p.start : wk.y0;
    if (wk.C.rows() > 0) {
      Eigen::LDLT<Eigen::MatrixXd> gram(wk.C * wk.C.transpose());
      start -= wk.C.transpose() * gram.solve(wk.C * start - wk.d);
    }
    if (max_violation(wk, start) <= 1e-10)
      return solve_active_set(wk, std::move(start), max_iter);
  }
  return solve_admm(wk, tol, max_iter);
}

}  // namespace gedi
