#pragma once

#include <Eigen/Dense>
#include <string>

#include "gedi/indicators.hpp"
#include "gedi/kernel.hpp"

namespace gedi {

enum class ConstraintMode { Coarse, Fine, Exclusive };

/// Bound specification on the kernel coefficients. Coarse bounds the L1 norm
/// of alpha_tilde by a scalar q; Fine bounds each |alpha_tilde_j| by q_j;
/// Exclusive is Fine with bounds (q1, 0, ..., 0): degree-1 dependence up to
/// q1, all higher basis terms removed.
struct ConstraintSpec {
  ConstraintMode mode = ConstraintMode::Coarse;
  Eigen::VectorXd bounds;  // Coarse/Exclusive: 1 entry; Fine: kernel-order entries
  KernelSpec kernel;
  // When set, bounds are fractions of gedi_v1 on the original data and must
  // be resolved before evaluation.
  bool threshold_is_relative = false;

  /// Parses the CLI grammar `coarse:<q>` / `fine:<q1,...,qk>` / `exclusive:<q1>`.
  static ConstraintSpec parse(const std::string& text, const KernelSpec& kernel,
                              bool relative = false);

  /// Scales relative bounds by gedi_v1(x, y_original); identity when already
  /// absolute.
  ConstraintSpec resolved(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y_original) const;

  /// Fine-grained bound vector of kernel-order length (expands Exclusive).
  Eigen::VectorXd fine_bounds() const;

  std::string name() const;
  void validate() const;
};

struct ConstraintReport {
  bool satisfied = false;
  Eigen::VectorXd violation;      // 1 entry (coarse) or k entries (fine/exclusive)
  double total_violation = 0.0;
  double penalty = 0.0;           // lambda * total_violation
  Eigen::VectorXd alpha_tilde;
};

inline constexpr double kDefaultFeasTol = 1e-6;

/// Evaluates the constraint on (x, y). Requires an absolute (resolved) spec.
ConstraintReport evaluate_constraint(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     const ConstraintSpec& cs, double lambda = 0.0,
                                     double feas_tol = kDefaultFeasTol);

/// Same evaluation against pre-built kernel machinery (hot paths).
ConstraintReport evaluate_constraint(const CoefficientMap& map, const Eigen::VectorXd& y,
                                     const ConstraintSpec& cs, double lambda = 0.0,
                                     double feas_tol = kDefaultFeasTol);

/// True iff gedi(x, y, poly:k) and gedi_v1(x, y) agree within tol, i.e. all
/// polynomial dependencies of degree 2..k are absent.
bool exclusive_equivalence(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k,
                           double tol);

}  // namespace gedi
