#include "gedi/constraints.hpp"

#include <cmath>
#include <sstream>

namespace gedi {

ConstraintSpec ConstraintSpec::parse(const std::string& text, const KernelSpec& kernel,
                                     bool relative) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument(
        "constraint must look like coarse:<q>, fine:<q1,...,qk> or exclusive:<q1>, got '" +
        text + "'");
  const std::string mode = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);

  ConstraintSpec cs;
  cs.kernel = kernel;
  cs.threshold_is_relative = relative;

  std::vector<double> vals;
  std::stringstream ss(args);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw std::invalid_argument("bad constraint bound '" + tok + "'");
    }
  }
  if (vals.empty()) throw std::invalid_argument("constraint '" + text + "' has no bounds");

  if (mode == "coarse") {
    cs.mode = ConstraintMode::Coarse;
  } else if (mode == "fine") {
    cs.mode = ConstraintMode::Fine;
  } else if (mode == "exclusive") {
    cs.mode = ConstraintMode::Exclusive;
  } else {
    throw std::invalid_argument("unknown constraint mode '" + mode + "'");
  }
  cs.bounds = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  cs.validate();
  return cs;
}

void ConstraintSpec::validate() const {
  kernel.validate();
  if ((bounds.array() < 0.0).any())
    throw std::invalid_argument("constraint bounds must be non-negative");
  switch (mode) {
    case ConstraintMode::Coarse:
    case ConstraintMode::Exclusive:
      if (bounds.size() != 1)
        throw std::invalid_argument("coarse/exclusive constraints take a single bound");
      break;
    case ConstraintMode::Fine:
      if (bounds.size() != kernel.order)
        throw std::invalid_argument("fine constraint needs one bound per kernel column (" +
                                    std::to_string(kernel.order) + "), got " +
                                    std::to_string(bounds.size()));
      break;
  }
}

ConstraintSpec ConstraintSpec::resolved(const Eigen::VectorXd& x,
                                        const Eigen::VectorXd& y_original) const {
  validate();
  if (!threshold_is_relative) return *this;
  ConstraintSpec abs = *this;
  abs.bounds *= gedi_v1(x, y_original);
  abs.threshold_is_relative = false;
  return abs;
}

Eigen::VectorXd ConstraintSpec::fine_bounds() const {
  if (mode == ConstraintMode::Fine) return bounds;
  Eigen::VectorXd q = Eigen::VectorXd::Zero(kernel.order);
  q[0] = bounds[0];
  return q;
}

std::string ConstraintSpec::name() const {
  std::string s;
  switch (mode) {
    case ConstraintMode::Coarse:
      s = "coarse:";
      break;
    case ConstraintMode::Fine:
      s = "fine:";
      break;
    case ConstraintMode::Exclusive:
      s = "exclusive:";
      break;
  }
  for (Eigen::Index i = 0; i < bounds.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(bounds[i]);
  }
  if (threshold_is_relative) s += " (relative)";
  return s;
}

ConstraintReport evaluate_constraint(const CoefficientMap& map, const Eigen::VectorXd& y,
                                     const ConstraintSpec& cs, double lambda,
                                     double feas_tol) {
  cs.validate();
  if (cs.threshold_is_relative)
    throw std::invalid_argument(
        "relative constraint thresholds must be resolved against the original targets "
        "before evaluation");

  ConstraintReport rep;
  rep.alpha_tilde = map.alpha(y);

  if (cs.mode == ConstraintMode::Coarse) {
    rep.violation.resize(1);
    rep.violation[0] = std::max(0.0, rep.alpha_tilde.lpNorm<1>() - cs.bounds[0]);
  } else {
    const Eigen::VectorXd q = cs.fine_bounds();
    rep.violation = (rep.alpha_tilde.cwiseAbs() - q).cwiseMax(0.0);
  }
  rep.total_violation = rep.violation.sum();
  rep.penalty = lambda * rep.total_violation;
  rep.satisfied = (rep.violation.array() <= feas_tol).all();
  return rep;
}

ConstraintReport evaluate_constraint(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                     const ConstraintSpec& cs, double lambda,
                                     double feas_tol) {
  if (x.size() != y.size())
    throw LengthMismatch("x has " + std::to_string(x.size()) + " entries, y has " +
                         std::to_string(y.size()));
  const KernelMatrix km = build_kernel(x, cs.kernel);
  return evaluate_constraint(coefficient_map(km), y, cs, lambda, feas_tol);
}

bool exclusive_equivalence(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k,
                           double tol) {
  const double high = gedi(x, y, KernelSpec::polynomial(k)).value;
  double low = 0.0;
  try {
    low = gedi_v1(x, y);
  } catch (const ZeroVariance&) {
    throw RankDeficientKernel("constant protected attribute");
  }
  return std::abs(high - low) <= tol;
}

}  // namespace gedi
