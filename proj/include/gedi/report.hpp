#pragma once

#include <json.hpp>

#include "gedi/constraints.hpp"
#include "gedi/dataset.hpp"
#include "gedi/indicators.hpp"

namespace gedi {

inline constexpr int kReportSchema = 1;

nlohmann::json json_vector(const Eigen::VectorXd& v);

/// Indicator block for one (protected, targets) pair: gedi under the chosen
/// kernel, gedi_v1, and the quantile DIDI at n in {2, 3, 5, 10}. Binned DIDI
/// entries that cannot be computed (degenerate binning) come out null.
nlohmann::json indicator_report(const Eigen::VectorXd& x_prot, const Eigen::VectorXd& y,
                                const KernelSpec& kernel, Task task);

/// value / original, or null when the original value is zero.
nlohmann::json percent_of(double value, double original);

/// Ratios of every numeric leaf in `current` against `original` (same shape).
nlohmann::json percent_report(const nlohmann::json& current, const nlohmann::json& original);

nlohmann::json error_json(const Error& e);
nlohmann::json error_json(const std::exception& e);

}  // namespace gedi
