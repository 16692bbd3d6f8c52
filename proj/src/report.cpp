#include "gedi/report.hpp"

namespace gedi {

using nlohmann::json;

json json_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json indicator_report(const Eigen::VectorXd& x_prot, const Eigen::VectorXd& y,
                      const KernelSpec& kernel, Task task) {
  json out;
  const GediResult g = gedi(x_prot, y, kernel);
  out["gedi"] = {{"indicator", "gedi"},
                 {"kernel", kernel.name()},
                 {"value", g.value},
                 {"alpha_tilde", json_vector(g.alpha_tilde)},
                 {"per_basis", json_vector(g.per_basis)},
                 {"residual_mse", g.residual_mse}};
  out["gedi_v1"] = gedi_v1(x_prot, y);

  json binned;
  for (const int nb : {2, 3, 5, 10}) {
    json entry;
    try {
      const DidiResult d = didi_binned(x_prot, y, nb, task);
      json groups;
      for (const auto& [group, dev] : d.per_group) groups[format_double(group)] = dev;
      entry = {{"value", d.value},
               {"effective_bins", d.effective_groups},
               {"per_group", groups}};
    } catch (const DegenerateBinning&) {
      entry = nullptr;
    }
    binned[std::to_string(nb)] = entry;
  }
  out["didi_binned"] = binned;
  return out;
}

json percent_of(double value, double original) {
  if (original == 0.0) return nullptr;
  return value / original;
}

json percent_report(const json& current, const json& original) {
  if (current.is_number() && original.is_number())
    return percent_of(current.get<double>(), original.get<double>());
  if (current.is_object() && original.is_object()) {
    json out;
    for (auto it = current.begin(); it != current.end(); ++it) {
      if (!original.contains(it.key())) continue;
      if (it.key() == "alpha_tilde" || it.key() == "per_basis" || it.key() == "per_group" ||
          it.key() == "kernel" || it.key() == "effective_bins" || it.key() == "indicator")
        continue;
      out[it.key()] = percent_report(it.value(), original.at(it.key()));
    }
    return out;
  }
  return nullptr;
}

json error_json(const Error& e) {
  return {{"schema", kReportSchema}, {"error", e.code()}, {"message", e.what()}};
}

json error_json(const std::exception& e) {
  return {{"schema", kReportSchema}, {"error", "invalid_argument"}, {"message", e.what()}};
}

}  // namespace gedi
