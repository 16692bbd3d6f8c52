#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gedi/errors.hpp"
#include "gedi/indicators.hpp"

namespace gedi {

struct Dataset {
  Eigen::MatrixXd features;  // numeric, categoricals one-hot encoded
  Eigen::VectorXd protected_attr;
  Eigen::VectorXd target;
  Task task = Task::Regression;
  std::vector<std::string> feature_names;
  std::string protected_name;
  std::string target_name;
  int dropped_rows = 0;  // rows removed for missing protected/target cells

  Eigen::Index rows() const { return target.size(); }
};

struct DatasetSchema {
  std::string protected_col;
  std::string target_col;
  Task task = Task::Regression;
};

/// Loads a header-rowed CSV. Feature columns where every kept cell parses as
/// a number stay numeric; anything else is one-hot encoded (missing markers
/// count as their own category). Rows with a missing protected or target
/// cell are dropped and counted. The protected and target columns must be
/// numeric; classification targets must be 0/1.
Dataset load_dataset(const std::string& path, const DatasetSchema& schema);

/// Writes the dataset back to CSV with shortest round-trip float formatting,
/// so export -> load is bit-exact.
void write_dataset_csv(const std::string& path, const Dataset& ds);

/// Same, with one extra column appended (e.g. adjusted targets).
void write_dataset_csv(const std::string& path, const Dataset& ds,
                       const std::string& extra_name, const Eigen::VectorXd& extra);

/// Synthetic benchmark sample: x ~ U(-pi, pi), y = 4 sin(x) + x^2 + eps with
/// eps ~ N(0, 1). x is both the single feature and the protected attribute.
/// Deterministic per seed, independent of platform.
Dataset synth_sine_square(int n, std::uint64_t seed);

/// Disjoint, exhaustive, shuffled k-fold partition; (train, validation)
/// index lists per fold. Deterministic per seed.
std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold_split(int n, int folds,
                                                                       std::uint64_t seed);

/// Shortest round-trip decimal rendering of a double (CSV/JSON cells).
std::string format_double(double v);

}  // namespace gedi
