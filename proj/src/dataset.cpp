#include "gedi/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace gedi {

namespace {

const std::set<std::string> kMissingMarkers = {"",    "?",   "NA",   "N/A", "na",
                                               "n/a", "NaN", "nan",  "null", "NULL"};

bool is_missing(const std::string& cell) { return kMissingMarkers.count(cell) > 0; }

bool parse_number(const std::string& cell, double& out) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc{} && res.ptr == last && std::isfinite(out);
}

// Minimal CSV row split: handles double-quoted fields with "" escapes;
// embedded newlines are not supported.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  return cells;
}

std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Dataset load_dataset(const std::string& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw EmptyInput("'" + path + "' is empty");
  const std::vector<std::string> header = split_csv_row(line);

  const auto col_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw MissingColumn("column '" + name + "' not found in '" + path + "'");
    return static_cast<int>(it - header.begin());
  };
  const int prot_col = col_of(schema.protected_col);
  const int target_col = col_of(schema.target_col);

  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;  // 1-based source line per kept row
  int dropped = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<std::string> cells = split_csv_row(line);
    if (cells.size() != header.size())
      throw ParseError(line_no, static_cast<int>(cells.size()),
                       "expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()));
    if (is_missing(cells[static_cast<std::size_t>(prot_col)]) ||
        is_missing(cells[static_cast<std::size_t>(target_col)])) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(cells));
    row_lines.push_back(line_no);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2) throw TooFewRows("'" + path + "' has " + std::to_string(n) +
                              " usable rows after dropping " + std::to_string(dropped));

  Dataset ds;
  ds.task = schema.task;
  ds.protected_name = schema.protected_col;
  ds.target_name = schema.target_col;
  ds.dropped_rows = dropped;
  ds.protected_attr.resize(n);
  ds.target.resize(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (!parse_number(r[static_cast<std::size_t>(prot_col)], ds.protected_attr[i]))
      throw ParseError(row_lines[static_cast<std::size_t>(i)], prot_col + 1,
                       "protected attribute '" + r[static_cast<std::size_t>(prot_col)] +
                           "' is not numeric");
    if (!parse_number(r[static_cast<std::size_t>(target_col)], ds.target[i]))
      throw ParseError(row_lines[static_cast<std::size_t>(i)], target_col + 1,
                       "target '" + r[static_cast<std::size_t>(target_col)] + "' is not numeric");
    if (schema.task == Task::Classification && ds.target[i] != 0.0 && ds.target[i] != 1.0)
      throw ParseError(row_lines[static_cast<std::size_t>(i)], target_col + 1,
                       "classification target must be 0 or 1, got '" +
                           r[static_cast<std::size_t>(target_col)] + "'");
  }

  // Feature typing: a column is numeric iff every kept cell parses.
  struct Column {
    int src = 0;
    bool numeric = true;
    std::vector<std::string> levels;  // categorical
  };
  std::vector<Column> cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (c == prot_col || c == target_col) continue;
    Column col;
    col.src = c;
    double tmp;
    for (const auto& r : rows) {
      if (!parse_number(r[static_cast<std::size_t>(c)], tmp)) {
        col.numeric = false;
        break;
      }
    }
    if (!col.numeric) {
      std::set<std::string> levels;
      for (const auto& r : rows) levels.insert(r[static_cast<std::size_t>(c)]);
      col.levels.assign(levels.begin(), levels.end());
    }
    cols.push_back(std::move(col));
  }

  Eigen::Index width = 0;
  for (const auto& c : cols) width += c.numeric ? 1 : static_cast<Eigen::Index>(c.levels.size());
  ds.features.resize(n, width);
  ds.feature_names.clear();

  Eigen::Index out_c = 0;
  for (const auto& c : cols) {
    if (c.numeric) {
      ds.feature_names.push_back(header[static_cast<std::size_t>(c.src)]);
      for (Eigen::Index i = 0; i < n; ++i) {
        double v;
        parse_number(rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c.src)], v);
        ds.features(i, out_c) = v;
      }
      ++out_c;
    } else {
      for (const auto& level : c.levels)
        ds.feature_names.push_back(header[static_cast<std::size_t>(c.src)] + "=" + level);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto& cell = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c.src)];
        for (std::size_t l = 0; l < c.levels.size(); ++l)
          ds.features(i, out_c + static_cast<Eigen::Index>(l)) = cell == c.levels[l] ? 1.0 : 0.0;
      }
      out_c += static_cast<Eigen::Index>(c.levels.size());
    }
  }
  return ds;
}

namespace {

void write_csv_impl(const std::string& path, const Dataset& ds,
                    const std::string* extra_name, const Eigen::VectorXd* extra) {
  std::ofstream out(path);
  if (!out) throw Error("io_error", "cannot write '" + path + "'");

  out << csv_escape(ds.protected_name);
  for (const auto& name : ds.feature_names) out << ',' << csv_escape(name);
  out << ',' << csv_escape(ds.target_name);
  if (extra_name) out << ',' << csv_escape(*extra_name);
  out << '\n';

  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    out << format_double(ds.protected_attr[i]);
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c)
      out << ',' << format_double(ds.features(i, c));
    out << ',' << format_double(ds.target[i]);
    if (extra) out << ',' << format_double((*extra)[i]);
    out << '\n';
  }
}

}  // namespace

void write_dataset_csv(const std::string& path, const Dataset& ds) {
  write_csv_impl(path, ds, nullptr, nullptr);
}

void write_dataset_csv(const std::string& path, const Dataset& ds,
                       const std::string& extra_name, const Eigen::VectorXd& extra) {
  if (extra.size() != ds.rows())
    throw LengthMismatch("extra column length does not match the dataset");
  write_csv_impl(path, ds, &extra_name, &extra);
}

Dataset synth_sine_square(int n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("synthetic sample needs n >= 10");

  // mt19937_64 output is standardized; the uniform/normal transforms are
  // spelled out so the sample is identical on every platform.
  std::mt19937_64 eng(seed);
  const auto unit = [&eng]() {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
  };

  Dataset ds;
  ds.task = Task::Regression;
  ds.protected_name = "x";
  ds.target_name = "y";
  ds.feature_names = {"x"};
  ds.protected_attr.resize(n);
  ds.target.resize(n);
  ds.features.resize(n, 1);

  for (int i = 0; i < n; ++i) {
    const double x = -std::numbers::pi + 2.0 * std::numbers::pi * unit();
    const double u1 = 1.0 - unit();  // (0, 1]
    const double u2 = unit();
    const double eps = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    ds.protected_attr[i] = x;
    ds.features(i, 0) = x;
    ds.target[i] = 4.0 * std::sin(x) + x * x + eps;
  }
  return ds;
}

std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold_split(int n, int folds,
                                                                       std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("k-fold needs folds >= 2");
  if (n < folds)
    throw TooFewRows(std::to_string(n) + " rows cannot fill " + std::to_string(folds) +
                     " folds");

  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  // Fisher-Yates with the raw engine; modulo bias is irrelevant here and the
  // result is platform-independent.
  std::mt19937_64 eng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(eng() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }

  std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
  out.reserve(static_cast<std::size_t>(folds));
  const int base = n / folds;
  const int rem = n % folds;
  int pos = 0;
  for (int f = 0; f < folds; ++f) {
    const int len = base + (f < rem ? 1 : 0);
    std::vector<int> val(idx.begin() + pos, idx.begin() + pos + len);
    std::vector<int> train;
    train.reserve(static_cast<std::size_t>(n - len));
    train.insert(train.end(), idx.begin(), idx.begin() + pos);
    train.insert(train.end(), idx.begin() + pos + len, idx.end());
    std::sort(val.begin(), val.end());
    std::sort(train.begin(), train.end());
    out.emplace_back(std::move(train), std::move(val));
    pos += len;
  }
  return out;
}

}  // namespace gedi
