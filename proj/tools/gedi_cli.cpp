// Command-line surface: audit, preprocess, train, synth. Reports are JSON on
// stdout (deterministic for fixed flags and seed); timings go to stderr and
// are added to the JSON only with --timings.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "gedi/dataset.hpp"
#include "gedi/projection.hpp"
#include "gedi/report.hpp"
#include "gedi/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

int log_level() {
  const char* env = std::getenv("GEDI_LOG");
  if (!env) return 0;
  const std::string v(env);
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[gedi] " << msg << "\n";
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct CommonFlags {
  std::string input;
  std::string protected_col;
  std::string target_col;
  std::string task = "reg";
  std::string kernel = "poly:1";
  std::string out_dir;
  bool timings = false;
  bool standardize = false;

  gedi::Task task_kind() const {
    if (task == "reg") return gedi::Task::Regression;
    if (task == "clf") return gedi::Task::Classification;
    throw std::invalid_argument("--task must be reg or clf");
  }
};

void add_dataset_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--input", f.input, "input CSV with a header row")->required();
  cmd->add_option("--protected", f.protected_col, "protected attribute column")->required();
  cmd->add_option("--target", f.target_col, "target column")->required();
  cmd->add_option("--task", f.task, "reg|clf")->check(CLI::IsMember({"reg", "clf"}));
  cmd->add_option("--kernel", f.kernel, "poly:<k> or fourier:<k>");
  cmd->add_option("--out", f.out_dir, "output directory for report/artifacts");
  cmd->add_flag("--timings", f.timings, "include wall_time_ms in the JSON report");
  cmd->add_flag("--standardize", f.standardize,
                "standardize the protected attribute before kernel construction "
                "(changes the indicator's units)");
}

gedi::Dataset load(const CommonFlags& f) {
  gedi::DatasetSchema schema{f.protected_col, f.target_col, f.task_kind()};
  gedi::Dataset ds = gedi::load_dataset(f.input, schema);
  log_info("loaded " + std::to_string(ds.rows()) + " rows from " + f.input + " (dropped " +
           std::to_string(ds.dropped_rows) + ")");
  if (f.standardize) {
    const double mean = ds.protected_attr.mean();
    const double sd = std::sqrt((ds.protected_attr.array() - mean).square().mean());
    if (sd <= 0.0) throw gedi::ZeroVariance("cannot standardize a constant protected attribute");
    ds.protected_attr = (ds.protected_attr.array() - mean) / sd;
  }
  return ds;
}

json dataset_json(const gedi::Dataset& ds, const std::string& path) {
  return {{"path", path},
          {"rows", ds.rows()},
          {"dropped_rows", ds.dropped_rows},
          {"protected", ds.protected_name},
          {"target", ds.target_name},
          {"task", ds.task == gedi::Task::Regression ? "regression" : "classification"}};
}

void emit(const json& report, const std::string& out_dir) {
  std::cout << report.dump(2) << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream f(fs::path(out_dir) / "report.json");
    f << report.dump(2) << "\n";
  }
}

// --- audit ------------------------------------------------------------------

int run_audit(const CommonFlags& f) {
  const auto t0 = Clock::now();
  const gedi::Dataset ds = load(f);
  const gedi::KernelSpec kernel = gedi::KernelSpec::parse(f.kernel);

  json report;
  report["schema"] = gedi::kReportSchema;
  report["command"] = "audit";
  report["dataset"] = dataset_json(ds, f.input);
  report["kernel"] = kernel.name();

  // Conditioning diagnostics: the kernel order is a user choice, so the
  // report shows how well-posed the resulting system is.
  {
    const gedi::KernelMatrix km = gedi::build_kernel(ds.protected_attr, kernel);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(km.centered);
    const auto& sv = svd.singularValues();
    const int rank = gedi::numerical_rank(km);
    json diag = {{"rank", rank}, {"order", kernel.order}};
    diag["condition"] = (rank == kernel.order && sv[sv.size() - 1] > 0.0)
                            ? json(sv[0] / sv[sv.size() - 1])
                            : json(nullptr);
    report["kernel_diagnostics"] = diag;
  }

  const json ind = gedi::indicator_report(ds.protected_attr, ds.target, kernel, ds.task);
  report["indicators"] = ind;
  report["percent_of_original"] = gedi::percent_report(ind, ind);
  if (f.timings) report["wall_time_ms"] = ms_since(t0);
  log_info("audit finished in " + std::to_string(ms_since(t0)) + " ms");
  emit(report, f.out_dir);
  return 0;
}

// --- preprocess ---------------------------------------------------------------

int run_preprocess(const CommonFlags& f, const std::string& constraint, bool relative,
                   double feas_tol) {
  const auto t0 = Clock::now();
  const gedi::Dataset ds = load(f);
  const gedi::KernelSpec kernel = gedi::KernelSpec::parse(f.kernel);
  gedi::ConstraintSpec cs = gedi::ConstraintSpec::parse(constraint, kernel, relative);
  const gedi::ConstraintSpec abs = cs.resolved(ds.protected_attr, ds.target);

  gedi::ProjectionOptions opts;
  opts.feas_tol = feas_tol;
  const gedi::ProjectionResult proj =
      ds.task == gedi::Task::Regression
          ? gedi::project_regression(ds.protected_attr, ds.target, abs, opts)
          : gedi::project_classification(ds.protected_attr, ds.target, abs, opts);

  json report;
  report["schema"] = gedi::kReportSchema;
  report["command"] = "preprocess";
  report["dataset"] = dataset_json(ds, f.input);
  report["kernel"] = kernel.name();
  report["constraint"] = cs.name();
  report["resolved_bounds"] = gedi::json_vector(abs.bounds);

  json pj = {{"objective", proj.objective},
             {"violation", gedi::json_vector(proj.violation)},
             {"total_violation", proj.total_violation},
             {"satisfied", proj.satisfied},
             {"iterations", proj.iterations},
             {"method", proj.method}};
  if (ds.task == gedi::Task::Classification) {
    pj["hamming_distance"] = proj.hamming_distance;
    pj["repair_flips"] = proj.repair_flips;
    pj["relaxed_tol"] = proj.relaxed_tol;
  }
  if (f.timings) pj["wall_time_ms"] = proj.wall_time_ms;
  report["projection"] = pj;

  const json before = gedi::indicator_report(ds.protected_attr, ds.target, kernel, ds.task);
  const json after = gedi::indicator_report(ds.protected_attr, proj.z, kernel, ds.task);
  report["indicators_original"] = before;
  report["indicators_adjusted"] = after;
  report["percent_of_original"] = gedi::percent_report(after, before);

  if (!f.out_dir.empty()) {
    fs::create_directories(f.out_dir);
    const fs::path csv = fs::path(f.out_dir) / "adjusted.csv";
    gedi::write_dataset_csv(csv.string(), ds, ds.target_name + "_adjusted", proj.z);
    report["outputs"] = {{"csv", csv.string()}};
  }
  if (f.timings) report["wall_time_ms"] = ms_since(t0);
  log_info("preprocess finished in " + std::to_string(ms_since(t0)) + " ms");
  emit(report, f.out_dir);
  return 0;
}

// --- train ----------------------------------------------------------------

struct FoldOutcome {
  json detail;
  double train_metric = 0.0, val_metric = 0.0;
  double train_gedi_pct = 0.0, val_gedi_pct = 0.0;
};

json trace_json_mt(const std::vector<gedi::MtTraceEntry>& trace) {
  json arr = json::array();
  for (const auto& t : trace)
    arr.push_back({{"iteration", t.iteration},
                   {"alpha", t.alpha},
                   {"master_objective", t.master_objective},
                   {"master_violation", t.master_violation},
                   {"train_metric", t.train_metric},
                   {"pred_indicator", t.pred_indicator},
                   {"pred_violation", t.pred_violation}});
  return arr;
}

json trace_json_sbr(const std::vector<gedi::SbrTraceEntry>& trace) {
  // Thin long traces to ~200 entries plus the final one.
  const std::size_t stride = std::max<std::size_t>(1, trace.size() / 200);
  json arr = json::array();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (i % stride != 0 && i + 1 != trace.size()) continue;
    const auto& t = trace[i];
    arr.push_back({{"epoch", t.epoch},
                   {"loss", t.loss},
                   {"penalty", t.penalty},
                   {"lambda", gedi::json_vector(t.lambda)},
                   {"violation", gedi::json_vector(t.violation)}});
  }
  return arr;
}

double metric_of(const Eigen::VectorXd& y, const Eigen::VectorXd& preds, gedi::Task task) {
  if (task == gedi::Task::Classification) {
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
      hits += ((preds[i] >= 0.5) == (y[i] >= 0.5)) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y.size());
  }
  const double sst = (y.array() - y.mean()).square().sum();
  if (sst <= 0.0) return 0.0;
  return 1.0 - (y - preds).squaredNorm() / sst;
}

int run_train(const CommonFlags& f, const std::string& constraint, bool relative,
              const std::string& method, const std::string& learner_text, int iterations,
              int folds, std::uint64_t seed, int jobs, double lr, double rho,
              double feas_tol) {
  const auto t0 = Clock::now();
  const gedi::Dataset ds = load(f);
  const gedi::KernelSpec kernel = gedi::KernelSpec::parse(f.kernel);
  gedi::ConstraintSpec cs = gedi::ConstraintSpec::parse(constraint, kernel, relative);
  // Thresholds are fixed once, against the full original dataset.
  const gedi::ConstraintSpec abs = cs.resolved(ds.protected_attr, ds.target);
  gedi::LearnerSpec learner = gedi::LearnerSpec::parse(learner_text);
  learner.seed = seed;

  std::vector<std::pair<std::vector<int>, std::vector<int>>> splits;
  if (folds <= 1) {
    std::vector<int> all(static_cast<std::size_t>(ds.rows()));
    for (int i = 0; i < ds.rows(); ++i) all[static_cast<std::size_t>(i)] = i;
    splits.emplace_back(all, all);
  } else {
    splits = gedi::kfold_split(static_cast<int>(ds.rows()), folds, seed);
  }

  const auto subset_rows = [](const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i)
      out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
  };
  const auto subset = [](const Eigen::VectorXd& v, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
  };

  const int n_folds = static_cast<int>(splits.size());
  std::vector<FoldOutcome> outcomes(static_cast<std::size_t>(n_folds));
  std::vector<std::string> fold_errors(static_cast<std::size_t>(n_folds));

#pragma omp parallel for schedule(static) num_threads(std::max(1, jobs)) if (jobs > 1)
  for (int fi = 0; fi < n_folds; ++fi) {
    try {
      const auto& [train_idx, val_idx] = splits[static_cast<std::size_t>(fi)];
      const Eigen::MatrixXd Xtr = subset_rows(ds.features, train_idx);
      const Eigen::VectorXd ptr = subset(ds.protected_attr, train_idx);
      const Eigen::VectorXd ytr = subset(ds.target, train_idx);
      const Eigen::MatrixXd Xva = subset_rows(ds.features, val_idx);
      const Eigen::VectorXd pva = subset(ds.protected_attr, val_idx);
      const Eigen::VectorXd yva = subset(ds.target, val_idx);

      gedi::LearnerModel model;
      json trace;
      if (method == "mt") {
        gedi::MtConfig cfg;
        cfg.iterations = iterations;
        cfg.learner = learner;
        cfg.master.feas_tol = feas_tol;
        const gedi::MtResult res = gedi::moving_targets(Xtr, ptr, ytr, abs, cfg, ds.task);
        model = res.model;
        trace = trace_json_mt(res.trace);
      } else {
        gedi::SbrConfig cfg;
        cfg.epochs = iterations;
        cfg.lr = lr;
        cfg.rho = rho;
        cfg.tol = feas_tol;
        cfg.learner = learner;
        const gedi::SbrResult res = gedi::sbr_train(Xtr, ptr, ytr, abs, cfg, ds.task);
        model = res.model;
        trace = trace_json_sbr(res.trace);
        trace.push_back({{"converged", res.converged}});
      }

      const Eigen::VectorXd pred_tr = model.predict(Xtr);
      const Eigen::VectorXd pred_va = model.predict(Xva);

      // Classification DIDI needs class labels; gedi itself uses probabilities.
      const auto didi_view = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
        if (ds.task == gedi::Task::Regression) return p;
        return p.unaryExpr([](double v) { return v >= 0.5 ? 1.0 : 0.0; });
      };

      FoldOutcome out;
      out.train_metric = metric_of(ytr, pred_tr, ds.task);
      out.val_metric = metric_of(yva, pred_va, ds.task);

      const double g_tr = gedi::gedi(ptr, pred_tr, kernel).value;
      const double g_va = gedi::gedi(pva, pred_va, kernel).value;
      const double g_tr0 = gedi::gedi(ptr, ytr, kernel).value;
      const double g_va0 = gedi::gedi(pva, yva, kernel).value;
      out.train_gedi_pct = g_tr0 != 0.0 ? g_tr / g_tr0 : 0.0;
      out.val_gedi_pct = g_va0 != 0.0 ? g_va / g_va0 : 0.0;

      json ind_tr = gedi::indicator_report(ptr, pred_tr, kernel, ds.task);
      json ind_va = gedi::indicator_report(pva, pred_va, kernel, ds.task);
      if (ds.task == gedi::Task::Classification) {
        ind_tr["didi_binned"] =
            gedi::indicator_report(ptr, didi_view(pred_tr), kernel, ds.task)["didi_binned"];
        ind_va["didi_binned"] =
            gedi::indicator_report(pva, didi_view(pred_va), kernel, ds.task)["didi_binned"];
      }
      const json ind_tr0 = gedi::indicator_report(ptr, ytr, kernel, ds.task);
      const json ind_va0 = gedi::indicator_report(pva, yva, kernel, ds.task);

      out.detail = {{"fold", fi},
                    {"train_rows", train_idx.size()},
                    {"val_rows", val_idx.size()},
                    {"metrics", {{"train", out.train_metric}, {"val", out.val_metric}}},
                    {"indicators", {{"train", ind_tr}, {"val", ind_va}}},
                    {"percent_of_original",
                     {{"train", gedi::percent_report(ind_tr, ind_tr0)},
                      {"val", gedi::percent_report(ind_va, ind_va0)}}},
                    {"trace", trace}};
      outcomes[static_cast<std::size_t>(fi)] = std::move(out);
    } catch (const std::exception& e) {
      fold_errors[static_cast<std::size_t>(fi)] = e.what();
    }
  }
  for (const auto& err : fold_errors)
    if (!err.empty()) throw gedi::Error("fold_failed", err);

  const auto mean_std = [&](auto&& get) {
    double mean = 0.0;
    for (const auto& o : outcomes) mean += get(o);
    mean /= static_cast<double>(n_folds);
    double var = 0.0;
    for (const auto& o : outcomes) var += (get(o) - mean) * (get(o) - mean);
    var /= static_cast<double>(n_folds);
    return json{{"mean", mean}, {"std", std::sqrt(var)}};
  };

  json report;
  report["schema"] = gedi::kReportSchema;
  report["command"] = "train";
  report["dataset"] = dataset_json(ds, f.input);
  report["method"] = method;
  report["learner"] = learner.name();
  report["kernel"] = kernel.name();
  report["constraint"] = cs.name();
  report["resolved_bounds"] = gedi::json_vector(abs.bounds);
  report["iterations"] = iterations;
  report["folds"] = n_folds;
  report["seed"] = seed;
  json details = json::array();
  for (auto& o : outcomes) details.push_back(std::move(o.detail));
  report["folds_detail"] = details;
  report["aggregate"] = {
      {"train_metric", mean_std([](const FoldOutcome& o) { return o.train_metric; })},
      {"val_metric", mean_std([](const FoldOutcome& o) { return o.val_metric; })},
      {"train_gedi_pct", mean_std([](const FoldOutcome& o) { return o.train_gedi_pct; })},
      {"val_gedi_pct", mean_std([](const FoldOutcome& o) { return o.val_gedi_pct; })}};
  if (f.timings) report["wall_time_ms"] = ms_since(t0);
  log_info("train finished in " + std::to_string(ms_since(t0)) + " ms");
  emit(report, f.out_dir);
  return 0;
}

// --- synth ------------------------------------------------------------------

int run_synth(int n, std::uint64_t seed, const std::string& out_dir) {
  const gedi::Dataset ds = gedi::synth_sine_square(n, seed);
  json report;
  report["schema"] = gedi::kReportSchema;
  report["command"] = "synth";
  report["rows"] = n;
  report["seed"] = seed;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path csv = fs::path(out_dir) / "synth.csv";
    gedi::write_dataset_csv(csv.string(), ds);
    report["outputs"] = {{"csv", csv.string()}};
  }
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GeDI fairness toolkit: audit, constrain and retrain tabular targets"};
  app.require_subcommand(1);

  CommonFlags audit_f, pre_f, train_f;
  std::string pre_constraint, train_constraint;
  bool pre_relative = false, train_relative = false;
  double pre_feas_tol = gedi::kDefaultFeasTol;
  std::string train_method = "mt", train_learner = "ridge:0.001";
  int train_iterations = 10, train_folds = 5, train_jobs = 1;
  std::uint64_t train_seed = 0;
  double train_lr = 0.05, train_rho = 1.0, train_feas_tol = gedi::kDefaultFeasTol;
  int synth_n = 500;
  std::uint64_t synth_seed = 0;
  std::string synth_out;

  CLI::App* audit = app.add_subcommand("audit", "compute indicators for a dataset");
  add_dataset_flags(audit, audit_f);

  CLI::App* pre = app.add_subcommand("preprocess", "project targets onto the constraint set");
  add_dataset_flags(pre, pre_f);
  pre->add_option("--constraint", pre_constraint,
                  "coarse:<q> | fine:<q1,...,qk> | exclusive:<q1>")
      ->required();
  pre->add_flag("--relative", pre_relative, "bounds are fractions of the original gedi_v1");
  pre->add_option("--threshold", pre_feas_tol, "feasibility tolerance for 'satisfied'");

  CLI::App* train = app.add_subcommand("train", "constraint-aware training with cross-validation");
  add_dataset_flags(train, train_f);
  train->add_option("--constraint", train_constraint, "constraint spec")->required();
  train->add_flag("--relative", train_relative, "bounds are fractions of the original gedi_v1");
  train->add_option("--method", train_method, "mt|sbr")->check(CLI::IsMember({"mt", "sbr"}));
  train->add_option("--learner", train_learner, "ridge:<l2> | logistic:<lr>,<epochs> | gb:<n>,<lr>");
  train->add_option("--iterations", train_iterations, "MT iterations / SBR epochs");
  train->add_option("--folds", train_folds, "cross-validation folds (1 = full data)");
  train->add_option("--seed", train_seed, "random seed for the fold split");
  train->add_option("--jobs", train_jobs, "folds to run in parallel");
  train->add_option("--lr", train_lr, "SBR model learning rate");
  train->add_option("--rho", train_rho, "SBR multiplier ascent step");
  train->add_option("--threshold", train_feas_tol,
                    "feasibility tolerance (MT master / SBR convergence)");

  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic benchmark CSV");
  synth->add_option("--n", synth_n, "rows");
  synth->add_option("--seed", synth_seed, "seed");
  synth->add_option("--out", synth_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (audit->parsed()) return run_audit(audit_f);
    if (pre->parsed()) return run_preprocess(pre_f, pre_constraint, pre_relative, pre_feas_tol);
    if (train->parsed())
      return run_train(train_f, train_constraint, train_relative, train_method, train_learner,
                       train_iterations, train_folds, train_seed, train_jobs, train_lr,
                       train_rho, train_feas_tol);
    if (synth->parsed()) return run_synth(synth_n, synth_seed, synth_out);
  } catch (const gedi::Error& e) {
    std::cout << gedi::error_json(e).dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cout << gedi::error_json(e).dump(2) << "\n";
    return 2;
  }
  return 0;
}
