#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "gedi/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli;  // path to the gedi binary, from argv[1]

struct RunResult {
  int exit_code = 0;
  std::string stdout_text;
};

RunResult run(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "gedi_cli_tests" / "stdout.txt";
  fs::create_directories(out.parent_path());
  const std::string cmd = g_cli + " " + args + " > " + out.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  return {WEXITSTATUS(rc), ss.str()};
}

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gedi_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("synth writes a loadable CSV and reports it") {
  const fs::path dir = work_dir("synth");
  const RunResult r = run("synth --n 120 --seed 3 --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.stdout_text);
  CHECK(rep["schema"] == 1);
  CHECK(rep["command"] == "synth");
  CHECK(rep["rows"] == 120);

  const gedi::Dataset ds =
      gedi::load_dataset((dir / "synth.csv").string(), {"x", "y", gedi::Task::Regression});
  CHECK(ds.rows() == 120);
}

TEST_CASE("audit reports indicators, and original percentages are all one") {
  const fs::path dir = work_dir("audit");
  run("synth --n 200 --seed 4 --out " + dir.string());
  const RunResult r = run("audit --input " + (dir / "synth.csv").string() +
                          " --protected x --target y --task reg --kernel poly:2");
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.stdout_text);
  CHECK(rep["kernel"] == "poly:2");
  CHECK(rep["indicators"]["gedi"]["value"].get<double>() > 0.0);
  CHECK(rep["indicators"]["didi_binned"].contains("10"));
  CHECK(rep["percent_of_original"]["gedi"]["value"].get<double>() ==
        doctest::Approx(1.0));
  CHECK(rep["percent_of_original"]["gedi_v1"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("audit of a binary attribute matches the group-difference form") {
  const fs::path dir = work_dir("binary");
  {
    std::ofstream f(dir / "toy.csv");
    f << "sex,income\n";
    // Group means 0.75 vs 0.25.
    f << "0,1\n0,1\n0,1\n0,0\n1,0\n1,0\n1,0\n1,1\n";
  }
  const RunResult r = run("audit --input " + (dir / "toy.csv").string() +
                          " --protected sex --target income --task reg --kernel poly:1");
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.stdout_text);
  const double g = rep["indicators"]["gedi"]["value"].get<double>();
  const double didi2 = rep["indicators"]["didi_binned"]["2"]["value"].get<double>();
  CHECK(g == doctest::Approx(didi2).epsilon(1e-9));
}

TEST_CASE("preprocess satisfies a relative coarse bound and writes artifacts") {
  const fs::path dir = work_dir("preprocess");
  run("synth --n 300 --seed 5 --out " + dir.string());
  const RunResult r = run("preprocess --input " + (dir / "synth.csv").string() +
                          " --protected x --target y --task reg --kernel poly:3" +
                          " --constraint coarse:0.2 --relative --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.stdout_text);
  CHECK(rep["projection"]["satisfied"] == true);
  CHECK(rep["projection"]["total_violation"].get<double>() <= 1e-6);
  const double pct = rep["percent_of_original"]["gedi"]["value"].get<double>();
  CHECK(pct <= 0.2 + 1e-6);
  CHECK(fs::exists(dir / "adjusted.csv"));
  CHECK(fs::exists(dir / "report.json"));

  // Re-audit the adjusted column: the bound still holds end-to-end.
  const gedi::Dataset adj = gedi::load_dataset((dir / "adjusted.csv").string(),
                                               {"x", "y_adjusted", gedi::Task::Regression});
  const double q = rep["resolved_bounds"][0].get<double>();
  CHECK(gedi::gedi(adj.protected_attr, adj.target, gedi::KernelSpec::polynomial(3)).value <=
        q + 1e-6);
}

TEST_CASE("train emits per-fold traces with the declared schema") {
  const fs::path dir = work_dir("train");
  run("synth --n 150 --seed 6 --out " + dir.string());
  const RunResult r = run("train --input " + (dir / "synth.csv").string() +
                          " --protected x --target y --task reg --kernel poly:3" +
                          " --constraint coarse:0.2 --relative --method mt" +
                          " --learner ridge:0.001 --iterations 3 --folds 3 --seed 11");
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.stdout_text);
  CHECK(rep["folds"] == 3);
  REQUIRE(rep["folds_detail"].size() == 3);
  const json& fold0 = rep["folds_detail"][0];
  CHECK(fold0["trace"].size() == 3);
  CHECK(fold0["trace"][0].contains("master_objective"));
  CHECK(fold0["metrics"].contains("train"));
  CHECK(rep["aggregate"]["val_metric"].contains("mean"));
}

TEST_CASE("sbr training produces monotone multipliers in the trace") {
  const fs::path dir = work_dir("sbr");
  run("synth --n 120 --seed 8 --out " + dir.string());
  const RunResult r = run("train --input " + (dir / "synth.csv").string() +
                          " --protected x --target y --task reg --kernel poly:1" +
                          " --constraint coarse:0.1 --relative --method sbr" +
                          " --learner ridge:0 --iterations 200 --folds 2 --seed 1 --lr 0.05");
  REQUIRE(r.exit_code == 0);
  const json rep = json::parse(r.stdout_text);
  const json& trace = rep["folds_detail"][0]["trace"];
  double prev = -1.0;
  for (const auto& entry : trace) {
    if (!entry.contains("lambda")) continue;
    const double l = entry["lambda"][0].get<double>();
    CHECK(l >= prev - 1e-15);
    prev = l;
  }
}

TEST_CASE("identical flags and seed give byte-identical reports") {
  const fs::path dir = work_dir("determinism");
  run("synth --n 100 --seed 9 --out " + dir.string());
  const std::string cmd = "audit --input " + (dir / "synth.csv").string() +
                          " --protected x --target y --task reg --kernel poly:2";
  const RunResult a = run(cmd);
  const RunResult b = run(cmd);
  CHECK(a.stdout_text == b.stdout_text);
  CHECK(!a.stdout_text.empty());
}

TEST_CASE("parallel folds change nothing in the report") {
  const fs::path dir = work_dir("jobs");
  run("synth --n 120 --seed 12 --out " + dir.string());
  const std::string base = "train --input " + (dir / "synth.csv").string() +
                           " --protected x --target y --task reg --kernel poly:2" +
                           " --constraint coarse:0.3 --relative --method mt" +
                           " --learner ridge:0.001 --iterations 2 --folds 4 --seed 2";
  const RunResult serial = run(base + " --jobs 1");
  const RunResult parallel = run(base + " --jobs 4");
  REQUIRE(serial.exit_code == 0);
  REQUIRE(parallel.exit_code == 0);
  CHECK(serial.stdout_text == parallel.stdout_text);
}

TEST_CASE("standardizing the protected attribute rescales the indicator") {
  const fs::path dir = work_dir("standardize");
  run("synth --n 150 --seed 13 --out " + dir.string());
  const std::string base = "audit --input " + (dir / "synth.csv").string() +
                           " --protected x --target y --task reg --kernel poly:1";
  const json plain = json::parse(run(base).stdout_text);
  const json scaled = json::parse(run(base + " --standardize").stdout_text);

  const gedi::Dataset ds =
      gedi::load_dataset((dir / "synth.csv").string(), {"x", "y", gedi::Task::Regression});
  const double sd = std::sqrt(
      (ds.protected_attr.array() - ds.protected_attr.mean()).square().mean());
  // Order-1 value scales linearly with the attribute's units.
  CHECK(scaled["indicators"]["gedi_v1"].get<double>() ==
        doctest::Approx(plain["indicators"]["gedi_v1"].get<double>() * sd).epsilon(1e-9));
  CHECK(plain["kernel_diagnostics"]["rank"] == 1);
}

TEST_CASE("module errors surface as machine-readable JSON with nonzero exit") {
  const fs::path dir = work_dir("errors");
  run("synth --n 50 --seed 10 --out " + dir.string());
  const RunResult r = run("audit --input " + (dir / "synth.csv").string() +
                          " --protected nope --target y --task reg");
  CHECK(r.exit_code == 2);
  const json rep = json::parse(r.stdout_text);
  CHECK(rep["error"] == "missing_column");
  CHECK(rep.contains("message"));
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-gedi-binary> [doctest args]\n");
    return 1;
  }
  g_cli = argv[1];
  doctest::Context ctx;
  ctx.applyCommandLine(argc - 1, argv + 1);
  return ctx.run();
}
