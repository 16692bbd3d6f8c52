#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gedi {

// Every toolkit error carries a stable machine-readable code alongside the
// message; the CLI maps the code into its error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define GEDI_ERROR_TYPE(Name, code)                                  \
  struct Name : Error {                                              \
    explicit Name(const std::string& msg) : Error(code, msg) {}      \
  }

GEDI_ERROR_TYPE(NonFiniteInput, "non_finite_input");
GEDI_ERROR_TYPE(EmptyInput, "empty_input");
GEDI_ERROR_TYPE(LengthMismatch, "length_mismatch");
GEDI_ERROR_TYPE(RankDeficientKernel, "rank_deficient_kernel");
GEDI_ERROR_TYPE(ZeroVariance, "zero_variance");
GEDI_ERROR_TYPE(SingleGroup, "single_group");
GEDI_ERROR_TYPE(SingleClass, "single_class");
GEDI_ERROR_TYPE(DegenerateBinning, "degenerate_binning");
GEDI_ERROR_TYPE(Infeasible, "infeasible");
GEDI_ERROR_TYPE(MaxIterations, "max_iterations");
GEDI_ERROR_TYPE(RepairFailed, "repair_failed");
GEDI_ERROR_TYPE(DegenerateLabels, "degenerate_labels");
GEDI_ERROR_TYPE(SchemaMismatch, "schema_mismatch");
GEDI_ERROR_TYPE(NonDifferentiableLearner, "non_differentiable_learner");
GEDI_ERROR_TYPE(MissingColumn, "missing_column");
GEDI_ERROR_TYPE(TooFewRows, "too_few_rows");

#undef GEDI_ERROR_TYPE

// Parse failures point at the offending cell (1-based line, column name or
// 1-based column index rendered by the caller).
struct ParseError : Error {
  ParseError(int line, int column, const std::string& msg)
      : Error("parse_error", "line " + std::to_string(line) + ", column " +
                                 std::to_string(column) + ": " + msg),
        line(line),
        column(column) {}
  int line = 0;
  int column = 0;
};

}  // namespace gedi
