#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace warden {

enum class SolverOutcome { Sat, Unsat, Unknown, Timeout };
std::string_view to_string(SolverOutcome o);

struct SolverResult {
  SolverOutcome outcome = SolverOutcome::Unknown;
  std::string model_text;  ///< raw `(get-model)` output on sat
  std::string message;     ///< parser or process diagnostics
};

class SolverRunner {
 public:
  virtual ~SolverRunner() = default;
  virtual SolverResult run(const std::string& script, int timeout_ms) = 0;
};

struct SandboxLimits {
  long memory_bytes = 4L << 30;
  int max_open_files = 64;
};

/// Runs an SMT-LIB v2 solver (default `z3 -in -smt2`) in a child process with
/// resource limits, an empty environment and its own process group; the group
/// is killed when the deadline passes.
class ProcessSolverRunner : public SolverRunner {
 public:
  explicit ProcessSolverRunner(std::string executable = "z3", std::vector<std::string> args = {"-in", "-smt2"},
                               SandboxLimits limits = {});
  SolverResult run(const std::string& script, int timeout_ms) override;

 private:
  std::string executable_;
  std::vector<std::string> args_;
  SandboxLimits limits_;
};

/// Interprets raw solver stdout. Errors reported before the verdict mean the
/// script did not parse and yield Unknown.
SolverResult parse_solver_output(const std::string& output);

struct SmtSymbol {
  std::string name;
  std::string sort;  ///< e.g. "(_ BitVec 256)", "Int", "Bool"
  int bv_width = 0;  ///< 0 unless the sort is a bit-vector

  bool operator==(const SmtSymbol&) const = default;
};

/// Constants introduced by declare-const or nullary declare-fun.
std::vector<SmtSymbol> declared_symbols(const std::string& script);

/// Model values by symbol, as decimal strings (bit-vectors unsigned).
std::map<std::string, std::string> parse_model_values(const std::string& model_text);

struct RealismOptions {
  int amount_cap_bits = 128;
  int max_iterations = 256;
};

/// Default realism assertions chosen from symbol names: balance-like symbols
/// are non-negative, iteration-like symbols are at most `max_iterations`, and
/// every other numeric input is at most 2^amount_cap_bits.
std::vector<std::string> default_realism_constraints(const std::vector<SmtSymbol>& symbols,
                                                     const RealismOptions& options = {});

/// Inserts `(assert c)` for every constraint before the first `(check-sat)`
/// and makes sure the script ends with check-sat and get-model.
std::string attach_realism(const std::string& script, const std::vector<std::string>& constraints);

/// SMT literal for `value` in `symbol`'s sort.
std::string smt_literal(const SmtSymbol& symbol, const std::string& decimal_value);

/// Pins every declared symbol to its model value and re-runs the solver.
SolverResult recheck_model(const std::string& script, const std::map<std::string, std::string>& values,
                           SolverRunner& runner, int timeout_ms);

struct SmtProblem {
  std::string function;
  std::string script_text;  ///< includes the realism assertions
  std::vector<std::string> realism_constraints;
  SolverOutcome outcome = SolverOutcome::Unknown;
  std::string model_text;
  std::map<std::string, std::string> model_values;
  std::string message;
};

nlohmann::json to_json(const SmtProblem& p);

}  // namespace warden
