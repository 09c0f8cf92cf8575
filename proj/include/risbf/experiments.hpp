#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "risbf/types.hpp"

namespace risbf {

enum class ExperimentKind {
  nulling_prob,
  sumrate_convergence,
  sumrate_vs_pk,
  sumrate_vs_budget,
  powermin_success,
  powermin_power,
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from(const std::string& name);

// Position of the offending token in the spec text (1-based).
class SpecParseError : public std::runtime_error {
 public:
  SpecParseError(int line, int col, const std::string& what)
      : std::runtime_error(what), line(line), col(col) {}
  int line;
  int col;
};

struct ExperimentSpec {
  ExperimentKind experiment = ExperimentKind::nulling_prob;
  ScenarioConfig base;
  std::vector<int> q_list;
  std::vector<double> alpha_max_sq_db_list;
  std::vector<double> p_k_dbm_list;
  std::vector<double> p_ris_budget_dbm_list;
  std::vector<double> rate_req_list;
  int trials = 100;
  std::vector<std::string> schemes;  // empty: the experiment's default set
  std::string out_csv;               // empty: "<experiment>.csv"
};

// Sectioned key = value text; '#' starts a comment. Unknown sections, unknown
// keys, and malformed values throw SpecParseError.
ExperimentSpec parse_spec(const std::string& text);
ExperimentSpec load_spec(const std::string& path);

// Commented starting point for the given experiment, parseable as-is.
std::string spec_template(ExperimentKind kind);

// The scheme names run_experiment will execute, in emission order.
std::vector<std::string> resolved_schemes(const ExperimentSpec& spec);

// fn(i) for i in [0, n) on a bounded pool. Each index owns its output slot, so
// results do not depend on the worker count.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

struct RunResult {
  std::vector<std::string> csv_paths;  // primary file first
  std::string manifest_path;
};

// Writes the experiment's CSV file(s) plus "<stem>_manifest.json" into out_dir.
// spec_text is hashed into the manifest; pass the raw spec file content.
RunResult run_experiment(const ExperimentSpec& spec, const std::string& spec_text,
                         const std::string& out_dir, int workers);

// Long-format aggregation of a results CSV: one row per (group, scheme, metric)
// with Monte Carlo mean and standard error, plus per-pair difference rows when
// exactly two schemes share trial indices. Throws std::runtime_error when the
// header lacks a trial column or a metric cell is not numeric.
std::string summarize_csv(const std::string& csv_text);

std::string sha1_git_blob(const std::string& content);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace risbf
