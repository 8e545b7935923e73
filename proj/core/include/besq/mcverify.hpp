#pragma once

// Monte Carlo experiments that turn the properties of matrix BESQ processes
// and their eigenvalue particle systems into pass/fail verdicts.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "besq/sde.hpp"
#include "besq/symcore.hpp"

namespace besq {

enum class ExperimentKind {
  Laplace,             // Euler Monte Carlo of E exp(-Tr(u X_t)) vs closed form
  LaplaceExact,        // outer-product sampler vs closed form
  Negativity,          // P(lambda_1(t) < 0) > 0 for 0 < alpha < p-1
  PsdRetention,        // cone-valued regime stays (numerically) in the cone
  Comparison,          // lambda_1 <= comparison process pathwise
  NonCollision,        // particles keep positive gaps for t > 0
  PolynomialDynamics,  // drift and quadratic variation of e_n(X_t)
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

struct Tolerances {
  double confidence_k = 3.0;
  // Allowed Euler bias for the Laplace check at dt = 2^-10.
  double bias_allowance = 0.01;
  // A path has exited the cone when min lambda_1 < -psd_slack.
  double psd_slack = 0.05;
  // Fraction of exiting paths tolerated in the retention check.
  double exit_budget = 0.01;
  // Comparison violations are lambda_1 > comparison + slack * sqrt(dt).
  double comparison_slack = 10.0;
  // Relative band for the regression checks.
  double relative_band = 0.10;
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::Laplace;
  std::size_t p = 2;
  double alpha = 3.0;
  SymMatrix x0 = SymMatrix::identity(2);
  std::string x0_spec = "identity";
  // Explicit particle start; otherwise eig(x0).
  std::optional<std::vector<double>> lambda0;
  SymMatrix u = SymMatrix::identity(2);
  std::string u_spec = "identity";
  double t_end = 1.0;
  double dt = kDefaultDt;
  std::size_t n_paths = 1000;
  std::uint64_t master_seed = 42;
  Tolerances tol;
  double eps_reg = kDefaultEpsReg;
  std::size_t threads = 0;
  // Negativity: "particles" (default) or "scalar-exact" (comparison process only).
  std::string mode = "particles";
  // Negativity outside 0 < alpha < p-1, reported against the exit budget.
  bool diagnostic = false;
  // Directory for report.json and paths.csv; empty disables file output.
  std::string output_dir;
};

// Matrix grammar: "diag:a,b,c" | "file:PATH" (upper triangle, row-major,
// separated by commas or whitespace) | "zero" | "identity". `p` is required
// for zero/identity and checked against the others when given.
SymMatrix parse_matrix_spec(std::string_view spec, std::optional<std::size_t> p = std::nullopt);
std::vector<double> parse_number_list(std::string_view text);

// Flat "key = value" lines with '#' comments.
std::map<std::string, std::string> parse_key_values(std::string_view text);
// Applies entries on top of `config`; unknown keys throw InvalidInput.
void apply_config_entries(const std::map<std::string, std::string>& entries, ExperimentConfig& config);
// Re-reads x0/u with the final p. Call after all overrides are applied.
void finalize_config(ExperimentConfig& config);

enum class Verdict { Pass, Fail, Inconclusive, Error };
std::string_view to_string(Verdict verdict);

// How an estimate is judged against its target.
enum class Rule {
  WithinBand,  // |value - target| <= band
  Above,       // value - band > target
  AtMost,      // value <= target + band
  Vacuous,     // nothing to test
};
std::string_view to_string(Rule rule);
bool rule_holds(Rule rule, double value, double target, double band);

struct Estimate {
  std::string name;
  double value = 0.0;
  double stderr_ = 0.0;
  double target = 0.0;
  double band = 0.0;
  Rule rule = Rule::WithinBand;
  Verdict verdict = Verdict::Inconclusive;
  std::size_t samples = 0;
};

struct PathSummary {
  std::size_t path_index = 0;
  double min_lambda1 = 0.0;
  bool exit_flag = false;
  // exp(-Tr(u X_t)) at t_end; NaN when the experiment has no matrix state.
  double laplace_value = 0.0;
};

struct ExperimentReport {
  std::string name;
  ExperimentKind kind = ExperimentKind::Laplace;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<Estimate> estimates;
  Verdict verdict = Verdict::Inconclusive;
  std::string error;
  double runtime_seconds = 0.0;
  std::uint64_t clamp_activations = 0;
  std::uint64_t reorder_events = 0;
  std::uint64_t master_seed = 0;
  std::size_t n_streams = 0;
  std::vector<PathSummary> paths;

  const Estimate* find(std::string_view estimate_name) const;
};

ExperimentReport verify_laplace(const ExperimentConfig& config);
ExperimentReport verify_laplace_exact(const ExperimentConfig& config);
ExperimentReport estimate_negativity(const ExperimentConfig& config);
ExperimentReport verify_psd_retention(const ExperimentConfig& config);
ExperimentReport verify_comparison(const ExperimentConfig& config);
ExperimentReport verify_noncollision(const ExperimentConfig& config);
ExperimentReport verify_polynomial_dynamics(const ExperimentConfig& config);

// Dispatches on config.kind. Precondition failures propagate.
ExperimentReport run_experiment(const ExperimentConfig& config);

struct SuiteSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::size_t failed = 0;
  std::size_t inconclusive = 0;
  std::size_t errors = 0;
  bool all_passed() const { return passed == total; }
};

struct SuiteResult {
  std::vector<ExperimentReport> reports;
  SuiteSummary summary;
};

// Runs every config; an experiment that throws becomes a report with
// verdict Error and the message, and the suite continues.
SuiteResult run_suite(const std::vector<ExperimentConfig>& configs);

// Named parameter sets, e.g. "laplace/p2-a3". `scale` multiplies n_paths.
std::vector<std::string> preset_names();
ExperimentConfig preset(std::string_view name, double scale = 1.0);
std::vector<ExperimentConfig> default_suite(double scale = 1.0);

// JSON report; timing is omitted when include_timing is false so two runs
// of the same config serialize identically.
std::string report_to_json(const ExperimentReport& report, bool include_timing = true);
std::string suite_to_json(const SuiteResult& suite, bool include_timing = true);
// Columns path_index, min_lambda1, exit_flag, laplace_value.
void write_path_summary_csv(std::ostream& out, const ExperimentReport& report);
// Writes report.json and paths.csv under config.output_dir (created if needed).
void write_report_files(const ExperimentReport& report, const std::string& directory);

}  // namespace besq
