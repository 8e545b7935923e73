#include "besq/mcverify.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "besq/error.hpp"

namespace besq {

namespace {

struct KindName {
  ExperimentKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::Laplace, "laplace"},
    {ExperimentKind::LaplaceExact, "laplace-exact"},
    {ExperimentKind::Negativity, "negativity"},
    {ExperimentKind::PsdRetention, "psd-retention"},
    {ExperimentKind::Comparison, "comparison"},
    {ExperimentKind::NonCollision, "noncollision"},
    {ExperimentKind::PolynomialDynamics, "polynomial"},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InvalidInput(std::string(what) + ": not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::uint64_t parse_unsigned(std::string_view text, std::string_view what) {
  text = trim(text);
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw InvalidInput(std::string(what) + ": not a non-negative integer: '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidInput(std::string(what) + ": not a boolean: '" + std::string(text) + "'");
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::size_t dim_from_upper_count(std::size_t count) {
  std::size_t p = 0;
  while (p * (p + 1) / 2 < count) ++p;
  if (p * (p + 1) / 2 != count || p == 0) {
    throw InvalidInput("matrix file: " + std::to_string(count) +
                       " entries is not an upper-triangle size");
  }
  return p;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto next = text.find_first_of(", \t\r\n", pos);
    const auto token = trim(text.substr(pos, next == std::string_view::npos ? next : next - pos));
    if (!token.empty()) out.push_back(parse_double(token, "number list"));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

SymMatrix parse_matrix_spec(std::string_view spec, std::optional<std::size_t> p) {
  spec = trim(spec);
  auto check_dim = [&](std::size_t got) {
    if (p && *p != got) {
      throw InvalidInput("matrix spec '" + std::string(spec) + "' has dimension " +
                         std::to_string(got) + ", expected " + std::to_string(*p));
    }
  };
  if (spec == "zero" || spec == "identity") {
    if (!p || *p == 0) throw InvalidInput("matrix spec '" + std::string(spec) + "' needs a dimension p");
    return spec == "zero" ? SymMatrix::zero(*p) : SymMatrix::identity(*p);
  }
  if (spec.starts_with("diag:")) {
    const auto diag = parse_number_list(spec.substr(5));
    if (diag.empty()) throw InvalidInput("matrix spec: empty diagonal");
    check_dim(diag.size());
    return SymMatrix::diagonal(diag);
  }
  if (spec.starts_with("file:")) {
    const std::string path(spec.substr(5));
    std::ifstream in(path);
    if (!in) throw InvalidInput("matrix spec: cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto upper = parse_number_list(buffer.str());
    const std::size_t dim = dim_from_upper_count(upper.size());
    check_dim(dim);
    return SymMatrix::from_upper(dim, upper);
  }
  throw InvalidInput("matrix spec '" + std::string(spec) +
                     "': expected diag:a,b,... | file:PATH | zero | identity");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
      }
      const auto key = trim(line.substr(0, eq));
      if (key.empty()) throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
      out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

void apply_config_entries(const std::map<std::string, std::string>& entries, ExperimentConfig& c) {
  for (const auto& [key, value] : entries) {
    if (key == "experiment") {
      const auto kind = parse_experiment_kind(value);
      if (!kind) throw InvalidInput("config: unknown experiment '" + value + "'");
      c.kind = *kind;
    } else if (key == "name") {
      c.name = value;
    } else if (key == "p") {
      c.p = parse_unsigned(value, key);
    } else if (key == "alpha") {
      c.alpha = parse_double(value, key);
    } else if (key == "x0") {
      c.x0_spec = value;
    } else if (key == "lambda0") {
      c.lambda0 = parse_number_list(value);
    } else if (key == "u") {
      c.u_spec = value;
    } else if (key == "t_end" || key == "t") {
      c.t_end = parse_double(value, key);
    } else if (key == "dt") {
      c.dt = parse_double(value, key);
    } else if (key == "n_paths" || key == "paths") {
      c.n_paths = parse_unsigned(value, key);
    } else if (key == "seed") {
      c.master_seed = parse_unsigned(value, key);
    } else if (key == "confidence_k") {
      c.tol.confidence_k = parse_double(value, key);
    } else if (key == "bias_allowance") {
      c.tol.bias_allowance = parse_double(value, key);
    } else if (key == "psd_slack") {
      c.tol.psd_slack = parse_double(value, key);
    } else if (key == "exit_budget") {
      c.tol.exit_budget = parse_double(value, key);
    } else if (key == "comparison_slack") {
      c.tol.comparison_slack = parse_double(value, key);
    } else if (key == "relative_band") {
      c.tol.relative_band = parse_double(value, key);
    } else if (key == "eps_reg") {
      c.eps_reg = parse_double(value, key);
    } else if (key == "threads") {
      c.threads = parse_unsigned(value, key);
    } else if (key == "mode") {
      if (value != "particles" && value != "scalar-exact") {
        throw InvalidInput("config: mode must be particles or scalar-exact");
      }
      c.mode = value;
    } else if (key == "diagnostic") {
      c.diagnostic = parse_bool(value, key);
    } else if (key == "output") {
      c.output_dir = value;
    } else {
      throw InvalidInput("config: unknown key '" + key + "'");
    }
  }
}

void finalize_config(ExperimentConfig& c) {
  std::optional<std::size_t> p;
  if (c.p > 0) p = c.p;
  c.x0 = parse_matrix_spec(c.x0_spec, p ? p : (c.lambda0 ? std::optional(c.lambda0->size()) : p));
  c.p = c.x0.dim();
  c.u = parse_matrix_spec(c.u_spec, c.p);
  if (c.lambda0) {
    if (c.lambda0->size() != c.p) throw InvalidInput("config: lambda0 length does not match p");
    if (!std::is_sorted(c.lambda0->begin(), c.lambda0->end())) {
      throw InvalidInput("config: lambda0 must be sorted ascending");
    }
  }
  if (c.n_paths < 1) throw InvalidInput("config: n_paths must be at least 1");
  const auto& t = c.tol;
  if (!(t.confidence_k > 0 && t.bias_allowance >= 0 && t.psd_slack > 0 && t.exit_budget > 0 &&
        t.comparison_slack > 0 && t.relative_band > 0)) {
    throw InvalidInput("config: tolerances must be positive");
  }
  if (c.eps_reg < 0.0) throw InvalidInput("config: eps_reg must be nonnegative");
  if (c.name.empty()) c.name = std::string(to_string(c.kind));
  GridSpec::make(c.t_end, c.dt);
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
    case Verdict::Error: return "error";
  }
  return "error";
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::WithinBand: return "|value-target|<=band";
    case Rule::Above: return "value-band>target";
    case Rule::AtMost: return "value<=target+band";
    case Rule::Vacuous: return "vacuous";
  }
  return "vacuous";
}

bool rule_holds(Rule rule, double value, double target, double band) {
  switch (rule) {
    case Rule::WithinBand: return std::abs(value - target) <= band;
    case Rule::Above: return value - band > target;
    case Rule::AtMost: return value <= target + band;
    case Rule::Vacuous: return true;
  }
  return false;
}

const Estimate* ExperimentReport::find(std::string_view estimate_name) const {
  for (const auto& e : estimates) {
    if (e.name == estimate_name) return &e;
  }
  return nullptr;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  switch (config.kind) {
    case ExperimentKind::Laplace: report = verify_laplace(config); break;
    case ExperimentKind::LaplaceExact: report = verify_laplace_exact(config); break;
    case ExperimentKind::Negativity: report = estimate_negativity(config); break;
    case ExperimentKind::PsdRetention: report = verify_psd_retention(config); break;
    case ExperimentKind::Comparison: report = verify_comparison(config); break;
    case ExperimentKind::NonCollision: report = verify_noncollision(config); break;
    case ExperimentKind::PolynomialDynamics: report = verify_polynomial_dynamics(config); break;
  }
  if (!config.output_dir.empty()) write_report_files(report, config.output_dir);
  return report;
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs) {
  SuiteResult suite;
  for (const auto& config : configs) {
    ExperimentReport report;
    try {
      report = run_experiment(config);
    } catch (const std::exception& e) {
      report = ExperimentReport{};
      report.name = config.name;
      report.kind = config.kind;
      report.verdict = Verdict::Error;
      report.error = e.what();
      report.master_seed = config.master_seed;
    }
    ++suite.summary.total;
    switch (report.verdict) {
      case Verdict::Pass: ++suite.summary.passed; break;
      case Verdict::Fail: ++suite.summary.failed; break;
      case Verdict::Inconclusive: ++suite.summary.inconclusive; break;
      case Verdict::Error: ++suite.summary.errors; break;
    }
    suite.reports.push_back(std::move(report));
  }
  return suite;
}

namespace {

struct PresetSpec {
  std::string_view name;
  std::string_view entries;
};

// n_paths below are the full-size runs; preset() scales them.
constexpr PresetSpec kPresets[] = {
    {"laplace/p2-a3",
     "experiment=laplace\nalpha=3\nx0=diag:1,0.5\nu=diag:0.3,0.1\nt=1\ndt=0.0009765625\npaths=200000"},
    {"laplace-exact/p2-b1",
     "experiment=laplace-exact\nalpha=2\nx0=diag:1,0.5\nu=diag:0.3,0.1\nt=1\npaths=200000"},
    {"negativity/p2-a0.5",
     "experiment=negativity\nalpha=0.5\nx0=diag:1,2\nt=1\ndt=0.0009765625\npaths=10000"},
    {"psd-retention/p2-a1",
     "experiment=psd-retention\nalpha=1\nx0=diag:1,2\nt=1\ndt=0.000244140625\npaths=1000"},
    {"psd-retention/p3-a2",
     "experiment=psd-retention\nalpha=2\nx0=diag:1,2,3\nt=1\ndt=0.000244140625\npaths=1000"},
    {"comparison/p2-a0.5",
     "experiment=comparison\nalpha=0.5\nlambda0=0,1\nx0=diag:0,1\nt=1\ndt=0.0009765625\npaths=1000"},
    {"comparison/p3-a1.5",
     "experiment=comparison\nalpha=1.5\nlambda0=0,1,2\nx0=diag:0,1,2\nt=1\ndt=0.0009765625\npaths=1000"},
    {"noncollision/p2-a1",
     "experiment=noncollision\nalpha=1\nx0=diag:1,2\nt=1\ndt=0.0009765625\npaths=1000"},
    {"noncollision/p3-a1",
     "experiment=noncollision\nalpha=1\nx0=diag:1,2,3\nt=1\ndt=0.0009765625\npaths=1000"},
    {"polynomial/p2-a3",
     "experiment=polynomial\nalpha=3\nx0=identity\np=2\nt=1\ndt=0.0009765625\npaths=100"},
    {"polynomial/p3-a1",
     "experiment=polynomial\nalpha=1\nx0=diag:1,2,3\nt=1\ndt=0.0009765625\npaths=400"},
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

ExperimentConfig preset(std::string_view name, double scale) {
  for (const auto& p : kPresets) {
    // Accept both "laplace/p2-a3" and the short form "p2-a3" when unambiguous.
    const bool match = p.name == name || (name.size() < p.name.size() && p.name.ends_with(name) &&
                                          p.name[p.name.size() - name.size() - 1] == '/');
    if (!match) continue;
    ExperimentConfig c;
    c.p = 0;
    apply_config_entries(parse_key_values(p.entries), c);
    c.name = std::string(p.name);
    if (!(scale > 0.0)) throw InvalidInput("preset: scale must be positive");
    c.n_paths = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(c.n_paths) * scale)));
    finalize_config(c);
    return c;
  }
  throw InvalidInput("unknown preset '" + std::string(name) + "'");
}

std::vector<ExperimentConfig> default_suite(double scale) {
  std::vector<ExperimentConfig> out;
  for (const auto& p : kPresets) out.push_back(preset(p.name, scale));
  return out;
}

namespace {

nlohmann::ordered_json report_json(const ExperimentReport& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["experiment"] = r.name;
  j["kind"] = std::string(to_string(r.kind));
  j["verdict"] = std::string(to_string(r.verdict));
  if (!r.error.empty()) j["error"] = r.error;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = cfg;
  nlohmann::ordered_json estimates = nlohmann::ordered_json::array();
  for (const auto& e : r.estimates) {
    nlohmann::ordered_json je;
    je["name"] = e.name;
    je["value"] = e.value;
    je["stderr"] = e.stderr_;
    je["target"] = e.target;
    je["band"] = e.band;
    je["rule"] = std::string(to_string(e.rule));
    je["verdict"] = std::string(to_string(e.verdict));
    je["samples"] = e.samples;
    estimates.push_back(je);
  }
  j["estimates"] = estimates;
  j["clamp_activations"] = r.clamp_activations;
  j["reorder_events"] = r.reorder_events;
  j["rng"] = {{"generator", "philox4x32-10"}, {"master_seed", r.master_seed}, {"streams", r.n_streams}};
  if (include_timing) j["timing"] = {{"runtime_seconds", r.runtime_seconds}};
  return j;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report, bool include_timing) {
  return report_json(report, include_timing).dump(2);
}

std::string suite_to_json(const SuiteResult& suite, bool include_timing) {
  nlohmann::ordered_json j;
  j["summary"] = {{"total", suite.summary.total},
                  {"passed", suite.summary.passed},
                  {"failed", suite.summary.failed},
                  {"inconclusive", suite.summary.inconclusive},
                  {"errors", suite.summary.errors}};
  nlohmann::ordered_json reports = nlohmann::ordered_json::array();
  for (const auto& r : suite.reports) reports.push_back(report_json(r, include_timing));
  j["reports"] = reports;
  return j.dump(2);
}

void write_path_summary_csv(std::ostream& out, const ExperimentReport& report) {
  out << "path_index,min_lambda1,exit_flag,laplace_value\n";
  out << std::setprecision(17);
  for (const auto& s : report.paths) {
    out << s.path_index << ',' << s.min_lambda1 << ',' << (s.exit_flag ? 1 : 0) << ',';
    if (std::isnan(s.laplace_value)) {
      out << "";
    } else {
      out << s.laplace_value;
    }
    out << '\n';
  }
}

void write_report_files(const ExperimentReport& report, const std::string& directory) {
  std::filesystem::create_directories(directory);
  {
    std::ofstream json(std::filesystem::path(directory) / "report.json");
    if (!json) throw InvalidInput("cannot write report.json under '" + directory + "'");
    json << report_to_json(report) << '\n';
  }
  std::ofstream csv(std::filesystem::path(directory) / "paths.csv");
  if (!csv) throw InvalidInput("cannot write paths.csv under '" + directory + "'");
  write_path_summary_csv(csv, report);
}

// Shared with experiments.cpp.
std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> out = {
      {"experiment", std::string(to_string(c.kind))},
      {"p", std::to_string(c.p)},
      {"alpha", format_double(c.alpha)},
      {"x0", c.x0_spec},
      {"u", c.u_spec},
      {"t_end", format_double(c.t_end)},
      {"dt", format_double(c.dt)},
      {"n_paths", std::to_string(c.n_paths)},
      {"seed", std::to_string(c.master_seed)},
      {"confidence_k", format_double(c.tol.confidence_k)},
      {"bias_allowance", format_double(c.tol.bias_allowance)},
      {"psd_slack", format_double(c.tol.psd_slack)},
      {"exit_budget", format_double(c.tol.exit_budget)},
      {"comparison_slack", format_double(c.tol.comparison_slack)},
      {"relative_band", format_double(c.tol.relative_band)},
      {"eps_reg", format_double(c.eps_reg)},
      {"mode", c.mode},
      {"diagnostic", c.diagnostic ? "true" : "false"},
  };
  if (c.lambda0) out.emplace_back("lambda0", format_list(*c.lambda0));
  return out;
}

}  // namespace besq
