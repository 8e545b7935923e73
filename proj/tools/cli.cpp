#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "besq/error.hpp"
#include "besq/mcverify.hpp"
#include "besq/sde.hpp"
#include "besq/wallach.hpp"

namespace besq::cli {

namespace {

constexpr std::uint64_t kDefaultSeed = 42;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv(kSeedEnvVar);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  const std::string text(raw);
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.front() == '-') {
    throw InvalidInput(std::string(kSeedEnvVar) + " must be a non-negative integer");
  }
  return value;
}

// flag > environment > config file > default.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> from_config) {
  if (flag) return *flag;
  if (const auto env = seed_from_env()) return *env;
  if (from_config) return *from_config;
  return kDefaultSeed;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct WallachArgs {
  std::size_t p = 0;
  double beta = 0.0;
  std::string x0 = "zero";
  double epsilon = kDefaultRankEpsilon;
  std::string query;
};

int cmd_wallach_check(const WallachArgs& a, const CLI::App& sub, std::ostream& out) {
  std::string response;
  if (!a.query.empty()) {
    const std::string text = a.query == "-" ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                            : read_file(a.query);
    response = evaluate_membership_json(text);
  } else {
    if (sub.count("-b") == 0) throw InvalidInput("wallach-check: --beta is required");
    std::optional<std::size_t> p;
    if (a.p > 0) p = a.p;
    const SymMatrix x0 = parse_matrix_spec(a.x0, p);
    nlohmann::json q;
    q["p"] = x0.dim();
    q["beta"] = a.beta;
    q["x0"] = x0.upper();
    q["epsilon"] = a.epsilon;
    response = evaluate_membership_json(q.dump());
  }
  out << response << '\n';
  return nlohmann::json::parse(response).at("member").get<bool>() ? kExitOk : kExitNegative;
}

struct SimulateArgs {
  std::string mode = "matrix";
  std::size_t p = 0;
  double alpha = 0.0;
  std::string x0;
  std::string lambda0;
  double delta = 0.0;
  double t_end = 1.0;
  double dt = kDefaultDt;
  std::size_t paths = 1;
  std::optional<std::uint64_t> seed;
  bool exact_law = false;
  double eps_reg = kDefaultEpsReg;
  std::string out_path;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const GridSpec grid = GridSpec::make(a.t_end, a.dt);
  const std::uint64_t seed = resolve_seed(a.seed, std::nullopt);
  if (a.paths < 1) throw InvalidInput("simulate: --paths must be at least 1");
  std::optional<std::size_t> p;
  if (a.p > 0) p = a.p;

  auto write_one = [&](std::size_t index, std::ostream& os) {
    RngStream rng(seed, index);
    if (a.mode == "matrix") {
      if (a.x0.empty()) throw InvalidInput("simulate: matrix mode needs --x0");
      write_path_csv(os, simulate_matrix_besq(parse_matrix_spec(a.x0, p), a.alpha, grid, rng));
    } else if (a.mode == "particles") {
      std::vector<double> lambda0;
      if (!a.lambda0.empty()) {
        lambda0 = parse_number_list(a.lambda0);
      } else if (!a.x0.empty()) {
        const Eigen::VectorXd ev = eigenvalues(parse_matrix_spec(a.x0, p));
        lambda0.assign(ev.data(), ev.data() + ev.size());
      } else {
        throw InvalidInput("simulate: particle mode needs --lambda0 or --x0");
      }
      if (p && lambda0.size() != *p) throw InvalidInput("simulate: --lambda0 length does not match -p");
      write_path_csv(os, simulate_particles(lambda0, a.alpha, grid, rng, a.eps_reg));
    } else if (a.mode == "scalar") {
      const auto start = a.x0.empty() ? std::vector<double>{0.0} : parse_number_list(a.x0);
      if (start.size() != 1) throw InvalidInput("simulate: scalar mode needs a single number for --x0");
      const auto path = a.exact_law ? simulate_scalar_besq_exact(start[0], a.delta, grid, rng)
                                    : simulate_scalar_besq(start[0], a.delta, grid, rng);
      write_path_csv(os, grid, path);
    } else {
      throw InvalidInput("simulate: --mode must be matrix, particles or scalar");
    }
  };

  if (a.paths == 1) {
    if (a.out_path.empty() || a.out_path == "-") {
      write_one(0, out);
    } else {
      std::ofstream file(a.out_path);
      if (!file) throw InvalidInput("simulate: cannot write '" + a.out_path + "'");
      write_one(0, file);
    }
    return kExitOk;
  }
  if (a.out_path.empty()) throw InvalidInput("simulate: --out DIR is required with --paths > 1");
  std::filesystem::create_directories(a.out_path);
  for (std::size_t i = 0; i < a.paths; ++i) {
    std::ostringstream name;
    name << "path_" << std::setw(5) << std::setfill('0') << i << ".csv";
    std::ofstream file(std::filesystem::path(a.out_path) / name.str());
    if (!file) throw InvalidInput("simulate: cannot write under '" + a.out_path + "'");
    write_one(i, file);
  }
  return kExitOk;
}

// Experiment flags, stored as config-file entries so that flags and files go
// through one code path.
struct ExperimentFlags {
  std::vector<std::string> config_files;
  std::map<std::string, std::string> entries;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t threads = 0;
  bool no_timing = false;
};

void add_experiment_flags(CLI::App& sub, ExperimentFlags& f, bool single) {
  auto entry = [&](const std::string& names, const std::string& key, const std::string& help) {
    sub.add_option_function<std::string>(names, [&f, key](const std::string& v) { f.entries[key] = v; }, help);
  };
  if (single) {
    entry("-p,--dim", "p", "Matrix dimension p");
    entry("-a,--alpha", "alpha", "Drift alpha = 2 beta");
    entry("--x0", "x0", "Start: diag:a,b,.. | file:PATH | zero | identity");
    entry("--lambda0", "lambda0", "Particle start, sorted comma list");
    entry("--u", "u", "Laplace argument (matrix grammar as --x0)");
    entry("--t", "t_end", "Time horizon");
    entry("--dt", "dt", "Time step");
    entry("--paths", "n_paths", "Number of Monte Carlo paths");
    entry("--mode", "mode", "Negativity mode: particles | scalar-exact");
    entry("--eps-reg", "eps_reg", "Collision regularization");
    entry("--confidence-k", "confidence_k", "Confidence multiplier k");
    entry("--bias-allowance", "bias_allowance", "Euler bias allowance (Laplace)");
    entry("--psd-slack", "psd_slack", "Cone exit slack");
    entry("--exit-budget", "exit_budget", "Tolerated exit fraction");
    entry("--comparison-slack", "comparison_slack", "Comparison slack multiplier");
    sub.add_flag_function("--diagnostic", [&f](std::int64_t) { f.entries["diagnostic"] = "true"; },
                          "Negativity outside 0 < alpha < p-1");
  }
  sub.add_option("--config", f.config_files, "key = value configuration file")->check(CLI::ExistingFile);
  sub.add_option("--seed", f.seed, "Master seed (overrides " + std::string(kSeedEnvVar) + ")");
  sub.add_option("--out", f.out_dir, "Directory for report.json and paths.csv");
  sub.add_option("--threads", f.threads, "Worker thread cap (0 = all cores)");
  sub.add_flag("--no-timing", f.no_timing, "Omit runtime from JSON output");
}

ExperimentConfig build_config(ExperimentConfig base, const ExperimentFlags& f,
                              std::optional<ExperimentKind> kind) {
  std::optional<std::uint64_t> config_seed;
  for (const auto& file : f.config_files) {
    auto entries = parse_key_values(read_file(file));
    if (const auto it = entries.find("seed"); it != entries.end()) {
      apply_config_entries({{"seed", it->second}}, base);
      config_seed = base.master_seed;
      entries.erase(it);
    }
    apply_config_entries(entries, base);
  }
  // A new start point without -p re-infers the dimension.
  if (!f.entries.count("p") && (f.entries.count("x0") || f.entries.count("lambda0"))) {
    base.p = 0;
    if (!f.entries.count("lambda0")) base.lambda0.reset();
    if (!f.entries.count("u")) base.u_spec = "identity";
  }
  apply_config_entries(f.entries, base);
  if (kind) base.kind = *kind;
  base.master_seed = resolve_seed(f.seed, config_seed);
  base.threads = f.threads;
  if (!f.out_dir.empty()) base.output_dir = f.out_dir;
  finalize_config(base);
  return base;
}

struct VerifyArgs {
  std::string experiment;
  std::string preset;
  ExperimentFlags flags;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentConfig base;
  std::optional<ExperimentKind> kind;
  if (!a.experiment.empty()) {
    kind = parse_experiment_kind(a.experiment);
    if (!kind) throw InvalidInput("verify: unknown experiment '" + a.experiment + "'");
  }
  if (!a.preset.empty()) {
    const bool qualified = a.preset.find('/') != std::string::npos;
    const std::string name = qualified || a.experiment.empty() ? a.preset : a.experiment + "/" + a.preset;
    base = preset(name);
    base.name = name;
    if (kind && *kind != base.kind) throw InvalidInput("verify: preset does not match experiment");
  } else if (!kind) {
    throw InvalidInput("verify: name an experiment or a --preset");
  }
  const ExperimentConfig config = build_config(base, a.flags, kind);
  ExperimentReport report;
  try {
    report = run_experiment(config);
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << '\n';
    return kExitError;
  }
  out << report_to_json(report, !a.flags.no_timing) << '\n';
  return report.verdict == Verdict::Pass ? kExitOk : kExitNegative;
}

struct SuiteArgs {
  double scale = 1.0;
  std::vector<std::string> presets;
  ExperimentFlags flags;
};

int cmd_suite(const SuiteArgs& a, std::ostream& out) {
  std::vector<ExperimentConfig> configs;
  const auto names = a.presets.empty() ? preset_names() : a.presets;
  for (const auto& name : names) {
    ExperimentConfig c = preset(name, a.scale);
    ExperimentFlags flags = a.flags;
    flags.out_dir.clear();
    c = build_config(c, flags, std::nullopt);
    if (!a.flags.out_dir.empty()) {
      std::string dir = name;
      for (char& ch : dir) {
        if (ch == '/') ch = '_';
      }
      c.output_dir = (std::filesystem::path(a.flags.out_dir) / dir).string();
    }
    configs.push_back(std::move(c));
  }
  const SuiteResult suite = run_suite(configs);
  out << suite_to_json(suite, !a.flags.no_timing) << '\n';
  if (!a.flags.out_dir.empty()) {
    std::filesystem::create_directories(a.flags.out_dir);
    std::ofstream summary(std::filesystem::path(a.flags.out_dir) / "suite.json");
    summary << suite_to_json(suite, !a.flags.no_timing) << '\n';
  }
  return suite.summary.all_passed() ? kExitOk : kExitNegative;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"besqlab: squared Bessel matrix processes and Wallach sets"};
  app.require_subcommand(1);

  WallachArgs wallach;
  auto* wc = app.add_subcommand("wallach-check", "Non-central Wallach set membership of (x0, beta)");
  wc->add_option("-p,--dim", wallach.p, "Matrix dimension p");
  wc->add_option("-b,--beta", wallach.beta, "Shape parameter beta");
  wc->add_option("--x0", wallach.x0, "diag:a,b,.. | file:PATH | zero | identity");
  wc->add_option("--epsilon", wallach.epsilon, "Relative rank tolerance");
  wc->add_option("--query", wallach.query, "JSON query file, '-' for stdin");

  SimulateArgs sim;
  auto* sc = app.add_subcommand("simulate", "Integrate one or more paths and dump CSV");
  sc->add_option("--mode", sim.mode, "matrix | particles | scalar")
      ->check(CLI::IsMember({"matrix", "particles", "scalar"}));
  sc->add_option("-p,--dim", sim.p, "Matrix dimension p");
  sc->add_option("-a,--alpha", sim.alpha, "Drift alpha");
  sc->add_option("--x0", sim.x0, "Matrix start (matrix grammar) or scalar start");
  sc->add_option("--lambda0", sim.lambda0, "Particle start, sorted comma list");
  sc->add_option("--delta", sim.delta, "Scalar BESQ dimension");
  sc->add_option("--t", sim.t_end, "Time horizon");
  sc->add_option("--dt", sim.dt, "Time step");
  sc->add_option("--paths", sim.paths, "Number of paths");
  sc->add_option("--seed", sim.seed, "Master seed (overrides " + std::string(kSeedEnvVar) + ")");
  sc->add_flag("--exact-law", sim.exact_law, "Exact transition sampler (scalar mode)");
  sc->add_option("--eps-reg", sim.eps_reg, "Collision regularization (particles)");
  sc->add_option("--out", sim.out_path, "Output file (one path) or directory");

  VerifyArgs verify;
  auto* vc = app.add_subcommand("verify", "Run one Monte Carlo experiment");
  vc->add_option("experiment", verify.experiment,
                 "laplace | laplace-exact | negativity | psd-retention | comparison | noncollision | polynomial");
  vc->add_option("--preset", verify.preset, "Named parameter set, e.g. p2-a3");
  add_experiment_flags(*vc, verify.flags, true);

  SuiteArgs suite;
  auto* uc = app.add_subcommand("suite", "Run the default experiment suite");
  uc->add_option("--scale", suite.scale, "Multiplier for every preset's path count");
  uc->add_option("--preset", suite.presets, "Run only these presets");
  add_experiment_flags(*uc, suite.flags, false);

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("besqlab");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*wc) return cmd_wallach_check(wallach, *wc, out);
    if (*sc) return cmd_simulate(sim, out);
    if (*vc) return cmd_verify(verify, out, err);
    if (*uc) return cmd_suite(suite, out);
  } catch (const PreconditionError& e) {
    err << "precondition violated: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace besq::cli
