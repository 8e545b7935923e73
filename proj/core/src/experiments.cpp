#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "besq/error.hpp"
#include "besq/mcverify.hpp"
#include "besq/parallel.hpp"
#include "besq/polytrack.hpp"
#include "besq/stats.hpp"
#include "besq/wallach.hpp"

namespace besq {

std::vector<std::pair<std::string, std::string>> echo_config(const ExperimentConfig& c);

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ExperimentReport start_report(const ExperimentConfig& c) {
  ExperimentReport r;
  r.name = c.name.empty() ? std::string(to_string(c.kind)) : c.name;
  r.kind = c.kind;
  r.config = echo_config(c);
  r.master_seed = c.master_seed;
  r.n_streams = c.n_paths;
  return r;
}

Estimate judge(std::string name, double value, double se, double target, double band, Rule rule,
               std::size_t samples) {
  Estimate e{std::move(name), value, se, target, band, rule, Verdict::Inconclusive, samples};
  e.verdict = rule_holds(rule, value, target, band) ? Verdict::Pass : Verdict::Fail;
  return e;
}

void finish(ExperimentReport& r, const Stopwatch& clock) {
  bool any_fail = false;
  bool any_inconclusive = r.estimates.empty();
  for (const auto& e : r.estimates) {
    any_fail |= e.verdict == Verdict::Fail || e.verdict == Verdict::Error;
    any_inconclusive |= e.verdict == Verdict::Inconclusive;
  }
  r.verdict = any_fail ? Verdict::Fail : (any_inconclusive ? Verdict::Inconclusive : Verdict::Pass);
  r.runtime_seconds = clock.seconds();
}

std::string describe_membership_failure(const ExperimentConfig& c, const Membership& m) {
  return "parameters are not solvable on the PSD cone: (x0, alpha/2) is not in the non-central "
         "Wallach set (p = " + std::to_string(c.p) + ", alpha = " + std::to_string(c.alpha) +
         ", rank(x0) = " + std::to_string(m.rank) +
         "); need alpha >= p-1 (threshold branch) or alpha in {0,...,p-2} with rank(x0) <= alpha "
         "(discrete branch)";
}

void require_solvable(const ExperimentConfig& c) {
  const Membership m = cone_sde_solvable(c.x0, c.alpha);
  if (!m.member) throw PreconditionError(describe_membership_failure(c, m));
}

double trace_product(const SymMatrix& u, const SymMatrix& x) {
  return u.matrix().cwiseProduct(x.matrix()).sum();
}

std::vector<double> initial_particles(const ExperimentConfig& c) {
  if (c.lambda0) return *c.lambda0;
  const Eigen::VectorXd ev = eigenvalues(c.x0);
  return {ev.data(), ev.data() + ev.size()};
}

// Runs the matrix scheme for every path, recording min lambda_1 over the grid
// and exp(-Tr(u X_t)) at the horizon.
std::vector<PathSummary> run_matrix_ensemble(const ExperimentConfig& c, const GridSpec& grid) {
  std::vector<PathSummary> slots(c.n_paths);
  parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
    RngStream rng(c.master_seed, i);
    double min_l1 = kInf;
    double value = kNaN;
    integrate_matrix_besq(c.x0, c.alpha, grid, rng,
                          [&](std::size_t k, const SymMatrix& s, const Eigen::VectorXd& ev) {
                            min_l1 = std::min(min_l1, ev[0]);
                            if (k == grid.n_steps) value = std::exp(-trace_product(c.u, s));
                          });
    slots[i] = PathSummary{i, min_l1, min_l1 < -c.tol.psd_slack, value};
  });
  return slots;
}

std::vector<double> laplace_values(const std::vector<PathSummary>& paths) {
  std::vector<double> out;
  out.reserve(paths.size());
  for (const auto& s : paths) out.push_back(s.laplace_value);
  return out;
}

}  // namespace

ExperimentReport verify_laplace(const ExperimentConfig& c) {
  require_solvable(c);
  const GridSpec grid = GridSpec::make(c.t_end, c.dt);
  Stopwatch clock;
  auto report = start_report(c);
  report.paths = run_matrix_ensemble(c, grid);
  const auto est = mean_with_stderr(laplace_values(report.paths));
  const double target = laplace_closed_form(c.x0, c.alpha / 2.0, LaplaceQuery::at_time(c.u, c.t_end));
  const double band = c.tol.confidence_k * est.stderr_ + c.tol.bias_allowance;
  report.estimates.push_back(judge("laplace", est.mean, est.stderr_, target, band, Rule::WithinBand, est.count));
  finish(report, clock);
  return report;
}

ExperimentReport verify_laplace_exact(const ExperimentConfig& c) {
  const double rounded = std::round(c.alpha);
  if (!(std::abs(c.alpha - rounded) <= kHalfIntegerTolerance) || rounded < 1.0) {
    throw PreconditionError("exact sampler needs 2*beta = alpha to be a positive integer, got alpha = " +
                            std::to_string(c.alpha));
  }
  const auto n = static_cast<std::size_t>(rounded);
  Stopwatch clock;
  auto report = start_report(c);
  // Sigma = t I reproduces the law of X_t started at x0 = q(m).
  SymMatrix sigma = SymMatrix::identity(c.p);
  for (std::size_t i = 0; i < c.p; ++i) sigma.set(i, i, c.t_end);
  const ExactSampler sampler(n, means_for_gram(c.x0, n), sigma);

  report.paths.resize(c.n_paths);
  parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
    RngStream rng(c.master_seed, i);
    const SymMatrix x = sampler.sample(rng);
    const double min_l1 = eigenvalues(x)[0];
    report.paths[i] = PathSummary{i, min_l1, min_l1 < -c.tol.psd_slack, std::exp(-trace_product(c.u, x))};
  });
  const auto est = mean_with_stderr(laplace_values(report.paths));
  const double target = laplace_closed_form(c.x0, c.alpha / 2.0, LaplaceQuery::at_time(c.u, c.t_end));
  const double band = c.tol.confidence_k * est.stderr_;
  report.estimates.push_back(judge("laplace", est.mean, est.stderr_, target, band, Rule::WithinBand, est.count));
  finish(report, clock);
  return report;
}

ExperimentReport estimate_negativity(const ExperimentConfig& c) {
  const double upper = static_cast<double>(c.p) - 1.0;
  if (!c.diagnostic && !(c.alpha > 0.0 && c.alpha < upper)) {
    throw PreconditionError("negativity requires 0 < alpha < p-1 (p = " + std::to_string(c.p) +
                            ", alpha = " + std::to_string(c.alpha) + ")");
  }
  const GridSpec grid = GridSpec::make(c.t_end, c.dt);
  Stopwatch clock;
  auto report = start_report(c);
  // Diagnostic runs measure the discretization floor, so they use the same
  // slack as the retention check.
  const double threshold = c.diagnostic ? -c.tol.psd_slack : 0.0;
  std::vector<std::uint64_t> clamps(c.n_paths, 0);
  std::vector<std::uint64_t> reorders(c.n_paths, 0);
  report.paths.resize(c.n_paths);

  if (c.mode == "scalar-exact") {
    // Comparison process alone, from 0, dimension alpha - (p-1).
    const double delta = c.alpha - upper;
    parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
      RngStream rng(c.master_seed, i);
      const auto path = simulate_scalar_besq_exact(0.0, delta, grid, rng);
      const double min_v = *std::min_element(path.begin(), path.end());
      report.paths[i] = PathSummary{i, min_v, path.back() < threshold, kNaN};
    });
  } else {
    const auto lambda0 = initial_particles(c);
    parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
      RngStream rng(c.master_seed, i);
      double min_l1 = kInf;
      double last = 0.0;
      integrate_particles(lambda0, c.alpha, grid, rng, c.eps_reg,
                          [&](std::size_t, std::span<const double> s, const ParticleStepInfo& info) {
                            min_l1 = std::min(min_l1, s[0]);
                            last = s[0];
                            clamps[i] += info.clamp_activations;
                            reorders[i] += info.reordered ? 1 : 0;
                          });
      report.paths[i] = PathSummary{i, min_l1, last < threshold, kNaN};
    });
  }
  std::size_t negative = 0;
  for (std::size_t i = 0; i < c.n_paths; ++i) {
    negative += report.paths[i].exit_flag ? 1 : 0;
    report.clamp_activations += clamps[i];
    report.reorder_events += reorders[i];
  }
  const auto est = binomial_fraction(negative, c.n_paths);
  const double band = c.tol.confidence_k * est.stderr_;
  if (c.diagnostic) {
    report.estimates.push_back(judge("negative_fraction", est.mean, est.stderr_, c.tol.exit_budget, band,
                                     Rule::AtMost, est.count));
  } else {
    report.estimates.push_back(
        judge("negative_fraction", est.mean, est.stderr_, 0.0, band, Rule::Above, est.count));
  }
  finish(report, clock);
  return report;
}

ExperimentReport verify_psd_retention(const ExperimentConfig& c) {
  require_solvable(c);
  const GridSpec grid = GridSpec::make(c.t_end, c.dt);
  Stopwatch clock;
  auto report = start_report(c);
  report.paths = run_matrix_ensemble(c, grid);
  std::size_t exits = 0;
  for (const auto& s : report.paths) exits += s.exit_flag ? 1 : 0;
  const auto est = binomial_fraction(exits, c.n_paths);
  report.estimates.push_back(
      judge("exit_fraction", est.mean, est.stderr_, c.tol.exit_budget, 0.0, Rule::AtMost, est.count));
  finish(report, clock);
  return report;
}

ExperimentReport verify_comparison(const ExperimentConfig& c) {
  const auto lambda0 = initial_particles(c);
  if (lambda0.front() < 0.0) {
    throw PreconditionError("comparison requires lambda_1(0) >= 0, got " + std::to_string(lambda0.front()));
  }
  const GridSpec grid = GridSpec::make(c.t_end, c.dt);
  Stopwatch clock;
  auto report = start_report(c);
  const double slack = c.tol.comparison_slack * std::sqrt(grid.dt);
  std::vector<std::uint64_t> violations(c.n_paths, 0);
  std::vector<std::uint64_t> clamps(c.n_paths, 0);
  std::vector<std::uint64_t> reorders(c.n_paths, 0);
  report.paths.resize(c.n_paths);
  parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
    RngStream rng(c.master_seed, i);
    double min_l1 = kInf;
    integrate_coupled_comparison(
        lambda0, c.alpha, grid, rng, c.eps_reg,
        [&](std::size_t, std::span<const double> s, double tilde, const ParticleStepInfo& info) {
          min_l1 = std::min(min_l1, s[0]);
          if (s[0] > tilde + slack) ++violations[i];
          clamps[i] += info.clamp_activations;
          reorders[i] += info.reordered ? 1 : 0;
        });
    report.paths[i] = PathSummary{i, min_l1, violations[i] > 0, kNaN};
  });
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < c.n_paths; ++i) {
    total += violations[i];
    report.clamp_activations += clamps[i];
    report.reorder_events += reorders[i];
  }
  report.estimates.push_back(judge("violations", static_cast<double>(total), 0.0, 0.0, 0.0, Rule::AtMost,
                                   c.n_paths * (grid.n_steps + 1)));
  finish(report, clock);
  return report;
}

ExperimentReport verify_noncollision(const ExperimentConfig& c) {
  Stopwatch clock;
  if (c.p == 1) {
    auto report = start_report(c);
    report.estimates.push_back(judge("min_gap", 0.0, 0.0, 0.0, 0.0, Rule::Vacuous, 0));
    report.estimates.push_back(judge("window_clamps", 0.0, 0.0, 0.0, 0.0, Rule::Vacuous, 0));
    finish(report, clock);
    return report;
  }
  const double upper = static_cast<double>(c.p) - 1.0;
  const double rounded = std::round(c.alpha);
  const bool in_b = std::abs(c.alpha - rounded) <= kHalfIntegerTolerance && rounded >= 0.0 &&
                    rounded <= upper - 1.0;
  if (!in_b && c.alpha < upper) {
    throw PreconditionError("noncollision requires alpha in {0,...,p-2} or alpha >= p-1 (alpha = " +
                            std::to_string(c.alpha) + ")");
  }
  const auto lambda0 = initial_particles(c);
  if (rank_tol(lambda0).rank != static_cast<int>(c.p)) {
    throw PreconditionError("noncollision requires a full-rank starting point");
  }
  const GridSpec grid = GridSpec::make(c.t_end, c.dt);
  auto report = start_report(c);
  const auto window_start = static_cast<std::size_t>(std::ceil(static_cast<double>(grid.n_steps) / 10.0));
  std::vector<double> min_gap(c.n_paths, kInf);
  std::vector<std::uint64_t> window_clamps(c.n_paths, 0);
  std::vector<std::uint64_t> clamps(c.n_paths, 0);
  std::vector<std::uint64_t> reorders(c.n_paths, 0);
  report.paths.resize(c.n_paths);
  parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
    RngStream rng(c.master_seed, i);
    double min_l1 = kInf;
    integrate_particles(lambda0, c.alpha, grid, rng, c.eps_reg,
                        [&](std::size_t k, std::span<const double> s, const ParticleStepInfo& info) {
                          min_l1 = std::min(min_l1, s[0]);
                          clamps[i] += info.clamp_activations;
                          reorders[i] += info.reordered ? 1 : 0;
                          // The step into state k was evaluated at state k-1.
                          if (k > window_start) window_clamps[i] += info.clamp_activations;
                          if (k < window_start) return;
                          for (std::size_t j = 0; j + 1 < s.size(); ++j) {
                            min_gap[i] = std::min(min_gap[i], s[j + 1] - s[j]);
                          }
                        });
    report.paths[i] = PathSummary{i, min_l1, !(min_gap[i] > 0.0), kNaN};
  });
  double gap = kInf;
  std::uint64_t in_window = 0;
  for (std::size_t i = 0; i < c.n_paths; ++i) {
    gap = std::min(gap, min_gap[i]);
    in_window += window_clamps[i];
    report.clamp_activations += clamps[i];
    report.reorder_events += reorders[i];
  }
  const std::size_t samples = c.n_paths * (grid.n_steps - window_start + 1);
  report.estimates.push_back(judge("min_gap", gap, 0.0, 0.0, 0.0, Rule::Above, samples));
  report.estimates.push_back(
      judge("window_clamps", static_cast<double>(in_window), 0.0, 0.0, 0.0, Rule::AtMost, samples));
  finish(report, clock);
  return report;
}

ExperimentReport verify_polynomial_dynamics(const ExperimentConfig& c) {
  const GridSpec grid = GridSpec::make(c.t_end, c.dt);
  Stopwatch clock;
  auto report = start_report(c);
  std::vector<PolyPath> ensemble(c.n_paths);
  report.paths.resize(c.n_paths);
  parallel_for(c.n_paths, c.threads, [&](std::size_t i) {
    RngStream rng(c.master_seed, i);
    PolyPath& poly = ensemble[i];
    poly.grid = grid;
    poly.alpha = c.alpha;
    poly.values.reserve(grid.n_steps + 1);
    poly.min_eigenvalue.reserve(grid.n_steps + 1);
    const auto record = poly_recorder(poly);
    double value = kNaN;
    integrate_matrix_besq(c.x0, c.alpha, grid, rng,
                          [&](std::size_t k, const SymMatrix& s, const Eigen::VectorXd& ev) {
                            record(k, s, ev);
                            if (k == grid.n_steps) value = std::exp(-trace_product(c.u, s));
                          });
    const double min_l1 = *std::min_element(poly.min_eigenvalue.begin(), poly.min_eigenvalue.end());
    report.paths[i] = PathSummary{i, min_l1, min_l1 < -c.tol.psd_slack, value};
  });

  auto add_check = [&](const RegressionCheck& check) {
    const double band = std::max(c.tol.confidence_k * check.fit.stderr_, c.tol.relative_band * std::abs(check.target));
    if (check.fit.degenerate) {
      report.estimates.push_back(Estimate{check.name, 0.0, 0.0, check.target, band, Rule::WithinBand,
                                          Verdict::Inconclusive, check.fit.count});
      return;
    }
    report.estimates.push_back(
        judge(check.name, check.fit.slope, check.fit.stderr_, check.target, band, Rule::WithinBand, check.fit.count));
  };
  for (std::size_t n = 1; n <= c.p; ++n) add_check(drift_test(ensemble, n));
  add_check(qv_test(ensemble));
  finish(report, clock);
  return report;
}

}  // namespace besq
