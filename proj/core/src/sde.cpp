#include "besq/sde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <string>

#include "besq/error.hpp"

namespace besq {

GridSpec GridSpec::make(double t_end, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidGrid("grid: dt must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidGrid("grid: t_end must be positive");
  const double ratio = t_end / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(static_cast<double>(n) * dt - t_end) > 1e-12 * t_end) {
    throw InvalidGrid("grid: t_end = " + std::to_string(t_end) +
                      " is not an integer multiple of dt = " + std::to_string(dt));
  }
  return GridSpec{t_end, dt, n};
}

Eigen::MatrixXd brownian_matrix_increment(std::size_t p, double dt, NormalSource& noise) {
  if (!(dt > 0.0)) throw InvalidGrid("brownian_matrix_increment: dt must be positive");
  Eigen::MatrixXd dw(p, p);
  noise.fill(std::span<double>(dw.data(), p * p));
  dw *= std::sqrt(dt);
  return dw;
}

MatrixBesqStepper::MatrixBesqStepper(std::size_t dim)
    : dim_(dim),
      solver_(static_cast<Eigen::Index>(dim)),
      root_(dim),
      scaled_(dim, dim),
      r_(dim, dim),
      dw_(dim, dim),
      g_(dim, dim) {}

void MatrixBesqStepper::decompose(const SymMatrix& x) {
  if (x.dim() != dim_) throw InvalidInput("MatrixBesqStepper: dimension mismatch");
  if (!x.all_finite()) throw InvalidInput("matrix BESQ step: state has non-finite entries");
  solver_.compute(x.matrix(), Eigen::ComputeEigenvectors);
  if (solver_.info() != Eigen::Success) throw NumericalError("matrix BESQ step: eigensolver failed");
}

void MatrixBesqStepper::advance(SymMatrix& x, double alpha, double dt, NormalSource& noise) {
  if (!(dt > 0.0)) throw InvalidGrid("matrix BESQ step: dt must be positive");
  const auto& values = solver_.eigenvalues();
  const auto& vectors = solver_.eigenvectors();
  for (std::size_t i = 0; i < dim_; ++i) root_[i] = spectral_sqrt_abs(values[i]);
  scaled_.noalias() = vectors * root_.asDiagonal();
  r_.noalias() = scaled_ * vectors.transpose();

  noise.fill(std::span<double>(dw_.data(), dim_ * dim_));
  dw_ *= std::sqrt(dt);
  g_.noalias() = r_ * dw_;

  // G + G^T is formed pairwise so the result is exactly symmetric.
  Eigen::MatrixXd& m = SymMatrixWriter(x).storage();
  const double drift = alpha * dt;
  for (std::size_t j = 0; j < dim_; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      double v = m(i, j) + (g_(i, j) + g_(j, i));
      if (i == j) v += drift;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
}

SymMatrix step_matrix_besq(const SymMatrix& x, double alpha, double dt, NormalSource& noise) {
  MatrixBesqStepper stepper(x.dim());
  SymMatrix out = x;
  stepper.decompose(out);
  stepper.advance(out, alpha, dt, noise);
  return out;
}

void integrate_matrix_besq(const SymMatrix& x0, double alpha, const GridSpec& grid,
                           NormalSource& noise, const MatrixObserver& observer) {
  MatrixBesqStepper stepper(x0.dim());
  SymMatrix x = x0;
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    stepper.decompose(x);
    observer(k, x, stepper.eigenvalues());
    stepper.advance(x, alpha, grid.dt, noise);
  }
  stepper.decompose(x);
  observer(grid.n_steps, x, stepper.eigenvalues());
}

MatrixPath simulate_matrix_besq(const SymMatrix& x0, double alpha, const GridSpec& grid,
                                NormalSource& noise) {
  MatrixPath path{grid, {}, alpha, x0};
  path.states.reserve(grid.n_steps + 1);
  integrate_matrix_besq(x0, alpha, grid, noise,
                        [&](std::size_t, const SymMatrix& s, const Eigen::VectorXd&) {
                          path.states.push_back(s);
                        });
  return path;
}

ParticleStepInfo step_particles_inplace(std::span<double> lambdas, double alpha, double dt,
                                        std::span<const double> normals, double eps_reg,
                                        std::span<double> drift) {
  const std::size_t p = lambdas.size();
  if (!(dt > 0.0)) throw InvalidGrid("particle step: dt must be positive");
  if (normals.size() < p || drift.size() < p) throw InvalidInput("particle step: buffer too small");
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) {
    throw InvalidInput("particle step: input must be sorted ascending");
  }
  ParticleStepInfo info;
  for (std::size_t i = 0; i < p; ++i) drift[i] = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = i + 1; k < p; ++k) {
      const double gap = lambdas[k] - lambdas[i];
      const double strength = spectral_abs(lambdas[i]) + spectral_abs(lambdas[k]);
      if (gap == 0.0) {
        if (eps_reg <= 0.0) {
          throw SingularDrift("particle step: particles " + std::to_string(i) + " and " +
                             std::to_string(k) + " collide exactly");
        }
        ++info.clamp_activations;
        continue;
      }
      double denom = gap;
      if (gap < eps_reg) {
        denom = eps_reg;
        ++info.clamp_activations;
      }
      const double push = strength / denom;
      drift[i] -= push;
      drift[k] += push;
    }
  }
  const double sqrt_dt = std::sqrt(dt);
  for (std::size_t i = 0; i < p; ++i) {
    const double dw = sqrt_dt * normals[i];
    lambdas[i] = (lambdas[i] + 2.0 * (spectral_sqrt_abs(lambdas[i]) * dw)) + (alpha + drift[i]) * dt;
  }
  if (!std::is_sorted(lambdas.begin(), lambdas.end())) {
    std::sort(lambdas.begin(), lambdas.end());
    info.reordered = true;
  }
  return info;
}

std::vector<double> step_particles(std::span<const double> lambdas, double alpha, double dt,
                                   NormalSource& noise, double eps_reg, ParticleStepInfo* info) {
  std::vector<double> out(lambdas.begin(), lambdas.end());
  std::vector<double> normals(out.size());
  std::vector<double> drift(out.size());
  noise.fill(normals);
  const auto result = step_particles_inplace(out, alpha, dt, normals, eps_reg, drift);
  if (info != nullptr) *info = result;
  return out;
}

void integrate_particles(std::span<const double> lambda0, double alpha, const GridSpec& grid,
                         NormalSource& noise, double eps_reg, const ParticleObserver& observer) {
  if (lambda0.empty()) throw InvalidInput("particles: empty initial condition");
  std::vector<double> state(lambda0.begin(), lambda0.end());
  std::vector<double> normals(state.size());
  std::vector<double> drift(state.size());
  observer(0, state, ParticleStepInfo{});
  for (std::size_t k = 1; k <= grid.n_steps; ++k) {
    noise.fill(normals);
    const auto info = step_particles_inplace(state, alpha, grid.dt, normals, eps_reg, drift);
    observer(k, state, info);
  }
}

VectorPath simulate_particles(std::span<const double> lambda0, double alpha, const GridSpec& grid,
                              NormalSource& noise, double eps_reg) {
  VectorPath path{grid, {}, alpha, {}, 0};
  path.states.reserve(grid.n_steps + 1);
  path.clamp_activations.reserve(grid.n_steps);
  integrate_particles(lambda0, alpha, grid, noise, eps_reg,
                      [&](std::size_t k, std::span<const double> s, const ParticleStepInfo& info) {
                        path.states.emplace_back(s.begin(), s.end());
                        if (k == 0) return;
                        path.clamp_activations.push_back(info.clamp_activations);
                        if (info.reordered) ++path.reorder_events;
                      });
  return path;
}

double step_scalar_besq(double x, double delta, double dt, double z) noexcept {
  const double dw = std::sqrt(dt) * z;
  return (x + 2.0 * (spectral_sqrt_abs(x) * dw)) + delta * dt;
}

std::vector<double> simulate_scalar_besq(double x0, double delta, const GridSpec& grid,
                                         NormalSource& noise) {
  if (!(grid.dt > 0.0)) throw InvalidGrid("scalar BESQ: dt must be positive");
  std::vector<double> path(grid.n_steps + 1);
  path[0] = x0;
  double z = 0.0;
  for (std::size_t k = 1; k <= grid.n_steps; ++k) {
    noise.fill(std::span<double>(&z, 1));
    path[k] = step_scalar_besq(path[k - 1], delta, grid.dt, z);
  }
  return path;
}

std::vector<double> simulate_scalar_besq_exact(double x0, double delta, const GridSpec& grid,
                                               RngStream& rng) {
  if (!(grid.dt > 0.0)) throw InvalidGrid("scalar BESQ: dt must be positive");
  if (delta < 0.0) {
    if (x0 != 0.0) {
      throw InvalidInput("exact scalar BESQ: negative dimension is only supported from x0 = 0");
    }
    auto path = simulate_scalar_besq_exact(0.0, -delta, grid, rng);
    for (double& v : path) v = -v;
    return path;
  }
  if (x0 < 0.0) throw InvalidInput("exact scalar BESQ: x0 must be nonnegative for delta >= 0");

  // X_{t+h} | X_t = x  ~  h * chi'^2_delta(x / h), sampled as a Poisson
  // mixture of central chi-squares.
  std::vector<double> path(grid.n_steps + 1);
  path[0] = x0;
  const double h = grid.dt;
  for (std::size_t k = 1; k <= grid.n_steps; ++k) {
    const double x = path[k - 1];
    long mixing = 0;
    if (x > 0.0) mixing = std::poisson_distribution<long>(x / (2.0 * h))(rng);
    const double shape = 0.5 * delta + static_cast<double>(mixing);
    double value = 0.0;
    if (shape > 0.0) value = 2.0 * h * std::gamma_distribution<double>(shape, 1.0)(rng);
    path[k] = value;
  }
  return path;
}

void integrate_coupled_comparison(std::span<const double> lambda0, double alpha,
                                  const GridSpec& grid, NormalSource& noise, double eps_reg,
                                  const ComparisonObserver& observer) {
  if (lambda0.empty()) throw InvalidInput("comparison: empty initial condition");
  if (lambda0.front() < 0.0) throw InvalidInput("comparison: lowest particle must start at >= 0");
  const std::size_t p = lambda0.size();
  const double delta = alpha - static_cast<double>(p - 1);
  std::vector<double> state(lambda0.begin(), lambda0.end());
  std::vector<double> normals(p);
  std::vector<double> drift(p);
  double comparison = state.front();
  observer(0, state, comparison, ParticleStepInfo{});
  for (std::size_t k = 1; k <= grid.n_steps; ++k) {
    noise.fill(normals);
    comparison = step_scalar_besq(comparison, delta, grid.dt, normals[0]);
    const auto info = step_particles_inplace(state, alpha, grid.dt, normals, eps_reg, drift);
    observer(k, state, comparison, info);
  }
}

ComparisonPath simulate_coupled_comparison(std::span<const double> lambda0, double alpha,
                                           const GridSpec& grid, NormalSource& noise,
                                           double eps_reg) {
  ComparisonPath out{VectorPath{grid, {}, alpha, {}, 0}, {}};
  out.particles.states.reserve(grid.n_steps + 1);
  out.comparison.reserve(grid.n_steps + 1);
  integrate_coupled_comparison(
      lambda0, alpha, grid, noise, eps_reg,
      [&](std::size_t k, std::span<const double> s, double c, const ParticleStepInfo& info) {
        out.particles.states.emplace_back(s.begin(), s.end());
        out.comparison.push_back(c);
        if (k == 0) return;
        out.particles.clamp_activations.push_back(info.clamp_activations);
        if (info.reordered) ++out.particles.reorder_events;
      });
  return out;
}

ComparisonPath simulate_coupled_comparison(const SymMatrix& x0, double alpha, const GridSpec& grid,
                                           NormalSource& noise, double eps_reg) {
  const Eigen::VectorXd ev = eigenvalues(x0);
  return simulate_coupled_comparison(std::span<const double>(ev.data(), x0.dim()), alpha, grid,
                                     noise, eps_reg);
}

namespace {

void write_time(std::ostream& out, double t) { out << std::setprecision(17) << t; }

}  // namespace

void write_path_csv(std::ostream& out, const MatrixPath& path) {
  const std::size_t p = path.origin.dim();
  out << "t";
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) out << ",x" << i + 1 << '_' << j + 1;
  }
  out << '\n';
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    write_time(out, path.grid.time(k));
    for (double v : path.states[k].upper()) out << ',' << v;
    out << '\n';
  }
}

void write_path_csv(std::ostream& out, const VectorPath& path) {
  const std::size_t p = path.states.empty() ? 0 : path.states.front().size();
  out << "t";
  for (std::size_t i = 0; i < p; ++i) out << ",lambda" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    write_time(out, path.grid.time(k));
    for (double v : path.states[k]) out << ',' << v;
    out << '\n';
  }
}

void write_path_csv(std::ostream& out, const GridSpec& grid, std::span<const double> scalar_path) {
  out << "t,x\n";
  for (std::size_t k = 0; k < scalar_path.size(); ++k) {
    write_time(out, grid.time(k));
    out << ',' << scalar_path[k] << '\n';
  }
}

}  // namespace besq
