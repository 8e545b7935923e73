#pragma once

// Euler-Maruyama integrators for
//   dX = sqrt|X| dW + dW^T sqrt|X| + alpha I dt          (matrix BESQ)
//   dl_i = 2 sqrt|l_i| dB_i + (alpha + sum_{k!=i} (|l_i|+|l_k|)/(l_i-l_k)) dt
//                                                        (eigenvalue particles)
//   dx = 2 sqrt|x| dB + delta dt                         (scalar BESQ)
// and the coupled pair (lambda, comparison process) sharing the driver of the
// lowest particle.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "besq/rng.hpp"
#include "besq/symcore.hpp"

namespace besq {

inline constexpr double kDefaultDt = 1.0 / 1024.0;
inline constexpr double kDefaultEpsReg = 1e-8;

// Uniform time grid on [0, t_end].
struct GridSpec {
  double t_end = 1.0;
  double dt = kDefaultDt;
  std::size_t n_steps = 1024;

  // Throws InvalidGrid unless dt > 0, t_end > 0 and t_end/dt is an integer
  // to 1e-12 relative.
  static GridSpec make(double t_end, double dt);
  double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
};

struct MatrixPath {
  GridSpec grid;
  std::vector<SymMatrix> states;
  double alpha = 0.0;
  SymMatrix origin{1};
};

struct VectorPath {
  GridSpec grid;
  std::vector<std::vector<double>> states;
  double alpha = 0.0;
  // Per step k (transition k -> k+1): pairs whose gap fell below eps_reg.
  std::vector<std::uint32_t> clamp_activations;
  // Steps after which the Euler update had to be re-sorted.
  std::size_t reorder_events = 0;
};

// p x p matrix of independent N(0, dt) entries, not symmetrized.
Eigen::MatrixXd brownian_matrix_increment(std::size_t p, double dt, NormalSource& noise);

// Reusable workspace for the matrix scheme; holds the eigensolver and
// temporaries so the hot loop does not allocate.
class MatrixBesqStepper {
 public:
  explicit MatrixBesqStepper(std::size_t dim);

  // Eigendecomposition of the current state; must precede advance().
  void decompose(const SymMatrix& x);
  const Eigen::VectorXd& eigenvalues() const { return solver_.eigenvalues(); }
  // X <- X + R dW + dW^T R + alpha dt I with R = sqrt|X| from decompose().
  void advance(SymMatrix& x, double alpha, double dt, NormalSource& noise);

 private:
  std::size_t dim_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver_;
  Eigen::VectorXd root_;
  Eigen::MatrixXd scaled_;
  Eigen::MatrixXd r_;
  Eigen::MatrixXd dw_;
  Eigen::MatrixXd g_;
};

SymMatrix step_matrix_besq(const SymMatrix& x, double alpha, double dt, NormalSource& noise);

// Called for k = 0..n_steps with the state at grid time k and its ascending
// eigenvalues.
using MatrixObserver =
    std::function<void(std::size_t k, const SymMatrix& state, const Eigen::VectorXd& eigenvalues)>;

void integrate_matrix_besq(const SymMatrix& x0, double alpha, const GridSpec& grid,
                           NormalSource& noise, const MatrixObserver& observer);

MatrixPath simulate_matrix_besq(const SymMatrix& x0, double alpha, const GridSpec& grid,
                                NormalSource& noise);

struct ParticleStepInfo {
  std::uint32_t clamp_activations = 0;
  bool reordered = false;
};

// One Euler step of the particle system in place, from pre-drawn standard
// normals (one per particle). Each denominator l_i - l_k is replaced by
// sign(l_i - l_k) * max(|l_i - l_k|, eps_reg); an exact tie contributes no
// interaction. eps_reg == 0 with an exact tie throws SingularDrift.
ParticleStepInfo step_particles_inplace(std::span<double> lambdas, double alpha, double dt,
                                        std::span<const double> normals, double eps_reg,
                                        std::span<double> drift_scratch);

std::vector<double> step_particles(std::span<const double> lambdas, double alpha, double dt,
                                   NormalSource& noise, double eps_reg = kDefaultEpsReg,
                                   ParticleStepInfo* info = nullptr);

// Called for k = 0..n_steps. `step` describes the transition into state k
// (all zero for k == 0).
using ParticleObserver =
    std::function<void(std::size_t k, std::span<const double> state, const ParticleStepInfo& step)>;

void integrate_particles(std::span<const double> lambda0, double alpha, const GridSpec& grid,
                         NormalSource& noise, double eps_reg, const ParticleObserver& observer);

VectorPath simulate_particles(std::span<const double> lambda0, double alpha, const GridSpec& grid,
                              NormalSource& noise, double eps_reg = kDefaultEpsReg);

// x + 2 sqrt|x| sqrt(dt) z + delta dt
double step_scalar_besq(double x, double delta, double dt, double z) noexcept;

// Euler path, n_steps + 1 values.
std::vector<double> simulate_scalar_besq(double x0, double delta, const GridSpec& grid,
                                         NormalSource& noise);

// Exact transition law. delta >= 0 with x0 >= 0 uses the scaled non-central
// chi-square transition; delta < 0 requires x0 == 0 and returns the negation
// of a BESQ^{|delta|}(0) path. Other inputs throw InvalidInput.
std::vector<double> simulate_scalar_besq_exact(double x0, double delta, const GridSpec& grid,
                                               RngStream& rng);

// Particle system and comparison process d l~ = 2 sqrt|l~| dB_1 + (alpha-(p-1)) dt,
// both driven by the normal assigned to the lowest particle each step.
struct ComparisonPath {
  VectorPath particles;
  std::vector<double> comparison;
};

using ComparisonObserver = std::function<void(std::size_t k, std::span<const double> lambdas,
                                              double comparison, const ParticleStepInfo& step)>;

void integrate_coupled_comparison(std::span<const double> lambda0, double alpha,
                                  const GridSpec& grid, NormalSource& noise, double eps_reg,
                                  const ComparisonObserver& observer);

ComparisonPath simulate_coupled_comparison(std::span<const double> lambda0, double alpha,
                                           const GridSpec& grid, NormalSource& noise,
                                           double eps_reg = kDefaultEpsReg);
ComparisonPath simulate_coupled_comparison(const SymMatrix& x0, double alpha, const GridSpec& grid,
                                           NormalSource& noise, double eps_reg = kDefaultEpsReg);

// CSV path dumps: header row, then one row per grid time. Matrix paths list
// the row-major upper triangle, vector paths the sorted particles.
void write_path_csv(std::ostream& out, const MatrixPath& path);
void write_path_csv(std::ostream& out, const VectorPath& path);
void write_path_csv(std::ostream& out, const GridSpec& grid, std::span<const double> scalar_path);

}  // namespace besq
