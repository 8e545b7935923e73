#pragma once

// Wallach-set membership, the non-central Wishart Laplace transform
//   E exp(-Tr(uX)) = det(I + 2 Sigma u)^{-beta} exp(-Tr(x0 u (I + 2 Sigma u)^{-1})),
// (the exponent ordering matters only when Sigma and u do not commute),
// the Sigma-reduction and the Gaussian outer-product sampler.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "besq/rng.hpp"
#include "besq/symcore.hpp"

namespace besq {

// |2 beta - round(2 beta)| <= this counts as an integer.
inline constexpr double kHalfIntegerTolerance = 1e-12;

struct WallachPoint {
  SymMatrix x0;
  double beta = 0.0;

  std::size_t dim() const { return x0.dim(); }
};

enum class WallachBranch { Threshold, Discrete, None };

std::string_view to_string(WallachBranch branch);

struct Membership {
  bool member = false;
  WallachBranch branch = WallachBranch::None;
  int rank = 0;
};

// beta in {0, 1/2, ..., (p-2)/2} or beta >= (p-1)/2.
bool central_member(double beta, std::size_t p);

// (beta >= (p-1)/2) or (2 beta in {0..p-2} and rank(x0) <= 2 beta).
// Throws InvalidPoint when x0 is not PSD to within epsilon.
Membership noncentral_member(const WallachPoint& point, double epsilon = kDefaultRankEpsilon);

// Whether dX = sqrt|X| dW + dW^T sqrt|X| + alpha I dt started at x0 stays in
// the closed PSD cone: same predicate at beta = alpha / 2.
Membership cone_sde_solvable(const SymMatrix& x0, double alpha, double epsilon = kDefaultRankEpsilon);

// Sigma^{-1/2} x0 Sigma^{-1/2}; Sigma must be positive definite.
SymMatrix reduce_sigma(const SymMatrix& x0, const SymMatrix& sigma);

// Argument u of the transform together with either Sigma = t I or a general
// positive definite Sigma.
class LaplaceQuery {
 public:
  static LaplaceQuery at_time(SymMatrix u, double t);
  static LaplaceQuery with_sigma(SymMatrix u, SymMatrix sigma);

  const SymMatrix& u() const { return u_; }
  // Sigma as a matrix (t I in the time form).
  SymMatrix sigma() const;
  std::optional<double> time() const { return t_; }

 private:
  LaplaceQuery(SymMatrix u, std::optional<SymMatrix> sigma, std::optional<double> t);

  SymMatrix u_;
  std::optional<SymMatrix> sigma_;
  std::optional<double> t_;
};

double laplace_closed_form(const SymMatrix& x0, double beta, const LaplaceQuery& query);

// Sum of n outer products xi_i xi_i^T with xi_i ~ N(m_i, Sigma) independent.
// Its law has the transform above with beta = n/2, x0 = sum m_i m_i^T.
class ExactSampler {
 public:
  // `means` may be empty (all zero) or hold exactly n vectors of length p.
  ExactSampler(std::size_t n, std::vector<Eigen::VectorXd> means, const SymMatrix& sigma);

  SymMatrix sample(NormalSource& noise) const;
  std::size_t count() const { return n_; }
  // q(m) = sum m_i m_i^T.
  SymMatrix mean_gram() const;

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<Eigen::VectorXd> means_;
  Eigen::MatrixXd sigma_root_;
};

SymMatrix sample_exact(std::size_t n, const std::vector<Eigen::VectorXd>& means,
                       const SymMatrix& sigma, NormalSource& noise);

// Vectors m_1..m_n with sum m_i m_i^T = x0, from the eigendecomposition of x0
// (sqrt(d_i) v_i for the nonzero eigenvalues, zero padded). Requires
// rank(x0) <= n.
std::vector<Eigen::VectorXd> means_for_gram(const SymMatrix& x0, std::size_t n,
                                            double epsilon = kDefaultRankEpsilon);

// JSON membership query:
//   {"p": 3, "beta": 0.5, "x0": [upper triangle, row-major], "epsilon": 1e-9}
// -> {"member": bool, "branch": "threshold"|"discrete"|"none", "rank": int}
// Throws InvalidInput on malformed queries.
std::string evaluate_membership_json(std::string_view query);

}  // namespace besq
