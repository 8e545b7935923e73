#pragma once

// Dense symmetric matrix algebra for small dimensions: eigendecomposition,
// spectral functions, elementary symmetric polynomials, numeric rank.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace besq {

// Real symmetric p x p matrix. Both triangles are stored; every mutation
// writes the mirrored entry, so the storage is always exactly symmetric.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t dim);

  static SymMatrix zero(std::size_t dim) { return SymMatrix(dim); }
  static SymMatrix identity(std::size_t dim);
  static SymMatrix diagonal(std::span<const double> diag);
  static SymMatrix diagonal(std::initializer_list<double> diag);
  // Row-major upper triangle, p(p+1)/2 entries.
  static SymMatrix from_upper(std::size_t dim, std::span<const double> upper);
  // Reads the upper triangle of `m`; the lower triangle is ignored.
  static SymMatrix from_upper(const Eigen::MatrixXd& m);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  void set(std::size_t i, std::size_t j, double value);

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  std::vector<double> upper() const;
  double trace() const { return m_.trace(); }
  double max_abs() const { return m_.cwiseAbs().maxCoeff(); }
  bool all_finite() const { return m_.allFinite(); }

  bool operator==(const SymMatrix& other) const {
    return m_.rows() == other.m_.rows() && m_ == other.m_;
  }

 private:
  friend class SymMatrixWriter;
  Eigen::MatrixXd m_;
};

// Grants in-place access to the storage for kernels that rebuild the whole
// matrix (integrator steps). The caller must leave both triangles equal.
class SymMatrixWriter {
 public:
  explicit SymMatrixWriter(SymMatrix& s) : s_(s) {}
  Eigen::MatrixXd& storage() { return s_.m_; }

 private:
  SymMatrix& s_;
};

// Ascending eigenvalues and matching orthonormal eigenvectors (column i pairs
// with values[i]).
struct Spectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.size()); }
  Eigen::MatrixXd reconstruct() const;
};

// Tolerances the decomposition is held to.
double reconstruction_tolerance(const SymMatrix& s);
double orthogonality_tolerance(std::size_t dim);

Spectrum eig(const SymMatrix& s);

// Only the eigenvalues; same ordering as eig().
Eigen::VectorXd eigenvalues(const SymMatrix& s);

// U diag(g(lambda_i)) U^T. g must return a finite value for every eigenvalue;
// a NaN or infinite result raises DomainError.
SymMatrix spectral_apply(const SymMatrix& s, const std::function<double(double)>& g);
SymMatrix spectral_apply(const Spectrum& spec, const std::function<double(double)>& g);

// Common spectral functions.
inline double spectral_abs(double x) { return x < 0.0 ? -x : x; }
double spectral_sqrt_abs(double x);

// (e_1, ..., e_p) of the given values; e_0 == 1 is implicit.
struct PolyVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  // Order n in 0..p, with e(0) == 1.
  double e(std::size_t n) const { return n == 0 ? 1.0 : values.at(n - 1); }
};

PolyVector elementary_symmetric(std::span<const double> lambdas);

// e_n of `lambdas` with coordinate `skip` (0-based) removed.
double incomplete_symmetric(std::span<const double> lambdas, std::size_t skip, std::size_t order);

struct RankResult {
  int rank = 0;
  // Set when an eigenvalue is below -epsilon * max(lambda_max, 1).
  bool not_psd = false;
  double min_eigenvalue = 0.0;
};

inline constexpr double kDefaultRankEpsilon = 1e-9;

RankResult rank_tol(const SymMatrix& s, double epsilon = kDefaultRankEpsilon);
RankResult rank_tol(std::span<const double> eigenvalues, double epsilon = kDefaultRankEpsilon);

}  // namespace besq
