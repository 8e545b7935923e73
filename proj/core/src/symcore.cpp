#include "besq/symcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "besq/error.hpp"

namespace besq {

SymMatrix::SymMatrix(std::size_t dim) : m_(Eigen::MatrixXd::Zero(dim, dim)) {
  if (dim == 0) throw InvalidInput("SymMatrix: dimension must be at least 1");
}

SymMatrix SymMatrix::identity(std::size_t dim) {
  SymMatrix s(dim);
  s.m_.setIdentity();
  return s;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix s(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) s.m_(i, i) = diag[i];
  return s;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

SymMatrix SymMatrix::from_upper(std::size_t dim, std::span<const double> upper) {
  if (upper.size() != dim * (dim + 1) / 2) {
    throw InvalidInput("SymMatrix: expected " + std::to_string(dim * (dim + 1) / 2) +
                       " upper-triangle entries, got " + std::to_string(upper.size()));
  }
  SymMatrix s(dim);
  std::size_t k = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) s.set(i, j, upper[k++]);
  }
  return s;
}

SymMatrix SymMatrix::from_upper(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw InvalidInput("SymMatrix: source matrix is not square");
  SymMatrix s(static_cast<std::size_t>(m.rows()));
  s.m_.triangularView<Eigen::Upper>() = m.triangularView<Eigen::Upper>();
  s.m_.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
  return s;
}

void SymMatrix::set(std::size_t i, std::size_t j, double value) {
  m_(i, j) = value;
  m_(j, i) = value;
}

std::vector<double> SymMatrix::upper() const {
  const auto p = dim();
  std::vector<double> out;
  out.reserve(p * (p + 1) / 2);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) out.push_back(m_(i, j));
  }
  return out;
}

Eigen::MatrixXd Spectrum::reconstruct() const {
  return vectors * values.asDiagonal() * vectors.transpose();
}

double reconstruction_tolerance(const SymMatrix& s) {
  const double scale = std::max(s.max_abs(), std::numeric_limits<double>::min());
  return 1e-10 * static_cast<double>(s.dim()) * scale;
}

double orthogonality_tolerance(std::size_t dim) { return 1e-12 * static_cast<double>(dim); }

Spectrum eig(const SymMatrix& s) {
  if (!s.all_finite()) throw InvalidInput("eig: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("eig: eigensolver did not converge");
  return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::VectorXd eigenvalues(const SymMatrix& s) {
  if (!s.all_finite()) throw InvalidInput("eigenvalues: matrix has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigenvalues: eigensolver did not converge");
  return solver.eigenvalues();
}

double spectral_sqrt_abs(double x) { return std::sqrt(spectral_abs(x)); }

SymMatrix spectral_apply(const Spectrum& spec, const std::function<double(double)>& g) {
  const auto p = spec.dim();
  Eigen::VectorXd mapped(p);
  for (std::size_t i = 0; i < p; ++i) {
    const double v = g(spec.values[i]);
    if (!std::isfinite(v)) {
      throw DomainError("spectral_apply: function undefined at eigenvalue " +
                        std::to_string(spec.values[i]));
    }
    mapped[i] = v;
  }
  const Eigen::MatrixXd full = spec.vectors * mapped.asDiagonal() * spec.vectors.transpose();
  return SymMatrix::from_upper(full);
}

SymMatrix spectral_apply(const SymMatrix& s, const std::function<double(double)>& g) {
  return spectral_apply(eig(s), g);
}

PolyVector elementary_symmetric(std::span<const double> lambdas) {
  if (lambdas.empty()) throw InvalidInput("elementary_symmetric: empty input");
  // Coefficients of prod_i (1 + lambda_i x), built one factor at a time.
  std::vector<double> coeff(lambdas.size() + 1, 0.0);
  coeff[0] = 1.0;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double l = lambdas[k];
    if (!std::isfinite(l)) throw InvalidInput("elementary_symmetric: non-finite input");
    for (std::size_t n = k + 1; n >= 1; --n) coeff[n] += l * coeff[n - 1];
  }
  return PolyVector{std::vector<double>(coeff.begin() + 1, coeff.end())};
}

double incomplete_symmetric(std::span<const double> lambdas, std::size_t skip, std::size_t order) {
  const auto p = lambdas.size();
  if (skip >= p) throw InvalidInput("incomplete_symmetric: index out of range");
  if (order >= p) {
    throw InvalidInput("incomplete_symmetric: order " + std::to_string(order) +
                       " must be below the dimension " + std::to_string(p));
  }
  if (order == 0) return 1.0;
  std::vector<double> coeff(p, 0.0);
  coeff[0] = 1.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < p; ++k) {
    if (k == skip) continue;
    ++used;
    for (std::size_t n = used; n >= 1; --n) coeff[n] += lambdas[k] * coeff[n - 1];
  }
  return coeff[order];
}

RankResult rank_tol(std::span<const double> eigenvalues, double epsilon) {
  RankResult r;
  if (eigenvalues.empty()) return r;
  const double top = *std::max_element(eigenvalues.begin(), eigenvalues.end());
  const double threshold = epsilon * std::max(top, 1.0);
  r.min_eigenvalue = *std::min_element(eigenvalues.begin(), eigenvalues.end());
  for (double l : eigenvalues) {
    if (l > threshold) ++r.rank;
  }
  r.not_psd = r.min_eigenvalue < -threshold;
  return r;
}

RankResult rank_tol(const SymMatrix& s, double epsilon) {
  const Eigen::VectorXd ev = eigenvalues(s);
  return rank_tol(std::span<const double>(ev.data(), static_cast<std::size_t>(ev.size())), epsilon);
}

}  // namespace besq
