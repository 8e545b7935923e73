#pragma once

// Elementary symmetric polynomials e_n(X_t) along simulated matrix paths and
// regression checks of their semimartingale decomposition:
//   drift of e_n  = (p-n+1)(alpha-n+1) e_{n-1}
//   d<e_p>        = 4 e_{p-1} e_p dt   (on the PSD cone)

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "besq/sde.hpp"
#include "besq/stats.hpp"
#include "besq/symcore.hpp"

namespace besq {

struct PolyPath {
  GridSpec grid;
  std::vector<PolyVector> values;
  double alpha = 0.0;
  // Smallest eigenvalue of each state; increments are only used for the
  // statistical checks when the left endpoint is PSD.
  std::vector<double> min_eigenvalue;

  std::size_t dim() const { return values.empty() ? 0 : values.front().size(); }
};

struct TimeChange {
  GridSpec grid;
  std::vector<double> values;
};

PolyPath polynomials_along_path(const MatrixPath& path);

// Observer that appends to `out` while integrate_matrix_besq runs; avoids
// storing the matrix states.
MatrixObserver poly_recorder(PolyPath& out);

// A_t = int_0^t e_{p-1}(s) ds by the trapezoid rule (e_0 == 1 when p == 1).
TimeChange time_change(const PolyPath& poly);

// M_n = 2 (sum_i |lambda_i| (e_{n-1} without lambda_i)^2)^{1/2}, 1 <= n <= p.
double martingale_coefficient(std::span<const double> lambdas, std::size_t order);

// (p-n+1)(alpha-n+1); for n == p this is alpha-p+1.
double drift_coefficient(std::size_t p, double alpha, std::size_t order);

struct RegressionCheck {
  std::string name;
  double target = 0.0;
  OriginRegression fit;
};

// Regresses e_n(t_{k+1}) - e_n(t_k) on e_{n-1}(t_k) dt over every increment
// whose left state is PSD.
RegressionCheck drift_test(std::span<const PolyPath> ensemble, std::size_t order);

// Regresses (e_p(t_{k+1}) - e_p(t_k))^2 on 4 e_{p-1} e_p dt (target slope 1),
// PSD left states with a nonzero predictor only.
RegressionCheck qv_test(std::span<const PolyPath> ensemble);

// Columns t, e1, ..., ep.
void write_poly_csv(std::ostream& out, const PolyPath& poly);

}  // namespace besq
