#include "besq/polytrack.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "besq/error.hpp"

namespace besq {

namespace {

void append_state(PolyPath& out, const Eigen::VectorXd& eigenvalues) {
  const std::span<const double> ev(eigenvalues.data(), static_cast<std::size_t>(eigenvalues.size()));
  out.values.push_back(elementary_symmetric(ev));
  out.min_eigenvalue.push_back(eigenvalues.minCoeff());
}

}  // namespace

PolyPath polynomials_along_path(const MatrixPath& path) {
  PolyPath out{path.grid, {}, path.alpha, {}};
  out.values.reserve(path.states.size());
  out.min_eigenvalue.reserve(path.states.size());
  for (const auto& s : path.states) append_state(out, eigenvalues(s));
  return out;
}

MatrixObserver poly_recorder(PolyPath& out) {
  return [&out](std::size_t, const SymMatrix&, const Eigen::VectorXd& ev) { append_state(out, ev); };
}

TimeChange time_change(const PolyPath& poly) {
  TimeChange tc{poly.grid, {}};
  if (poly.values.empty()) return tc;
  const std::size_t p = poly.dim();
  tc.values.resize(poly.values.size());
  tc.values[0] = 0.0;
  const double half_dt = 0.5 * poly.grid.dt;
  for (std::size_t k = 1; k < poly.values.size(); ++k) {
    tc.values[k] = tc.values[k - 1] + half_dt * (poly.values[k - 1].e(p - 1) + poly.values[k].e(p - 1));
  }
  return tc;
}

double martingale_coefficient(std::span<const double> lambdas, std::size_t order) {
  const std::size_t p = lambdas.size();
  if (order < 1 || order > p) {
    throw InvalidInput("martingale_coefficient: order " + std::to_string(order) +
                       " outside 1.." + std::to_string(p));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    const double partial = incomplete_symmetric(lambdas, i, order - 1);
    sum += spectral_abs(lambdas[i]) * partial * partial;
  }
  return 2.0 * std::sqrt(sum);
}

double drift_coefficient(std::size_t p, double alpha, std::size_t order) {
  if (order < 1 || order > p) throw InvalidInput("drift_coefficient: order out of range");
  const double n = static_cast<double>(order);
  return (static_cast<double>(p) - n + 1.0) * (alpha - n + 1.0);
}

RegressionCheck drift_test(std::span<const PolyPath> ensemble, std::size_t order) {
  RegressionCheck check;
  check.name = "drift_e" + std::to_string(order);
  if (ensemble.empty()) return check;
  const std::size_t p = ensemble.front().dim();
  check.target = drift_coefficient(p, ensemble.front().alpha, order);
  OriginRegressionAccumulator acc;
  for (const auto& path : ensemble) {
    if (path.dim() != p) throw InvalidInput("drift_test: mixed dimensions in ensemble");
    const double dt = path.grid.dt;
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
      if (path.min_eigenvalue[k] < 0.0) continue;
      acc.add(path.values[k].e(order - 1) * dt, path.values[k + 1].e(order) - path.values[k].e(order));
    }
  }
  check.fit = acc.result();
  return check;
}

RegressionCheck qv_test(std::span<const PolyPath> ensemble) {
  RegressionCheck check;
  check.name = "qv_ep";
  check.target = 1.0;
  if (ensemble.empty()) return check;
  const std::size_t p = ensemble.front().dim();
  OriginRegressionAccumulator acc;
  for (const auto& path : ensemble) {
    if (path.dim() != p) throw InvalidInput("qv_test: mixed dimensions in ensemble");
    const double dt = path.grid.dt;
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
      if (path.min_eigenvalue[k] < 0.0) continue;
      const double x = 4.0 * path.values[k].e(p - 1) * path.values[k].e(p) * dt;
      if (!(x > 0.0)) continue;
      const double d = path.values[k + 1].e(p) - path.values[k].e(p);
      acc.add(x, d * d);
    }
  }
  check.fit = acc.result();
  return check;
}

void write_poly_csv(std::ostream& out, const PolyPath& poly) {
  const std::size_t p = poly.dim();
  out << "t";
  for (std::size_t n = 1; n <= p; ++n) out << ",e" << n;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t k = 0; k < poly.values.size(); ++k) {
    out << poly.grid.time(k);
    for (double v : poly.values[k].values) out << ',' << v;
    out << '\n';
  }
}

}  // namespace besq
