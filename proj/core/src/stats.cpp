#include "besq/stats.hpp"

#include <algorithm>
#include <cmath>

#include "besq/error.hpp"

namespace besq {

MeanEstimate mean_with_stderr(std::span<const double> values) {
  MeanEstimate est;
  est.count = values.size();
  if (values.empty()) return est;
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return est;
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  const double n = static_cast<double>(values.size());
  est.stderr_ = std::sqrt(ss / (n - 1.0) / n);
  return est;
}

MeanEstimate binomial_fraction(std::size_t successes, std::size_t trials) {
  MeanEstimate est;
  est.count = trials;
  if (trials == 0) return est;
  const double n = static_cast<double>(trials);
  est.mean = static_cast<double>(successes) / n;
  est.stderr_ = std::sqrt(est.mean * (1.0 - est.mean) / n);
  return est;
}

void OriginRegressionAccumulator::add(double x, double y) {
  xs_.push_back(x);
  ys_.push_back(y);
}

OriginRegression OriginRegressionAccumulator::result() const {
  OriginRegression r;
  r.count = xs_.size();
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    sxx += xs_[i] * xs_[i];
    sxy += xs_[i] * ys_[i];
  }
  if (!(sxx > 0.0)) return r;
  r.degenerate = false;
  r.slope = sxy / sxx;
  double meat = 0.0;
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    const double resid = ys_[i] - r.slope * xs_[i];
    meat += xs_[i] * xs_[i] * resid * resid;
  }
  r.stderr_ = std::sqrt(meat) / sxx;
  return r;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidInput("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double level) {
  const double c = std::sqrt(-std::log(level / 2.0) / 2.0);
  const double dn = static_cast<double>(n);
  const double dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

}  // namespace besq
