#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace besq {

// Sample mean with standard error of the mean. Summation is sequential in
// the order values are added, so results are reproducible given the order.
struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

MeanEstimate mean_with_stderr(std::span<const double> values);

// Fraction of successes with binomial standard error sqrt(f(1-f)/n).
MeanEstimate binomial_fraction(std::size_t successes, std::size_t trials);

// Least squares through the origin y = b x, with the heteroskedasticity-robust
// (HC0) standard error sqrt(sum x^2 r^2) / sum x^2.
struct OriginRegression {
  double slope = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
  bool degenerate = true;  // no nonzero predictor
};

class OriginRegressionAccumulator {
 public:
  void add(double x, double y);
  std::size_t size() const noexcept { return xs_.size(); }
  OriginRegression result() const;

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic critical value c(level) sqrt((n+m)/(n m)), c(level) = sqrt(-ln(level/2)/2).
double ks_critical_value(std::size_t n, std::size_t m, double level);

}  // namespace besq
