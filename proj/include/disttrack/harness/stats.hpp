#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace disttrack::stats {

// Streaming moments (Welford / Terriberry update).
class Moments {
 public:
  void add(double x);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  // Unbiased sample variance.
  double variance() const;
  double stddev() const;
  double standard_error() const;
  // Standard error of variance(), from the fourth central moment.
  double variance_standard_error() const;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0, m2_ = 0, m3_ = 0, m4_ = 0;
};

struct Interval {
  double lo = 0;
  double hi = 0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Two-sided normal quantile for the given confidence level.
double normal_quantile_two_sided(double confidence);

// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double confidence = 0.99);

struct ChiSquareResult {
  double statistic = 0;
  std::uint32_t dof = 0;
  double p_value = 1;
  std::size_t bins = 0;
};

// Two-sample homogeneity test on raw category counts. Adjacent categories
// are pooled until each pooled bin has expected count >= min_expected in
// both samples.
ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b,
                                       double min_expected = 5.0);

struct SlopeFit {
  std::vector<double> x;
  std::vector<double> y;
  double slope = 0;
  double intercept = 0;
  Interval slope_ci;  // 95% t-interval
};

// Least squares fit of log(y) against log(x); needs >= 4 points.
SlopeFit fit_log_log(std::span<const double> x, std::span<const double> y);
// Least squares fit of y against log(x); needs >= 4 points.
SlopeFit fit_semi_log(std::span<const double> x, std::span<const double> y);

// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace disttrack::stats
