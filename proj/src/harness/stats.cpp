#include "disttrack/harness/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "disttrack/error.hpp"

namespace disttrack::stats {

void Moments::add(double x) {
  const double n1 = static_cast<double>(n_);
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * n1;
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ -
         4 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
  m2_ += term1;
}

double Moments::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double Moments::stddev() const { return std::sqrt(variance()); }

double Moments::standard_error() const {
  return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double Moments::variance_standard_error() const {
  if (n_ < 4) return 0.0;
  const double n = static_cast<double>(n_);
  const double mu2 = m2_ / n;
  const double mu4 = m4_ / n;
  return std::sqrt(std::max(0.0, (mu4 - mu2 * mu2 * (n - 3) / (n - 1)) / n));
}

double normal_quantile_two_sided(double confidence) {
  boost::math::normal_distribution<double> normal;
  return boost::math::quantile(normal, 0.5 + confidence / 2);
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double confidence) {
  if (trials == 0) return {0, 1};
  const double z = normal_quantile_two_sided(confidence);
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double center = (phat + z2 / (2 * n)) / (1 + z2 / n);
  const double half =
      z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

ChiSquareResult chi_square_homogeneity(std::span<const std::uint64_t> a,
                                       std::span<const std::uint64_t> b,
                                       double min_expected) {
  const std::size_t categories = std::max(a.size(), b.size());
  auto at = [](std::span<const std::uint64_t> v, std::size_t i) {
    return i < v.size() ? static_cast<double>(v[i]) : 0.0;
  };
  double total_a = 0, total_b = 0;
  for (std::size_t i = 0; i < categories; ++i) {
    total_a += at(a, i);
    total_b += at(b, i);
  }
  if (total_a == 0 || total_b == 0) throw UsageError("chi-square: empty sample");
  const double total = total_a + total_b;

  // Pool adjacent categories until the smaller sample expects enough.
  std::vector<std::pair<double, double>> bins;
  double acc_a = 0, acc_b = 0;
  const double frac = std::min(total_a, total_b) / total;
  for (std::size_t i = 0; i < categories; ++i) {
    acc_a += at(a, i);
    acc_b += at(b, i);
    if ((acc_a + acc_b) * frac >= min_expected) {
      bins.emplace_back(acc_a, acc_b);
      acc_a = acc_b = 0;
    }
  }
  if (acc_a + acc_b > 0) {
    if (bins.empty()) {
      bins.emplace_back(acc_a, acc_b);
    } else {
      bins.back().first += acc_a;
      bins.back().second += acc_b;
    }
  }

  ChiSquareResult result;
  result.bins = bins.size();
  if (bins.size() < 2) return result;
  for (const auto& [ca, cb] : bins) {
    const double col = ca + cb;
    const double ea = col * total_a / total;
    const double eb = col * total_b / total;
    result.statistic += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  result.dof = static_cast<std::uint32_t>(bins.size() - 1);
  boost::math::chi_squared_distribution<double> dist(result.dof);
  result.p_value = boost::math::cdf(boost::math::complement(dist, result.statistic));
  return result;
}

namespace {

SlopeFit fit_linear(std::vector<double> x, std::vector<double> y,
                    std::span<const double> raw_x, std::span<const double> raw_y) {
  if (x.size() != y.size()) throw UsageError("fit: size mismatch");
  if (x.size() < 4) throw UsageError("fit: need at least 4 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw UsageError("fit: x values are all equal");
  SlopeFit fit;
  fit.x.assign(raw_x.begin(), raw_x.end());
  fit.y.assign(raw_y.begin(), raw_y.end());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  const double se = std::sqrt(sse / (n - 2) / sxx);
  boost::math::students_t_distribution<double> t(n - 2);
  const double tq = boost::math::quantile(boost::math::complement(t, 0.025));
  fit.slope_ci = {fit.slope - tq * se, fit.slope + tq * se};
  return fit;
}

}  // namespace

SlopeFit fit_log_log(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (double v : x) lx.push_back(std::log(v));
  for (double v : y) ly.push_back(std::log(v));
  return fit_linear(std::move(lx), std::move(ly), x, y);
}

SlopeFit fit_semi_log(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx;
  for (double v : x) lx.push_back(std::log(v));
  return fit_linear(std::move(lx), {y.begin(), y.end()}, x, y);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw UsageError("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace disttrack::stats
