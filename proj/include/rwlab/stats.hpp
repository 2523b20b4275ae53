#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace rwlab {

// Sample mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;

  double lo(double z = 1.96) const { return mean - z * stderr_; }
  double hi(double z = 1.96) const { return mean + z * stderr_; }
  // |mean - value| measured in standard errors; inf when stderr is zero and they differ.
  double zscore(double value) const {
    const double diff = std::abs(mean - value);
    if (stderr_ > 0) return diff / stderr_;
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
};

// Welford accumulator. Merging is done in caller-controlled order so results
// are bit-identical regardless of how replicas were scheduled.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

  Estimate estimate() const {
    Estimate e;
    e.n = n_;
    e.mean = mean_;
    e.stderr_ = n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    return e;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

template <typename T>
Estimate estimate_of(std::span<const T> xs) {
  RunningStats s;
  for (const T& x : xs) s.add(static_cast<double>(x));
  return s.estimate();
}

template <typename T>
Estimate estimate_of(const std::vector<T>& xs) {
  return estimate_of(std::span<const T>(xs));
}

// Proportion with binomial standard error.
inline Estimate proportion(std::size_t successes, std::size_t trials) {
  Estimate e;
  e.n = trials;
  if (trials == 0) return e;
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  e.mean = p;
  e.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return e;
}

// Wilson score interval for a binomial proportion.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.96) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit of observed counts against expected probabilities.
// Cells with zero expected probability must have zero counts (else p = 0).
inline ChiSquareResult chi_square_gof(std::span<const std::size_t> observed,
                                      std::span<const double> probs) {
  ChiSquareResult out;
  std::size_t total = 0;
  for (auto c : observed) total += c;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] <= 0.0) {
      if (observed[i] != 0) {
        out.statistic = std::numeric_limits<double>::infinity();
        out.p_value = 0.0;
        return out;
      }
      continue;
    }
    const double expected = probs[i] * static_cast<double>(total);
    const double d = static_cast<double>(observed[i]) - expected;
    out.statistic += d * d / expected;
    ++cells;
  }
  if (cells < 2) return out;
  out.dof = cells - 1;
  boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

inline double normal_cdf(double x) {
  static const boost::math::normal standard;
  return boost::math::cdf(standard, x);
}

inline double harmonic_number(std::size_t k) {
  double h = 0.0;
  for (std::size_t j = k; j >= 1; --j) h += 1.0 / static_cast<double>(j);
  return h;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
  std::nth_element(xs.begin(), mid, xs.end());
  if (xs.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(xs.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace rwlab
