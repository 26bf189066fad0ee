#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace testing {

inline constexpr std::uint64_t kSeed = 0xC0FFEE1234ULL;

struct MeanSe {
  double mean;
  double se;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))};
}

/// Upper-tail p-value of Pearson's statistic for observed counts against
/// expected probabilities (cells with zero probability must have zero counts).
inline double chi_square_p_value(const std::vector<long>& counts, const std::vector<double>& probs) {
  long total = 0;
  for (long c : counts) total += c;
  double stat = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    const double e = probs[i] * static_cast<double>(total);
    stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  boost::math::chi_squared dist(cells - 1);
  return boost::math::cdf(boost::math::complement(dist, stat));
}

/// Kolmogorov-Smirnov statistic sqrt(n) D_n of a sample against a CDF.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return std::sqrt(n) * d;
}

/// Asymptotic 0.1% critical value of sqrt(n) D_n.
inline constexpr double kKsCritical001 = 1.9495;

inline double normal_cdf(double x, double sd = 1.0) {
  return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0)));
}

}  // namespace testing
