#include "lifted/variance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lifted {

void ChainTrace::validate() const {
  if (accepted_count < 0 || accepted_count > total_steps)
    throw std::invalid_argument("accepted count must lie in [0, total steps]");
  if (burn_in < 0) throw std::invalid_argument("burn-in must be non-negative");
}

VarianceEstimate batch_means_variance(std::span<const double> values,
                                      std::optional<std::size_t> batch_count) {
  const std::size_t t = values.size();
  if (t < kMinTraceLength)
    throw std::invalid_argument("trace too short for batch means: " + std::to_string(t) +
                                " values, need " + std::to_string(kMinTraceLength));
  std::size_t b = batch_count.value_or(static_cast<std::size_t>(std::sqrt(static_cast<double>(t))));
  if (b < 2 || b > t / 2) throw std::invalid_argument("batch count must lie in [2, T/2]");
  const std::size_t m = t / b;

  // Centre on the first value so that adding a constant leaves the sums unchanged.
  const double shift = values[0];
  std::vector<double> means(b);
  double grand = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    double s = 0.0;
    for (std::size_t i = j * m; i < (j + 1) * m; ++i) s += values[i] - shift;
    means[j] = s / static_cast<double>(m);
    grand += means[j];
  }
  grand /= static_cast<double>(b);
  double ss = 0.0;
  for (double v : means) ss += (v - grand) * (v - grand);

  const double bd = static_cast<double>(b), md = static_cast<double>(m);
  VarianceEstimate out;
  out.batches = b;
  out.batch_size = m;
  out.value = md * ss / (bd - 1.0);

  if (b >= 3) {
    // Delete-one-batch jackknife of the estimator m * s^2.
    std::vector<double> leave(b);
    double leave_mean = 0.0;
    for (std::size_t j = 0; j < b; ++j) {
      const double g = (grand * bd - means[j]) / (bd - 1.0);
      const double ssj = ss - (means[j] - grand) * (means[j] - grand) -
                         (bd - 1.0) * (g - grand) * (g - grand);
      leave[j] = md * ssj / (bd - 2.0);
      leave_mean += leave[j];
    }
    leave_mean /= bd;
    double acc = 0.0;
    for (double v : leave) acc += (v - leave_mean) * (v - leave_mean);
    out.standard_error = std::sqrt((bd - 1.0) / bd * acc);
  }
  return out;
}

VarianceEstimate batch_means_variance(const ChainTrace& trace,
                                      std::optional<std::size_t> batch_count) {
  trace.validate();
  return batch_means_variance(std::span<const double>(trace.values), batch_count);
}

double acceptance_rate(const ChainTrace& trace) {
  trace.validate();
  if (trace.total_steps <= 0) throw std::invalid_argument("acceptance rate needs at least one step");
  return static_cast<double>(trace.accepted_count) / static_cast<double>(trace.total_steps);
}

std::vector<double> standardize(std::span<const double> values, double mean, double sd) {
  if (!(sd > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sd;
  return out;
}

}  // namespace lifted
