#pragma once

// Asymptotic-variance and acceptance-rate estimates from simulated traces.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lifted {

struct ChainTrace {
  std::vector<double> values;  // f(X_k) after burn-in
  long accepted_count = 0;
  long total_steps = 0;
  long burn_in = 0;

  void validate() const;
};

struct VarianceEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t batches = 0;
  std::size_t batch_size = 0;
};

inline constexpr std::size_t kMinTraceLength = 100;

/// Non-overlapping batch means: b batches of size m = floor(T / b), with
/// b = floor(sqrt(T)) by default; returns m times the sample variance of the
/// batch means. The standard error is the delete-one-batch jackknife. Trailing
/// values that do not fill a batch are dropped.
VarianceEstimate batch_means_variance(std::span<const double> values,
                                      std::optional<std::size_t> batch_count = std::nullopt);
VarianceEstimate batch_means_variance(const ChainTrace& trace,
                                      std::optional<std::size_t> batch_count = std::nullopt);

double acceptance_rate(const ChainTrace& trace);

/// (v - mean) / sd elementwise; sd must be positive.
std::vector<double> standardize(std::span<const double> values, double mean, double sd);

}  // namespace lifted
