#pragma once

#include <cstdint>
#include <vector>

namespace imi::analysis {

struct BootstrapCI {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_resamples = 0;
  std::uint64_t seed = 0;
};

/// Percentile interval (2.5 / 97.5, linear interpolation between order
/// statistics) of the mean, resampling values with replacement.
BootstrapCI bootstrap_ci(const std::vector<double>& values, std::size_t n_resamples = 10000, std::uint64_t seed = 0,
                         double level = 0.95);

/// Linear-interpolation quantile of sorted data, q in [0, 1].
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace imi::analysis
