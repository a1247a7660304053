#include "imi/analysis/bootstrap.hpp"

#include <algorithm>
#include <cmath>

#include "imi/analysis/ranks.hpp"
#include "imi/common/errors.hpp"
#include "imi/common/random.hpp"

namespace imi::analysis {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DegenerateError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapCI bootstrap_ci(const std::vector<double>& values, std::size_t n_resamples, std::uint64_t seed,
                         double level) {
  if (values.empty()) throw DegenerateError("bootstrap needs at least one unit score");
  if (n_resamples == 0) throw ConfigError("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  BootstrapCI ci;
  ci.mean = mean(values);
  ci.n_resamples = n_resamples;
  ci.seed = seed;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mn == *mx) {
    ci.lower = ci.upper = ci.mean = *mn;
    return ci;
  }
  Rng rng(seed);
  const std::size_t n = values.size();
  std::vector<double> means(n_resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.below(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = (1.0 - level) / 2.0;
  ci.lower = std::min(quantile_sorted(means, tail), ci.mean);
  ci.upper = std::max(quantile_sorted(means, 1.0 - tail), ci.mean);
  return ci;
}

}  // namespace imi::analysis
