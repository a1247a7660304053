#include "imi/stimuli/histogram.hpp"

#include <algorithm>
#include <cmath>

#include "imi/common/errors.hpp"
#include "imi/stimuli/exemplars.hpp"

namespace imi::stimuli {

std::size_t histogram_bin(double scaled, std::size_t bins) {
  auto upper = [bins](double v) {
    const auto idx = static_cast<std::size_t>(std::floor((v + 1.0) / 2.0 * static_cast<double>(bins)));
    return std::min(idx, bins - 1);
  };
  return scaled >= 0.0 ? upper(scaled) : bins - 1 - upper(-scaled);
}

ActivationHistogram activation_histogram(const ActivationTable& table, const UnitAddress& unit,
                                         std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  const auto column = table.column(unit);
  double scale = 0.0;
  for (double v : column) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) throw DegenerateError("unit " + unit.to_string() + " never activates; cannot scale");

  ActivationHistogram h;
  h.scale = scale;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = -1.0 + 2.0 * static_cast<double>(i) / bins;
  h.mass.assign(bins, 0.0);
  h.scaled.reserve(column.size());
  for (double v : column) {
    h.scaled.push_back(v / scale);
    h.mass[histogram_bin(h.scaled.back(), bins)] += 1.0;
  }
  for (double& m : h.mass) m /= static_cast<double>(column.size());

  auto sorted = h.scaled;
  std::sort(sorted.begin(), sorted.end());
  h.markers.p5 = sorted[percentile_index(5.0, sorted.size())];
  h.markers.p15 = sorted[percentile_index(15.0, sorted.size())];
  h.markers.p85 = sorted[percentile_index(85.0, sorted.size())];
  h.markers.p95 = sorted[percentile_index(95.0, sorted.size())];
  return h;
}

}  // namespace imi::stimuli
