#pragma once

#include <vector>

#include "imi/model/activation_table.hpp"

namespace imi::stimuli {

struct PercentileMarkers {
  double p5 = 0, p15 = 0, p85 = 0, p95 = 0;
};

/// Activation distribution of one unit, scaled into [-1, 1] by its largest
/// absolute activation.
struct ActivationHistogram {
  double scale = 0;             ///< max |activation|
  std::vector<double> edges;    ///< bins + 1 edges from -1 to 1
  std::vector<double> mass;     ///< normalized, sums to 1
  std::vector<double> scaled;   ///< scaled activations in table order
  PercentileMarkers markers;    ///< on the scaled values
};

/// Non-negative values fall in [edge_i, edge_i+1) (1.0 in the last bin);
/// negative values mirror them, so symmetric inputs give symmetric mass.
std::size_t histogram_bin(double scaled, std::size_t bins);

/// Throws DegenerateError for an all-zero unit.
ActivationHistogram activation_histogram(const ActivationTable& table, const UnitAddress& unit,
                                         std::size_t bins);

}  // namespace imi::stimuli
