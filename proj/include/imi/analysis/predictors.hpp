#pragma once

#include <span>
#include <vector>

#include "imi/model/backend.hpp"
#include "imi/model/dataset.hpp"

namespace imi::analysis {

/// A single-channel activation map (H x W, row-major).
struct ActivationMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;
};

/// Mean over positions of |a(y,x) - mean of the 3x3 window around (y,x)|.
/// The window includes the centre and is clipped at the borders.
double local_contrast(const ActivationMap& map);

/// local_contrast averaged over images.
double predictor_contrast(const std::vector<ActivationMap>& maps);

struct Sparseness {
  double pixel = 0.0;    ///< mean fraction of entries <= 0
  double channel = 0.0;  ///< fraction of maps with every entry <= 0
};

Sparseness predictor_sparseness(const std::vector<ActivationMap>& maps);

/// The unit's feature map on every dataset image.
std::vector<ActivationMap> unit_maps(const Backend& model, const ImageDataset& dataset, const UnitAddress& unit);

}  // namespace imi::analysis
