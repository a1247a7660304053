#include "imi/analysis/predictors.hpp"

#include <algorithm>
#include <cmath>

#include "imi/common/errors.hpp"

namespace imi::analysis {

double local_contrast(const ActivationMap& m) {
  if (m.height == 0 || m.width == 0 || m.values.size() != m.height * m.width) {
    throw ShapeError("activation map dimensions do not match its values");
  }
  double total = 0.0;
  for (std::size_t y = 0; y < m.height; ++y) {
    const std::size_t y0 = y == 0 ? 0 : y - 1, y1 = std::min(m.height - 1, y + 1);
    for (std::size_t x = 0; x < m.width; ++x) {
      const std::size_t x0 = x == 0 ? 0 : x - 1, x1 = std::min(m.width - 1, x + 1);
      double s = 0.0;
      for (std::size_t yy = y0; yy <= y1; ++yy) {
        for (std::size_t xx = x0; xx <= x1; ++xx) s += m.values[yy * m.width + xx];
      }
      const double window = static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
      total += std::fabs(m.values[y * m.width + x] - s / window);
    }
  }
  return total / static_cast<double>(m.values.size());
}

double predictor_contrast(const std::vector<ActivationMap>& maps) {
  if (maps.empty()) throw DegenerateError("contrast predictor needs at least one map");
  double s = 0.0;
  for (const auto& m : maps) s += local_contrast(m);
  return s / static_cast<double>(maps.size());
}

Sparseness predictor_sparseness(const std::vector<ActivationMap>& maps) {
  if (maps.empty()) throw DegenerateError("sparseness predictor needs at least one map");
  Sparseness out;
  std::size_t dead = 0;
  for (const auto& m : maps) {
    if (m.values.empty()) throw ShapeError("empty activation map");
    const auto nonpos = static_cast<std::size_t>(std::count_if(m.values.begin(), m.values.end(),
                                                               [](double v) { return v <= 0.0; }));
    out.pixel += static_cast<double>(nonpos) / static_cast<double>(m.values.size());
    if (nonpos == m.values.size()) ++dead;
  }
  out.pixel /= static_cast<double>(maps.size());
  out.channel = static_cast<double>(dead) / static_cast<double>(maps.size());
  return out;
}

std::vector<ActivationMap> unit_maps(const Backend& model, const ImageDataset& dataset, const UnitAddress& unit) {
  check_unit(model.spec(), unit);
  std::vector<ActivationMap> out;
  out.reserve(dataset.size());
  for (const auto& img : dataset.images) {
    const Tensor maps = model.feature_maps(img, unit.layer_id);
    if (maps.shape().size() != 3) throw ShapeError("unit maps need a spatial (C, H, W) layer");
    ActivationMap m;
    m.height = maps.shape()[1];
    m.width = maps.shape()[2];
    const auto ch = maps.channel(unit.channel_index);
    m.values.assign(ch.begin(), ch.end());
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace imi::analysis
