#include "imi/sampling/unit_sampler.hpp"

#include <algorithm>
#include <set>

#include "imi/common/errors.hpp"

namespace imi::sampling {

std::vector<std::string> eligible_layers(const ModelSpec& model, std::size_t exclusion,
                                         const std::vector<std::string>& allowlist) {
  for (const auto& id : allowlist) {
    if (!model.layer_index(id)) {
      throw ConfigError("allowlist names unknown layer '" + id + "' of model '" + model.model_id + "'");
    }
  }
  std::vector<std::string> out;
  std::size_t convs_seen = 0;
  for (const auto& layer : model.layers) {
    if (layer.kind == LayerKind::convolution && convs_seen++ < exclusion) continue;
    const bool kind_ok = layer.kind == LayerKind::convolution ||
                         layer.kind == LayerKind::normalization ||
                         layer.kind == LayerKind::skip_block_output;
    if (!kind_ok) continue;
    if (!allowlist.empty() && std::find(allowlist.begin(), allowlist.end(), layer.id) == allowlist.end()) {
      continue;
    }
    out.push_back(layer.id);
  }
  if (out.empty()) {
    throw ConfigError("model '" + model.model_id + "' has no eligible layers after excluding " +
                      std::to_string(exclusion) + " leading convolution(s)");
  }
  return out;
}

UnitAddress draw_unit(const ModelSpec& model, const std::vector<std::string>& layers, Rng& rng) {
  const auto& layer = model.layer(layers[rng.below(layers.size())]);
  return UnitAddress{model.model_id, layer.id, rng.below(layer.channel_count)};
}

std::vector<UnitAddress> sample_units(const ModelSpec& model, const SamplingConfig& config) {
  if (config.n_units == 0) throw ConfigError("n_units must be positive");
  const auto layers = eligible_layers(model, config.exclusion, config.allowlist);
  std::size_t capacity = 0;
  for (const auto& id : layers) capacity += model.layer(id).channel_count;
  if (config.n_units > capacity) {
    throw ConfigError("requested " + std::to_string(config.n_units) + " units but only " +
                      std::to_string(capacity) + " distinct eligible units exist");
  }
  Rng rng(config.seed);
  std::set<UnitAddress> seen;
  std::vector<UnitAddress> units;
  units.reserve(config.n_units);
  while (units.size() < config.n_units) {
    auto unit = draw_unit(model, layers, rng);
    if (seen.insert(unit).second) units.push_back(std::move(unit));
  }
  return units;
}

}  // namespace imi::sampling
