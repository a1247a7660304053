#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imi/common/random.hpp"
#include "imi/model/model_spec.hpp"

namespace imi::sampling {

struct SamplingConfig {
  std::size_t n_units = 84;
  std::uint64_t seed = 0;
  /// Leading convolution layers that never contribute units.
  std::size_t exclusion = 1;
  /// Optional per-model restriction (e.g. only the last layer of each
  /// inception block). Empty means no restriction.
  std::vector<std::string> allowlist;
};

/// Convolution, normalization and skip-block-output layers in model order,
/// minus the first `exclusion` convolutions, intersected with the allowlist
/// when one is given. Throws ConfigError when nothing remains.
std::vector<std::string> eligible_layers(const ModelSpec& model, std::size_t exclusion,
                                         const std::vector<std::string>& allowlist = {});

/// One layer-uniform, then channel-uniform draw.
UnitAddress draw_unit(const ModelSpec& model, const std::vector<std::string>& layers, Rng& rng);

/// `n_units` distinct units; duplicates are rejected and redrawn.
std::vector<UnitAddress> sample_units(const ModelSpec& model, const SamplingConfig& config);

}  // namespace imi::sampling
