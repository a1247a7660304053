#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "imi/featviz/augment.hpp"
#include "imi/model/backend.hpp"

namespace imi::featviz {

enum class Sign { max, min };

inline double sign_factor(Sign sign) { return sign == Sign::max ? 1.0 : -1.0; }

struct FeatureVizConfig {
  std::size_t batch_size = 9;
  std::size_t min_steps = 2500;
  std::size_t max_steps = 10000;
  std::size_t window = 250;
  /// L2 length of each image's update per step (gradients are normalised).
  double step_size = 0.5;
  AugmentationConfig augmentation;
  std::uint64_t seed = 0;
  double diversity_weight = 0.0;
  /// Initial images are 0.5 + U(-init_noise, init_noise) per pixel.
  double init_noise = 0.05;

  /// max_steps >= min_steps >= 2 * window, step_size > 0, batch_size >= 1.
  void validate() const;
};

struct SynthesisResult {
  std::vector<Tensor> images;             ///< in [0, 1]
  std::vector<double> final_activations;  ///< on the un-augmented images
  std::vector<double> gradient_magnitudes;
  std::size_t steps = 0;
  bool truncated = false;                 ///< hit max_steps without plateau
  double diversity_weight = 0.0;
  std::uint64_t seed = 0;
};

/// Gradient ascent on sign * mean activation - lambda * diversity under
/// per-step re-sampled augmentations; halts through PlateauStopper.
/// Throws NumericError naming the step on non-finite loss or gradient.
SynthesisResult synthesize(const Backend& model, const UnitAddress& unit, Sign sign,
                           const FeatureVizConfig& config);

}  // namespace imi::featviz
