#pragma once

#include "imi/common/random.hpp"
#include "imi/model/tensor.hpp"

namespace imi::featviz {

/// Ranges for the per-step random transformation.
struct AugmentationConfig {
  bool enabled = true;
  int jitter_px = 4;            ///< integer shift in [-jitter, jitter]
  double rotation_deg = 10.0;   ///< angle in [-rotation, rotation]
  double scale_min = 0.95;
  double scale_max = 1.05;
};

struct AugmentParams {
  int dx = 0;
  int dy = 0;
  double angle_rad = 0.0;
  double scale = 1.0;
};

AugmentParams sample_augmentation(const AugmentationConfig& config, Rng& rng);

/// Bilinear resampling of a CHW image under rotation/scale about the centre
/// followed by a shift. Source coordinates are clamped to the image, so the
/// map is linear in the image.
Tensor apply_augmentation(const Tensor& image, const AugmentParams& params);

/// Transpose of apply_augmentation: pulls a gradient on the augmented image
/// back to the source image.
Tensor augmentation_adjoint(const Tensor& grad_augmented, const AugmentParams& params);

}  // namespace imi::featviz
