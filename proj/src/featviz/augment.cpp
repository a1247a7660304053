#include "imi/featviz/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace imi::featviz {
namespace {

struct Tap {
  std::size_t x0, y0, x1, y1;
  double w00, w01, w10, w11;
};

// Source taps for output pixel (x, y).
Tap source_taps(std::size_t x, std::size_t y, std::size_t h, std::size_t w, const AugmentParams& p) {
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double px = static_cast<double>(x) - p.dx - cx;
  const double py = static_cast<double>(y) - p.dy - cy;
  const double c = std::cos(p.angle_rad), s = std::sin(p.angle_rad);
  double sx = (c * px + s * py) / p.scale + cx;
  double sy = (-s * px + c * py) / p.scale + cy;
  sx = std::clamp(sx, 0.0, static_cast<double>(w) - 1.0);
  sy = std::clamp(sy, 0.0, static_cast<double>(h) - 1.0);
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const std::size_t x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
  return {x0, y0, x1, y1, (1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
}

}  // namespace

AugmentParams sample_augmentation(const AugmentationConfig& config, Rng& rng) {
  if (!config.enabled) return {};
  AugmentParams p;
  p.dx = static_cast<int>(rng.between(-config.jitter_px, config.jitter_px));
  p.dy = static_cast<int>(rng.between(-config.jitter_px, config.jitter_px));
  const double max_angle = config.rotation_deg * std::numbers::pi / 180.0;
  p.angle_rad = rng.uniform(-max_angle, max_angle);
  p.scale = rng.uniform(config.scale_min, config.scale_max);
  return p;
}

Tensor apply_augmentation(const Tensor& image, const AugmentParams& params) {
  const std::size_t channels = image.shape()[0], h = image.shape()[1], w = image.shape()[2];
  Tensor out(image.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Tap t = source_taps(x, y, h, w, params);
      for (std::size_t c = 0; c < channels; ++c) {
        out.at(c, y, x) = t.w00 * image.at(c, t.y0, t.x0) + t.w01 * image.at(c, t.y0, t.x1) +
                          t.w10 * image.at(c, t.y1, t.x0) + t.w11 * image.at(c, t.y1, t.x1);
      }
    }
  }
  return out;
}

Tensor augmentation_adjoint(const Tensor& grad_augmented, const AugmentParams& params) {
  const std::size_t channels = grad_augmented.shape()[0], h = grad_augmented.shape()[1],
                    w = grad_augmented.shape()[2];
  Tensor grad(grad_augmented.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const Tap t = source_taps(x, y, h, w, params);
      for (std::size_t c = 0; c < channels; ++c) {
        const double g = grad_augmented.at(c, y, x);
        grad.at(c, t.y0, t.x0) += t.w00 * g;
        grad.at(c, t.y0, t.x1) += t.w01 * g;
        grad.at(c, t.y1, t.x0) += t.w10 * g;
        grad.at(c, t.y1, t.x1) += t.w11 * g;
      }
    }
  }
  return grad;
}

}  // namespace imi::featviz
