#include "imi/featviz/synthesize.hpp"

#include <algorithm>
#include <cmath>

#include "imi/common/errors.hpp"
#include "imi/featviz/diversity.hpp"
#include "imi/featviz/stopping.hpp"
#include "imi/kernels/kernels.hpp"

namespace imi::featviz {

void FeatureVizConfig::validate() const {
  if (batch_size == 0) throw ConfigError("featviz batch_size must be positive");
  if (window == 0) throw ConfigError("featviz window must be positive");
  if (min_steps < 2 * window) throw ConfigError("featviz min_steps must be at least twice the window");
  if (max_steps < min_steps) throw ConfigError("featviz max_steps must not be below min_steps");
  if (!(step_size > 0.0)) throw ConfigError("featviz step_size must be positive");
  if (diversity_weight < 0.0) throw ConfigError("diversity weight must be non-negative");
  if (augmentation.scale_min <= 0.0 || augmentation.scale_max < augmentation.scale_min) {
    throw ConfigError("augmentation scale range is invalid");
  }
}

SynthesisResult synthesize(const Backend& model, const UnitAddress& unit, Sign sign,
                           const FeatureVizConfig& config) {
  config.validate();
  if (!model.differentiable()) {
    throw ConfigError("model '" + model.spec().model_id + "' is not differentiable");
  }
  check_unit(model.spec(), unit);
  const Shape& shape = model.spec().input_shape;

  Rng init_rng(derive_seed(config.seed, 0));
  Rng aug_rng(derive_seed(config.seed, 1));
  std::vector<Tensor> images;
  for (std::size_t b = 0; b < config.batch_size; ++b) {
    Tensor img(shape);
    for (double& v : img.values()) v = 0.5 + init_rng.uniform(-config.init_noise, config.init_noise);
    images.push_back(std::move(img));
  }

  const DiversityObjective objective(unit.channel_index, sign_factor(sign), config.diversity_weight);
  PlateauStopper stopper(config.min_steps, config.window);
  SynthesisResult result;
  result.diversity_weight = config.diversity_weight;
  result.seed = config.seed;

  std::vector<AugmentParams> params(config.batch_size);
  std::vector<Tensor> augmented(config.batch_size);
  bool halted = false;
  for (std::size_t step = 1; step <= config.max_steps; ++step) {
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      params[b] = sample_augmentation(config.augmentation, aug_rng);
      augmented[b] = config.augmentation.enabled ? apply_augmentation(images[b], params[b]) : images[b];
    }
    GradientResult g;
    try {
      g = model.input_gradient(augmented, unit, objective);
    } catch (const NumericError& e) {
      throw NumericError("synthesis of " + unit.to_string() + " failed at step " + std::to_string(step) +
                         ": " + e.what());
    }
    double magnitude_sq = 0.0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (config.augmentation.enabled) g.gradients[b] = augmentation_adjoint(g.gradients[b], params[b]);
      const double norm_sq = kernels::sum_squares(g.gradients[b].values());
      magnitude_sq += norm_sq;
      const double norm = std::sqrt(norm_sq);
      if (norm > 0.0) {
        kernels::axpy(config.step_size / norm, g.gradients[b].values(), images[b].values());
        for (double& v : images[b].values()) v = std::clamp(v, 0.0, 1.0);
      }
    }
    const double magnitude = std::sqrt(magnitude_sq);
    if (!std::isfinite(magnitude)) {
      throw NumericError("synthesis of " + unit.to_string() + " produced a non-finite gradient at step " +
                         std::to_string(step));
    }
    if (stopper.record(magnitude)) {
      halted = true;
      break;
    }
  }
  result.steps = stopper.steps();
  result.truncated = !halted;
  result.gradient_magnitudes = stopper.raw();
  for (const auto& img : images) result.final_activations.push_back(model.unit_activation(img, unit));
  result.images = std::move(images);
  return result;
}

}  // namespace imi::featviz
