#pragma once

#include <span>
#include <string>
#include <vector>

#include "imi/model/model_spec.hpp"
#include "imi/model/tensor.hpp"

namespace imi {

/// Scalar activation of a unit: the arithmetic mean of its feature map.
double channel_mean(const Tensor& feature_maps, std::size_t channel);

/// A differentiable objective over the batch of feature maps recorded at one
/// layer. `evaluate` returns the objective value and writes d(value)/d(map)
/// into `grads` (pre-sized to match `maps`, zero-filled).
class LayerObjective {
 public:
  virtual ~LayerObjective() = default;
  virtual double evaluate(std::span<const Tensor> maps, std::span<Tensor> grads) const = 0;
};

/// sign * mean over the batch of the unit's activation.
class ActivationObjective : public LayerObjective {
 public:
  explicit ActivationObjective(std::size_t channel, double sign = 1.0)
      : channel_(channel), sign_(sign) {}
  double evaluate(std::span<const Tensor> maps, std::span<Tensor> grads) const override;

 private:
  std::size_t channel_;
  double sign_;
};

struct GradientResult {
  double objective = 0.0;
  /// Per-image activation of the addressed unit.
  std::vector<double> activations;
  /// d(objective)/d(image), one tensor per batch element.
  std::vector<Tensor> gradients;
};

/// Uniform model interface. Implementations are immutable after
/// construction and safe for concurrent use.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const ModelSpec& spec() const = 0;

  std::vector<std::string> enumerate_layers() const;

  /// True when input_gradient is available.
  virtual bool differentiable() const = 0;

  virtual double unit_activation(const Tensor& image, const UnitAddress& unit) const = 0;

  /// Activations for several units of one image. The default calls
  /// unit_activation per unit; network backends share one forward pass.
  virtual std::vector<double> unit_activations(const Tensor& image,
                                               std::span<const UnitAddress> units) const;

  /// Feature maps of a whole layer for one image.
  virtual Tensor feature_maps(const Tensor& image, const std::string& layer_id) const = 0;

  virtual GradientResult input_gradient(std::span<const Tensor> batch, const UnitAddress& unit,
                                        const LayerObjective& objective) const = 0;

  /// Gradient of the unit's plain activation for a single image.
  Tensor input_gradient(const Tensor& image, const UnitAddress& unit) const;
};

}  // namespace imi
