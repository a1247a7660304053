#pragma once

#include <memory>
#include <vector>

#include "imi/model/backend.hpp"
#include "imi/model/layers.hpp"

namespace imi {

/// Feed-forward chain of layers with reverse-mode input gradients.
class SequentialNetwork : public Backend {
 public:
  SequentialNetwork(std::string model_id, Shape input_shape,
                    std::vector<std::unique_ptr<Layer>> layers);

  const ModelSpec& spec() const override { return spec_; }
  bool differentiable() const override { return true; }

  double unit_activation(const Tensor& image, const UnitAddress& unit) const override;
  std::vector<double> unit_activations(const Tensor& image,
                                       std::span<const UnitAddress> units) const override;
  Tensor feature_maps(const Tensor& image, const std::string& layer_id) const override;

  using Backend::input_gradient;
  GradientResult input_gradient(std::span<const Tensor> batch, const UnitAddress& unit,
                                const LayerObjective& objective) const override;

  const Layer& layer(std::size_t index) const { return *layers_[index]; }
  std::size_t layer_count() const { return layers_.size(); }

  /// Outputs of layers 0..last (inclusive) for one image.
  std::vector<Tensor> forward_through(const Tensor& image, std::size_t last) const;

 private:
  void check_input(const Tensor& image) const;

  ModelSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace imi
