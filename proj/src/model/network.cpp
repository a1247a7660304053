#include "imi/model/network.hpp"

#include <algorithm>
#include <cmath>

#include "imi/common/errors.hpp"
#include "imi/kernels/kernels.hpp"

namespace imi {

double channel_mean(const Tensor& feature_maps, std::size_t channel) {
  auto plane = feature_maps.channel(channel);
  const double mean = kernels::sum(plane) / static_cast<double>(plane.size());
  if (!std::isfinite(mean)) throw NumericError("non-finite activation");
  return mean;
}

double ActivationObjective::evaluate(std::span<const Tensor> maps, std::span<Tensor> grads) const {
  const double batch = static_cast<double>(maps.size());
  double total = 0.0;
  for (std::size_t b = 0; b < maps.size(); ++b) {
    total += channel_mean(maps[b], channel_);
    auto g = grads[b].channel(channel_);
    const double share = sign_ / (batch * static_cast<double>(g.size()));
    for (double& v : g) v += share;
  }
  return sign_ * total / batch;
}

std::vector<std::string> Backend::enumerate_layers() const {
  std::vector<std::string> ids;
  for (const auto& layer : spec().layers) ids.push_back(layer.id);
  return ids;
}

std::vector<double> Backend::unit_activations(const Tensor& image,
                                              std::span<const UnitAddress> units) const {
  std::vector<double> out;
  out.reserve(units.size());
  for (const auto& unit : units) out.push_back(unit_activation(image, unit));
  return out;
}

Tensor Backend::input_gradient(const Tensor& image, const UnitAddress& unit) const {
  ActivationObjective objective(unit.channel_index);
  auto result = input_gradient(std::span<const Tensor>(&image, 1), unit, objective);
  return std::move(result.gradients.front());
}

SequentialNetwork::SequentialNetwork(std::string model_id, Shape input_shape,
                                     std::vector<std::unique_ptr<Layer>> layers)
    : layers_(std::move(layers)) {
  spec_.model_id = std::move(model_id);
  spec_.input_shape = std::move(input_shape);
  for (const auto& layer : layers_) spec_.layers.push_back(layer->spec());
  spec_.validate();
}

void SequentialNetwork::check_input(const Tensor& image) const {
  if (image.shape() != spec_.input_shape) {
    throw ShapeError("image shape " + shape_string(image.shape()) + " does not match model input " +
                     shape_string(spec_.input_shape));
  }
}

std::vector<Tensor> SequentialNetwork::forward_through(const Tensor& image, std::size_t last) const {
  check_input(image);
  std::vector<Tensor> outputs;
  outputs.reserve(last + 1);
  for (std::size_t i = 0; i <= last; ++i) {
    outputs.push_back(layers_[i]->forward(i == 0 ? image : outputs.back()));
  }
  return outputs;
}

double SequentialNetwork::unit_activation(const Tensor& image, const UnitAddress& unit) const {
  check_unit(spec_, unit);
  const std::size_t idx = *spec_.layer_index(unit.layer_id);
  auto outputs = forward_through(image, idx);
  return channel_mean(outputs.back(), unit.channel_index);
}

std::vector<double> SequentialNetwork::unit_activations(const Tensor& image,
                                                        std::span<const UnitAddress> units) const {
  std::size_t deepest = 0;
  std::vector<std::size_t> indices;
  indices.reserve(units.size());
  for (const auto& unit : units) {
    check_unit(spec_, unit);
    indices.push_back(*spec_.layer_index(unit.layer_id));
    deepest = std::max(deepest, indices.back());
  }
  std::vector<double> out;
  if (units.empty()) return out;
  auto outputs = forward_through(image, deepest);
  out.reserve(units.size());
  for (std::size_t u = 0; u < units.size(); ++u) {
    out.push_back(channel_mean(outputs[indices[u]], units[u].channel_index));
  }
  return out;
}

Tensor SequentialNetwork::feature_maps(const Tensor& image, const std::string& layer_id) const {
  const auto idx = spec_.layer_index(layer_id);
  if (!idx) throw AddressingError("model '" + spec_.model_id + "' has no layer '" + layer_id + "'");
  auto outputs = forward_through(image, *idx);
  return std::move(outputs.back());
}

GradientResult SequentialNetwork::input_gradient(std::span<const Tensor> batch, const UnitAddress& unit,
                                                 const LayerObjective& objective) const {
  check_unit(spec_, unit);
  if (batch.empty()) throw ShapeError("input_gradient needs a non-empty batch");
  const std::size_t idx = *spec_.layer_index(unit.layer_id);

  std::vector<std::vector<Tensor>> trace;
  trace.reserve(batch.size());
  std::vector<Tensor> maps;
  std::vector<Tensor> map_grads;
  for (const auto& image : batch) {
    trace.push_back(forward_through(image, idx));
    maps.push_back(trace.back().back());
    map_grads.emplace_back(maps.back().shape());
  }

  GradientResult result;
  result.objective = objective.evaluate(maps, map_grads);
  if (!std::isfinite(result.objective)) throw NumericError("non-finite objective");
  for (const auto& m : maps) result.activations.push_back(channel_mean(m, unit.channel_index));

  for (std::size_t b = 0; b < batch.size(); ++b) {
    Tensor grad = std::move(map_grads[b]);
    for (std::size_t i = idx + 1; i-- > 0;) {
      const Tensor& input = i == 0 ? batch[b] : trace[b][i - 1];
      grad = layers_[i]->backward(input, trace[b][i], grad);
    }
    if (!grad.all_finite()) throw NumericError("non-finite gradient for " + unit.to_string());
    result.gradients.push_back(std::move(grad));
  }
  return result;
}

}  // namespace imi
