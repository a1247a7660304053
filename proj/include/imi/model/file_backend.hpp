#pragma once

#include <filesystem>

#include "imi/model/activation_table.hpp"
#include "imi/model/backend.hpp"

namespace imi {

/// Backend for models evaluated elsewhere: activations come from an
/// imported ActivationTable, so only the natural condition is available.
/// unit_activation takes an image produced by image_token() rather than
/// pixel data.
class FileBackend : public Backend {
 public:
  FileBackend(ModelSpec spec, ActivationTable table);

  /// Loads model.json (ModelSpec), activations.csv and units.json.
  static FileBackend load(const std::filesystem::path& model_json, const std::filesystem::path& csv,
                          const std::filesystem::path& units_json);

  const ModelSpec& spec() const override { return spec_; }
  bool differentiable() const override { return false; }

  /// Looks up the table row whose index is encoded by image_token().
  double unit_activation(const Tensor& image, const UnitAddress& unit) const override;
  Tensor feature_maps(const Tensor& image, const std::string& layer_id) const override;
  using Backend::input_gradient;
  GradientResult input_gradient(std::span<const Tensor> batch, const UnitAddress& unit,
                                const LayerObjective& objective) const override;

  const ActivationTable& table() const { return table_; }

  /// A 1x1x1 tensor carrying the row index of an image id.
  Tensor image_token(const std::string& image_id) const;

 private:
  ModelSpec spec_;
  ActivationTable table_;
};

}  // namespace imi
