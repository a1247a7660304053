#include "imi/model/file_backend.hpp"

#include <fstream>

#include "imi/common/errors.hpp"
#include "imi/model/json_io.hpp"

namespace imi {

FileBackend::FileBackend(ModelSpec spec, ActivationTable table)
    : spec_(std::move(spec)), table_(std::move(table)) {
  table_.validate();
  for (const auto& unit : table_.units) check_unit(spec_, unit);
}

FileBackend FileBackend::load(const std::filesystem::path& model_json, const std::filesystem::path& csv,
                              const std::filesystem::path& units_json) {
  std::ifstream in(model_json, std::ios::binary);
  if (!in) throw IoError("cannot read " + model_json.string());
  ModelSpec spec;
  try {
    spec = nlohmann::json::parse(in).get<ModelSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model spec " + model_json.string() + ": " + e.what());
  }
  return FileBackend(std::move(spec), load_activation_table(csv, units_json));
}

Tensor FileBackend::image_token(const std::string& image_id) const {
  for (std::size_t i = 0; i < table_.image_ids.size(); ++i) {
    if (table_.image_ids[i] == image_id) return Tensor({1, 1, 1}, static_cast<double>(i));
  }
  throw AddressingError("image '" + image_id + "' not in imported table");
}

double FileBackend::unit_activation(const Tensor& image, const UnitAddress& unit) const {
  if (image.shape() != Shape{1, 1, 1}) {
    throw ShapeError("file backend evaluates image tokens only; pixel inputs need a live model");
  }
  const auto row = static_cast<std::size_t>(image[0]);
  if (row >= table_.image_count()) throw AddressingError("image token out of range");
  return table_.at(row, table_.unit_index(unit));
}

Tensor FileBackend::feature_maps(const Tensor&, const std::string& layer_id) const {
  throw ConfigError("file backend stores no feature maps (layer '" + layer_id + "')");
}

GradientResult FileBackend::input_gradient(std::span<const Tensor>, const UnitAddress& unit,
                                           const LayerObjective&) const {
  throw ConfigError("file backend is not differentiable; cannot synthesize for " + unit.to_string());
}

}  // namespace imi
