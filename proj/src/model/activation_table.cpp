#include "imi/model/activation_table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "imi/common/errors.hpp"
#include "imi/model/json_io.hpp"

namespace imi {

void to_json(nlohmann::json& j, const UnitAddress& unit) {
  j = nlohmann::json{{"model_id", unit.model_id},
                     {"layer_id", unit.layer_id},
                     {"channel_index", unit.channel_index}};
}

void from_json(const nlohmann::json& j, UnitAddress& unit) {
  j.at("model_id").get_to(unit.model_id);
  j.at("layer_id").get_to(unit.layer_id);
  j.at("channel_index").get_to(unit.channel_index);
}

void to_json(nlohmann::json& j, const LayerSpec& layer) {
  j = nlohmann::json{{"id", layer.id},
                     {"kind", std::string(to_string(layer.kind))},
                     {"channel_count", layer.channel_count},
                     {"kernel_size", layer.kernel_size},
                     {"stride", layer.stride},
                     {"padding", layer.padding},
                     {"output_shape", layer.output_shape}};
}

void from_json(const nlohmann::json& j, LayerSpec& layer) {
  j.at("id").get_to(layer.id);
  layer.kind = parse_layer_kind(j.at("kind").get<std::string>());
  j.at("channel_count").get_to(layer.channel_count);
  layer.kernel_size = j.value("kernel_size", std::size_t{0});
  layer.stride = j.value("stride", std::size_t{1});
  layer.padding = j.value("padding", std::size_t{0});
  j.at("output_shape").get_to(layer.output_shape);
}

void to_json(nlohmann::json& j, const ModelSpec& spec) {
  j = nlohmann::json{{"model_id", spec.model_id}, {"input_shape", spec.input_shape}, {"layers", spec.layers}};
}

void from_json(const nlohmann::json& j, ModelSpec& spec) {
  j.at("model_id").get_to(spec.model_id);
  j.at("input_shape").get_to(spec.input_shape);
  j.at("layers").get_to(spec.layers);
}

std::size_t ActivationTable::unit_index(const UnitAddress& unit) const {
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (units[u] == unit) return u;
  }
  throw AddressingError("unit " + unit.to_string() + " not in activation table '" + dataset_id + "'");
}

std::vector<double> ActivationTable::column(std::size_t unit) const {
  std::vector<double> col(image_ids.size());
  for (std::size_t i = 0; i < image_ids.size(); ++i) col[i] = at(i, unit);
  return col;
}

void ActivationTable::validate() const {
  if (activations.size() != image_ids.size() * units.size()) {
    throw ValidationError("activation table '" + dataset_id + "' has " + std::to_string(activations.size()) +
                          " entries for " + std::to_string(image_ids.size()) + " images x " +
                          std::to_string(units.size()) + " units");
  }
  for (std::size_t i = 0; i < activations.size(); ++i) {
    if (!std::isfinite(activations[i])) {
      throw ValidationError("activation table '" + dataset_id + "' has a non-finite entry for image " +
                            image_ids[i / units.size()]);
    }
  }
}

ActivationTable ActivationTable::sorted_by_image_id() const {
  std::vector<std::size_t> order(image_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return image_ids[a] < image_ids[b]; });
  ActivationTable out;
  out.dataset_id = dataset_id;
  out.units = units;
  out.activations.reserve(activations.size());
  for (std::size_t i : order) {
    out.image_ids.push_back(image_ids[i]);
    for (std::size_t u = 0; u < units.size(); ++u) out.activations.push_back(at(i, u));
  }
  return out;
}

ActivationTable record_activation_table(const Backend& backend, const ImageDataset& dataset,
                                        const std::vector<UnitAddress>& units) {
  if (dataset.size() == 0) throw ConfigError("cannot record activations over an empty dataset");
  if (units.empty()) throw ConfigError("cannot record activations for an empty unit list");
  ActivationTable table;
  table.dataset_id = dataset.dataset_id;
  table.image_ids = dataset.image_ids;
  table.units = units;
  table.activations.reserve(dataset.size() * units.size());
  std::string failures;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    try {
      auto row = backend.unit_activations(dataset.images[i], units);
      table.activations.insert(table.activations.end(), row.begin(), row.end());
    } catch (const ShapeError& e) {
      failures += "\n  " + dataset.image_ids[i] + ": " + e.what();
      table.activations.insert(table.activations.end(), units.size(), 0.0);
    } catch (const NumericError& e) {
      failures += "\n  " + dataset.image_ids[i] + ": " + e.what();
      table.activations.insert(table.activations.end(), units.size(), 0.0);
    }
  }
  if (!failures.empty()) throw IoError("activation recording failed for images:" + failures);
  return table;
}

void write_activation_csv(const ActivationTable& table, std::ostream& out) {
  table.validate();
  out << table.dataset_id << ',' << table.unit_count() << ',' << table.image_count() << '\n';
  char buf[40];
  for (std::size_t i = 0; i < table.image_count(); ++i) {
    out << table.image_ids[i];
    for (std::size_t u = 0; u < table.unit_count(); ++u) {
      std::snprintf(buf, sizeof buf, "%.17g", table.at(i, u));
      out << ',' << buf;
    }
    out << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::size_t parse_count(const std::string& text, const char* what) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(what);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError(std::string("activation CSV header: bad ") + what + " '" + text + "'");
  }
}

}  // namespace

ActivationTable read_activation_csv(std::istream& in, std::vector<UnitAddress> units) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("activation CSV is empty");
  auto header = split_csv(line);
  if (header.size() != 3) throw ValidationError("activation CSV header must have 3 fields");
  ActivationTable table;
  table.dataset_id = header[0];
  const std::size_t unit_count = parse_count(header[1], "unit_count");
  const std::size_t image_count = parse_count(header[2], "image_count");
  if (unit_count != units.size()) {
    throw ValidationError("activation CSV declares " + std::to_string(unit_count) +
                          " units but the sidecar lists " + std::to_string(units.size()));
  }
  table.units = std::move(units);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (fields.size() != unit_count + 1) {
      throw ValidationError("activation CSV line " + std::to_string(line_no) + ": expected " +
                            std::to_string(unit_count + 1) + " fields");
    }
    table.image_ids.push_back(fields[0]);
    for (std::size_t u = 0; u < unit_count; ++u) {
      char* end = nullptr;
      const double v = std::strtod(fields[u + 1].c_str(), &end);
      if (end == fields[u + 1].c_str() || *end != '\0') {
        throw ValidationError("activation CSV line " + std::to_string(line_no) + ": bad number '" +
                              fields[u + 1] + "'");
      }
      table.activations.push_back(v);
    }
  }
  if (table.image_ids.size() != image_count) {
    throw ValidationError("activation CSV declares " + std::to_string(image_count) + " images but has " +
                          std::to_string(table.image_ids.size()));
  }
  table.validate();
  return table;
}

void write_units_manifest(const std::string& dataset_id, const std::vector<UnitAddress>& units,
                          const std::filesystem::path& path) {
  nlohmann::json j{{"imi_version", 1}, {"dataset_id", dataset_id}, {"units", units}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<UnitAddress> read_units_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    auto j = nlohmann::json::parse(in);
    return j.at("units").get<std::vector<UnitAddress>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("units manifest " + path.string() + ": " + e.what());
  }
}

void save_activation_table(const ActivationTable& table, const std::filesystem::path& csv_path,
                           const std::filesystem::path& units_path) {
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + csv_path.string());
  write_activation_csv(table, out);
  write_units_manifest(table.dataset_id, table.units, units_path);
}

ActivationTable load_activation_table(const std::filesystem::path& csv_path,
                                      const std::filesystem::path& units_path) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + csv_path.string());
  return read_activation_csv(in, read_units_manifest(units_path));
}

}  // namespace imi
