#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "imi/model/backend.hpp"
#include "imi/model/dataset.hpp"

namespace imi {

/// Per (image, unit) activations, row-major image x unit.
struct ActivationTable {
  std::string dataset_id;
  std::vector<std::string> image_ids;
  std::vector<UnitAddress> units;
  std::vector<double> activations;

  std::size_t image_count() const { return image_ids.size(); }
  std::size_t unit_count() const { return units.size(); }

  double at(std::size_t image, std::size_t unit) const {
    return activations[image * units.size() + unit];
  }
  /// Throws AddressingError when the unit is not in the table.
  std::size_t unit_index(const UnitAddress& unit) const;
  std::vector<double> column(std::size_t unit) const;
  std::vector<double> column(const UnitAddress& unit) const { return column(unit_index(unit)); }

  /// Throws ValidationError on dimension mismatch or non-finite entries.
  void validate() const;

  /// Same table with rows ordered by ascending image id.
  ActivationTable sorted_by_image_id() const;
};

/// Entry (i, u) equals backend.unit_activation(image_i, u).
ActivationTable record_activation_table(const Backend& backend, const ImageDataset& dataset,
                                        const std::vector<UnitAddress>& units);

/// CSV format: a header row "dataset_id,unit_count,image_count" holding
/// those three values, then "image_id,act_1,...,act_U" per image with
/// activations printed to 17 significant digits. Units live in a sidecar.
void write_activation_csv(const ActivationTable& table, std::ostream& out);
ActivationTable read_activation_csv(std::istream& in, std::vector<UnitAddress> units);

/// Unit-list sidecar (units.json): {"imi_version":1,"dataset_id":...,"units":[...]}.
void write_units_manifest(const std::string& dataset_id, const std::vector<UnitAddress>& units,
                          const std::filesystem::path& path);
std::vector<UnitAddress> read_units_manifest(const std::filesystem::path& path);

void save_activation_table(const ActivationTable& table, const std::filesystem::path& csv_path,
                           const std::filesystem::path& units_path);
ActivationTable load_activation_table(const std::filesystem::path& csv_path,
                                      const std::filesystem::path& units_path);

}  // namespace imi
