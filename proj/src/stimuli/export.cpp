#include "imi/stimuli/export.hpp"

#include "imi/common/errors.hpp"
#include "imi/common/png_io.hpp"
#include "imi/common/sha256.hpp"

namespace imi::stimuli {

std::string stimulus_key(const UnitAddress& unit, Condition condition, std::string_view role,
                         std::size_t rank) {
  return unit.to_string() + "/" + std::string(to_string(condition)) + "/" + std::string(role) + "/" +
         std::to_string(rank);
}

std::string stimulus_path(std::string_view salt, std::string_view key) {
  const std::string digest = sha256_hex(std::string(salt) + "\n" + std::string(key)).substr(0, 20);
  return digest.substr(0, 2) + "/" + digest + ".png";
}

void export_image(const ImageDataset& dataset, const std::string& image_id,
                  const std::filesystem::path& root, const std::string& relative_path) {
  const auto target = root / relative_path;
  if (std::filesystem::exists(target)) return;
  const auto idx = dataset.index_of(image_id);
  if (!idx) throw ValidationError("image '" + image_id + "' is not part of dataset '" + dataset.dataset_id + "'");
  write_png(dataset.images[*idx], target);
}

}  // namespace imi::stimuli
