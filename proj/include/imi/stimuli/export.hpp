#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "imi/model/dataset.hpp"
#include "imi/stimuli/types.hpp"

namespace imi::stimuli {

/// Human-readable key of one stimulus slot, e.g.
/// "refcnn.conv2.3/natural/pos-query/2".
std::string stimulus_key(const UnitAddress& unit, Condition condition, std::string_view role,
                         std::size_t rank);

/// Opaque relative file path for a stimulus key ("3f/3f9c...e1.png"). File
/// names must not reveal which query is the positive one, so they are
/// derived from a salted hash of the key.
std::string stimulus_path(std::string_view salt, std::string_view key);

/// Writes dataset image `image_id` to root/relative_path unless it exists.
void export_image(const ImageDataset& dataset, const std::string& image_id,
                  const std::filesystem::path& root, const std::string& relative_path);

}  // namespace imi::stimuli
