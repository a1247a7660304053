#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imi/model/tensor.hpp"

namespace imi {

/// In-memory image collection, CHW tensors in [0, 1].
struct ImageDataset {
  std::string dataset_id;
  std::vector<std::string> image_ids;
  std::vector<Tensor> images;

  std::size_t size() const { return images.size(); }
  std::optional<std::size_t> index_of(const std::string& image_id) const;
};

/// Procedural 3x32x32 images (oriented gratings plus Gaussian colour blobs
/// over a tinted background). Ids are "img_00000", "img_00001", ...
ImageDataset make_toy_dataset(std::size_t count, std::uint64_t seed, std::string dataset_id = "toy");

/// Loads every *.png in `directory` (sorted by file name; id = file stem).
/// Unreadable files are collected and reported together in one IoError.
ImageDataset load_png_dataset(const std::filesystem::path& directory, std::string dataset_id);

void save_png_dataset(const ImageDataset& dataset, const std::filesystem::path& directory);

}  // namespace imi
