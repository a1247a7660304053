#include "imi/model/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "imi/common/errors.hpp"
#include "imi/common/png_io.hpp"
#include "imi/common/random.hpp"

namespace imi {

std::optional<std::size_t> ImageDataset::index_of(const std::string& image_id) const {
  for (std::size_t i = 0; i < image_ids.size(); ++i) {
    if (image_ids[i] == image_id) return i;
  }
  return std::nullopt;
}

ImageDataset make_toy_dataset(std::size_t count, std::uint64_t seed, std::string dataset_id) {
  constexpr std::size_t kSide = 32;
  ImageDataset ds;
  ds.dataset_id = std::move(dataset_id);
  ds.images.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    Rng rng(derive_seed(seed, n));
    Tensor img({3, kSide, kSide});
    double background[3];
    for (double& b : background) b = rng.uniform(0.2, 0.8);

    struct Grating {
      double fx, fy, phase, amp[3];
    };
    std::vector<Grating> gratings(1 + rng.below(2));
    for (auto& g : gratings) {
      const double theta = rng.uniform(0.0, std::numbers::pi);
      const double freq = rng.uniform(0.05, 0.35);
      g.fx = freq * std::cos(theta);
      g.fy = freq * std::sin(theta);
      g.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (double& a : g.amp) a = rng.uniform(-0.25, 0.25);
    }
    struct Blob {
      double cx, cy, sigma, amp[3];
    };
    std::vector<Blob> blobs(rng.below(4));
    for (auto& b : blobs) {
      b.cx = rng.uniform(0.0, kSide);
      b.cy = rng.uniform(0.0, kSide);
      b.sigma = rng.uniform(1.5, 6.0);
      for (double& a : b.amp) a = rng.uniform(-0.5, 0.5);
    }
    for (std::size_t y = 0; y < kSide; ++y) {
      for (std::size_t x = 0; x < kSide; ++x) {
        for (std::size_t c = 0; c < 3; ++c) {
          double v = background[c];
          for (const auto& g : gratings) {
            v += g.amp[c] * std::sin(2.0 * std::numbers::pi * (g.fx * x + g.fy * y) + g.phase);
          }
          for (const auto& b : blobs) {
            const double dx = x - b.cx, dy = y - b.cy;
            v += b.amp[c] * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
          }
          v += 0.02 * rng.normal();
          img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
        }
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "img_%05zu", n);
    ds.image_ids.emplace_back(id);
    ds.images.push_back(std::move(img));
  }
  return ds;
}

ImageDataset load_png_dataset(const std::filesystem::path& directory, std::string dataset_id) {
  if (!std::filesystem::is_directory(directory)) {
    throw IoError("dataset directory " + directory.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ImageDataset ds;
  ds.dataset_id = std::move(dataset_id);
  std::string failures;
  for (const auto& file : files) {
    try {
      ds.images.push_back(read_png(file));
      ds.image_ids.push_back(file.stem().string());
    } catch (const Error& e) {
      failures += "\n  " + file.stem().string() + ": " + e.what();
    }
  }
  if (!failures.empty()) throw IoError("failed to read dataset images:" + failures);
  return ds;
}

void save_png_dataset(const ImageDataset& dataset, const std::filesystem::path& directory) {
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    write_png(dataset.images[i], directory / (dataset.image_ids[i] + ".png"));
  }
}

}  // namespace imi
