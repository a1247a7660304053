#pragma once

#include <filesystem>

#include "imi/model/tensor.hpp"

namespace imi {

/// Writes a CHW tensor with values in [0, 1] as an 8-bit RGB (C=3) or
/// grayscale (C=1) PNG. Values are clamped and rounded.
void write_png(const Tensor& image, const std::filesystem::path& path);

/// Reads an 8-bit PNG into a CHW tensor in [0, 1]. Alpha is dropped and
/// palette / gray images are expanded to RGB.
Tensor read_png(const std::filesystem::path& path);

}  // namespace imi
