#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "imi/model/network.hpp"

namespace imi {

inline constexpr const char* kReferenceModelId = "refcnn";

/// Architecture description used to instantiate a SequentialNetwork with
/// seeded weights. `channels` is ignored for shape-preserving kinds.
struct LayerBlueprint {
  std::string id;
  LayerKind kind = LayerKind::convolution;
  std::size_t channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
};

/// Builds a network whose parameters are drawn in layer order from
/// Rng(seed):
///   convolution / skip branch: weights U(-b, b), b = sqrt(6 / fan_in),
///                              [out][in][ky][kx] order, then bias U(-0.1, 0.1)
///   normalization: gamma U(0.5, 1.5), beta U(-0.2, 0.2), mean U(-0.1, 0.1),
///                  variance U(0.5, 1.5), each drawn per channel in that order
///   dense: weights U(-b, b) [out][in], then bias U(-0.1, 0.1)
std::unique_ptr<SequentialNetwork> build_network(std::string model_id, Shape input_shape,
                                                 const std::vector<LayerBlueprint>& layers,
                                                 std::uint64_t seed);

/// Three conv -> norm -> relu -> 2x2 max-pool blocks (8, 16, 32 channels)
/// and a 10-way dense head over a 3x32x32 input.
std::vector<LayerBlueprint> reference_cnn_blueprint();

std::unique_ptr<SequentialNetwork> make_reference_cnn(std::uint64_t seed = 0);

}  // namespace imi
