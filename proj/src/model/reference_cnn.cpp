#include "imi/model/reference_cnn.hpp"

#include <cmath>

#include "imi/common/errors.hpp"
#include "imi/common/random.hpp"

namespace imi {
namespace {

std::vector<double> draw(Rng& rng, std::size_t count, double lo, double hi) {
  std::vector<double> v(count);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

Conv2d make_conv(Rng& rng, const std::string& id, const Shape& in, std::size_t out_channels,
                 std::size_t kernel, std::size_t stride, std::size_t padding) {
  LayerSpec spec;
  spec.id = id;
  spec.kind = LayerKind::convolution;
  spec.channel_count = out_channels;
  spec.kernel_size = kernel;
  spec.stride = stride;
  spec.padding = padding;
  if (in[1] + 2 * padding < kernel || in[2] + 2 * padding < kernel) {
    throw ConfigError("layer '" + id + "': kernel larger than padded input");
  }
  spec.output_shape = {out_channels, (in[1] + 2 * padding - kernel) / stride + 1,
                       (in[2] + 2 * padding - kernel) / stride + 1};
  const double fan_in = static_cast<double>(in[0] * kernel * kernel);
  const double bound = std::sqrt(6.0 / fan_in);
  auto weights = draw(rng, out_channels * in[0] * kernel * kernel, -bound, bound);
  auto bias = draw(rng, out_channels, -0.1, 0.1);
  return Conv2d(spec, in[0], std::move(weights), std::move(bias));
}

}  // namespace

std::unique_ptr<SequentialNetwork> build_network(std::string model_id, Shape input_shape,
                                                 const std::vector<LayerBlueprint>& blueprint,
                                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::unique_ptr<Layer>> layers;
  Shape current = input_shape;
  for (const auto& bp : blueprint) {
    LayerSpec spec;
    spec.id = bp.id;
    spec.kind = bp.kind;
    switch (bp.kind) {
      case LayerKind::convolution: {
        auto conv = make_conv(rng, bp.id, current, bp.channels, bp.kernel, bp.stride, bp.padding);
        current = conv.spec().output_shape;
        layers.push_back(std::make_unique<Conv2d>(std::move(conv)));
        break;
      }
      case LayerKind::normalization: {
        const std::size_t c = current[0];
        spec.channel_count = c;
        spec.output_shape = current;
        auto gamma = draw(rng, c, 0.5, 1.5);
        auto beta = draw(rng, c, -0.2, 0.2);
        auto mean = draw(rng, c, -0.1, 0.1);
        auto var = draw(rng, c, 0.5, 1.5);
        layers.push_back(std::make_unique<Normalization>(spec, gamma, beta, mean, var));
        break;
      }
      case LayerKind::relu:
        spec.channel_count = current[0];
        spec.output_shape = current;
        layers.push_back(std::make_unique<Relu>(spec));
        break;
      case LayerKind::pooling:
        spec.channel_count = current[0];
        spec.kernel_size = bp.kernel;
        spec.stride = bp.stride;
        if (current[1] < bp.kernel || current[2] < bp.kernel || bp.stride == 0) {
          throw ConfigError("layer '" + bp.id + "': invalid pooling geometry");
        }
        spec.output_shape = {current[0], (current[1] - bp.kernel) / bp.stride + 1,
                             (current[2] - bp.kernel) / bp.stride + 1};
        current = spec.output_shape;
        layers.push_back(std::make_unique<MaxPool>(spec));
        break;
      case LayerKind::skip_block_output: {
        const std::size_t pad = bp.kernel / 2;
        auto branch = make_conv(rng, bp.id + "/branch", current, current[0], bp.kernel, 1, pad);
        spec.channel_count = current[0];
        spec.kernel_size = bp.kernel;
        spec.padding = pad;
        spec.output_shape = current;
        layers.push_back(std::make_unique<SkipBlock>(spec, std::move(branch)));
        break;
      }
      case LayerKind::dense: {
        const std::size_t in_features = shape_size(current);
        spec.channel_count = bp.channels;
        spec.output_shape = {bp.channels, 1, 1};
        const double bound = std::sqrt(6.0 / static_cast<double>(in_features));
        auto weights = draw(rng, bp.channels * in_features, -bound, bound);
        auto bias = draw(rng, bp.channels, -0.1, 0.1);
        layers.push_back(std::make_unique<Dense>(spec, in_features, std::move(weights), std::move(bias)));
        current = spec.output_shape;
        break;
      }
    }
  }
  return std::make_unique<SequentialNetwork>(std::move(model_id), std::move(input_shape),
                                             std::move(layers));
}

std::vector<LayerBlueprint> reference_cnn_blueprint() {
  using K = LayerKind;
  return {
      {"conv1", K::convolution, 8, 3, 1, 1},  {"norm1", K::normalization},
      {"relu1", K::relu},                     {"pool1", K::pooling, 0, 2, 2, 0},
      {"conv2", K::convolution, 16, 3, 1, 1}, {"norm2", K::normalization},
      {"relu2", K::relu},                     {"pool2", K::pooling, 0, 2, 2, 0},
      {"conv3", K::convolution, 32, 3, 1, 1}, {"norm3", K::normalization},
      {"relu3", K::relu},                     {"pool3", K::pooling, 0, 2, 2, 0},
      {"fc", K::dense, 10},
  };
}

std::unique_ptr<SequentialNetwork> make_reference_cnn(std::uint64_t seed) {
  return build_network(kReferenceModelId, {3, 32, 32}, reference_cnn_blueprint(), seed);
}

}  // namespace imi
