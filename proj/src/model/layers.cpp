#include "imi/model/layers.hpp"

#include <algorithm>
#include <cmath>

#include "imi/common/errors.hpp"
#include "imi/kernels/kernels.hpp"

namespace imi {
namespace {

void expect_shape(const Tensor& t, const Shape& shape, const std::string& who) {
  if (t.shape() != shape) {
    throw ShapeError(who + ": expected " + shape_string(shape) + ", got " + shape_string(t.shape()));
  }
}

}  // namespace

// --- Conv2d -----------------------------------------------------------------

Conv2d::Conv2d(LayerSpec spec, std::size_t in_channels, std::vector<double> weights,
               std::vector<double> bias)
    : Layer(std::move(spec)), in_channels_(in_channels), weights_(std::move(weights)),
      bias_(std::move(bias)) {
  const std::size_t k = spec_.kernel_size;
  if (weights_.size() != spec_.channel_count * in_channels_ * k * k ||
      bias_.size() != spec_.channel_count) {
    throw ShapeError("conv '" + spec_.id + "': parameter count mismatch");
  }
}

Tensor Conv2d::forward(const Tensor& input) const {
  if (input.rank() != 3 || input.shape()[0] != in_channels_) {
    throw ShapeError("conv '" + spec_.id + "': bad input " + shape_string(input.shape()));
  }
  if (spec_.stride != 1) return forward_strided(input);

  const std::size_t in_h = input.shape()[1], in_w = input.shape()[2];
  const std::size_t k = spec_.kernel_size, pad = spec_.padding;
  const std::size_t out_h = in_h + 2 * pad - k + 1, out_w = in_w + 2 * pad - k + 1;
  Tensor out({spec_.channel_count, out_h, out_w});

  for (std::size_t oc = 0; oc < spec_.channel_count; ++oc) {
    auto plane = out.channel(oc);
    std::fill(plane.begin(), plane.end(), bias_[oc]);
    for (std::size_t ic = 0; ic < in_channels_; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double w = weight(oc, ic, ky, kx);
          // Output columns whose input column ox + kx - pad lies inside the image.
          const std::size_t x_lo = kx < pad ? pad - kx : 0;
          const std::size_t x_hi = std::min(out_w, in_w + pad - kx);
          if (x_lo >= x_hi) continue;
          const std::size_t len = x_hi - x_lo;
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
            const double* src = &input.at(ic, static_cast<std::size_t>(iy), x_lo + kx - pad);
            double* dst = &out.at(oc, oy, x_lo);
            kernels::axpy(w, {src, len}, {dst, len});
          }
        }
      }
    }
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& input, const Tensor& output, const Tensor& grad_output) const {
  expect_shape(grad_output, output.shape(), "conv '" + spec_.id + "' backward");
  if (spec_.stride != 1) return backward_strided(input, grad_output);

  const std::size_t in_h = input.shape()[1], in_w = input.shape()[2];
  const std::size_t k = spec_.kernel_size, pad = spec_.padding;
  const std::size_t out_h = grad_output.shape()[1], out_w = grad_output.shape()[2];
  Tensor grad_in(input.shape());

  for (std::size_t oc = 0; oc < spec_.channel_count; ++oc) {
    for (std::size_t ic = 0; ic < in_channels_; ++ic) {
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const double w = weight(oc, ic, ky, kx);
          const std::size_t x_lo = kx < pad ? pad - kx : 0;
          const std::size_t x_hi = std::min(out_w, in_w + pad - kx);
          if (x_lo >= x_hi) continue;
          const std::size_t len = x_hi - x_lo;
          for (std::size_t oy = 0; oy < out_h; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
            const double* src = &grad_output.at(oc, oy, x_lo);
            double* dst = &grad_in.at(ic, static_cast<std::size_t>(iy), x_lo + kx - pad);
            kernels::axpy(w, {src, len}, {dst, len});
          }
        }
      }
    }
  }
  return grad_in;
}

Tensor Conv2d::forward_strided(const Tensor& input) const {
  const std::size_t in_h = input.shape()[1], in_w = input.shape()[2];
  const std::size_t k = spec_.kernel_size, s = spec_.stride, pad = spec_.padding;
  const std::size_t out_h = (in_h + 2 * pad - k) / s + 1, out_w = (in_w + 2 * pad - k) / s + 1;
  Tensor out({spec_.channel_count, out_h, out_w});
  for (std::size_t oc = 0; oc < spec_.channel_count; ++oc) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double acc = bias_[oc];
        for (std::size_t ic = 0; ic < in_channels_; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
              acc += weight(oc, ic, ky, kx) * input.at(ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
            }
          }
        }
        out.at(oc, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor Conv2d::backward_strided(const Tensor& input, const Tensor& grad_output) const {
  const std::size_t in_h = input.shape()[1], in_w = input.shape()[2];
  const std::size_t k = spec_.kernel_size, s = spec_.stride, pad = spec_.padding;
  const std::size_t out_h = grad_output.shape()[1], out_w = grad_output.shape()[2];
  Tensor grad_in(input.shape());
  for (std::size_t oc = 0; oc < spec_.channel_count; ++oc) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const double g = grad_output.at(oc, oy, ox);
        for (std::size_t ic = 0; ic < in_channels_; ++ic) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kx) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
              grad_in.at(ic, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix)) += weight(oc, ic, ky, kx) * g;
            }
          }
        }
      }
    }
  }
  return grad_in;
}

// --- Normalization ----------------------------------------------------------

Normalization::Normalization(LayerSpec spec, std::vector<double> gamma, std::vector<double> beta,
                             std::vector<double> mean, std::vector<double> variance, double eps)
    : Layer(std::move(spec)) {
  const std::size_t c = spec_.channel_count;
  if (gamma.size() != c || beta.size() != c || mean.size() != c || variance.size() != c) {
    throw ShapeError("normalization '" + spec_.id + "': parameter count mismatch");
  }
  scale_.resize(c);
  shift_.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    scale_[i] = gamma[i] / std::sqrt(variance[i] + eps);
    shift_[i] = beta[i] - mean[i] * scale_[i];
  }
}

Tensor Normalization::forward(const Tensor& input) const {
  if (input.rank() != 3 || input.shape()[0] != spec_.channel_count) {
    throw ShapeError("normalization '" + spec_.id + "': bad input " + shape_string(input.shape()));
  }
  Tensor out(input.shape());
  for (std::size_t c = 0; c < spec_.channel_count; ++c) {
    auto src = input.channel(c);
    auto dst = out.channel(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = scale_[c] * src[i] + shift_[c];
  }
  return out;
}

Tensor Normalization::backward(const Tensor& input, const Tensor&, const Tensor& grad_output) const {
  expect_shape(grad_output, input.shape(), "normalization '" + spec_.id + "' backward");
  Tensor grad_in(input.shape());
  for (std::size_t c = 0; c < spec_.channel_count; ++c) {
    kernels::axpy(scale_[c], grad_output.channel(c), grad_in.channel(c));
  }
  return grad_in;
}

// --- Relu -------------------------------------------------------------------

Tensor Relu::forward(const Tensor& input) const {
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

Tensor Relu::backward(const Tensor& input, const Tensor&, const Tensor& grad_output) const {
  expect_shape(grad_output, input.shape(), "relu '" + spec_.id + "' backward");
  Tensor grad_in(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) grad_in[i] = input[i] > 0.0 ? grad_output[i] : 0.0;
  return grad_in;
}

// --- MaxPool ----------------------------------------------------------------

Tensor MaxPool::forward(const Tensor& input) const {
  const std::size_t channels = input.shape()[0], in_h = input.shape()[1], in_w = input.shape()[2];
  const std::size_t k = spec_.kernel_size, s = spec_.stride;
  const std::size_t out_h = (in_h - k) / s + 1, out_w = (in_w - k) / s + 1;
  Tensor out({channels, out_h, out_w});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        double best = input.at(c, oy * s, ox * s);
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            best = std::max(best, input.at(c, oy * s + ky, ox * s + kx));
          }
        }
        out.at(c, oy, ox) = best;
      }
    }
  }
  return out;
}

Tensor MaxPool::backward(const Tensor& input, const Tensor& output, const Tensor& grad_output) const {
  expect_shape(grad_output, output.shape(), "pool '" + spec_.id + "' backward");
  const std::size_t channels = input.shape()[0];
  const std::size_t k = spec_.kernel_size, s = spec_.stride;
  const std::size_t out_h = output.shape()[1], out_w = output.shape()[2];
  Tensor grad_in(input.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        std::size_t by = oy * s, bx = ox * s;
        double best = input.at(c, by, bx);
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double v = input.at(c, oy * s + ky, ox * s + kx);
            if (v > best) {
              best = v;
              by = oy * s + ky;
              bx = ox * s + kx;
            }
          }
        }
        grad_in.at(c, by, bx) += grad_output.at(c, oy, ox);
      }
    }
  }
  return grad_in;
}

// --- SkipBlock --------------------------------------------------------------

SkipBlock::SkipBlock(LayerSpec spec, Conv2d branch) : Layer(std::move(spec)), branch_(std::move(branch)) {
  if (branch_.spec().output_shape != spec_.output_shape) {
    throw ShapeError("skip block '" + spec_.id + "': branch must preserve shape");
  }
}

Tensor SkipBlock::forward(const Tensor& input) const {
  Tensor out = branch_.forward(input);
  kernels::axpy(1.0, input.values(), out.values());
  return out;
}

Tensor SkipBlock::backward(const Tensor& input, const Tensor& output, const Tensor& grad_output) const {
  Tensor grad_in = branch_.backward(input, output, grad_output);
  kernels::axpy(1.0, grad_output.values(), grad_in.values());
  return grad_in;
}

// --- Dense ------------------------------------------------------------------

Dense::Dense(LayerSpec spec, std::size_t in_features, std::vector<double> weights,
             std::vector<double> bias)
    : Layer(std::move(spec)), in_features_(in_features), weights_(std::move(weights)),
      bias_(std::move(bias)) {
  if (weights_.size() != spec_.channel_count * in_features_ || bias_.size() != spec_.channel_count) {
    throw ShapeError("dense '" + spec_.id + "': parameter count mismatch");
  }
}

Tensor Dense::forward(const Tensor& input) const {
  if (input.size() != in_features_) {
    throw ShapeError("dense '" + spec_.id + "': expected " + std::to_string(in_features_) +
                     " inputs, got " + std::to_string(input.size()));
  }
  Tensor out({spec_.channel_count, 1, 1});
  for (std::size_t j = 0; j < spec_.channel_count; ++j) {
    out[j] = bias_[j] + kernels::dot({weights_.data() + j * in_features_, in_features_}, input.values());
  }
  return out;
}

Tensor Dense::backward(const Tensor& input, const Tensor&, const Tensor& grad_output) const {
  Tensor grad_in(input.shape());
  for (std::size_t j = 0; j < spec_.channel_count; ++j) {
    if (grad_output[j] == 0.0) continue;
    kernels::axpy(grad_output[j], {weights_.data() + j * in_features_, in_features_}, grad_in.values());
  }
  return grad_in;
}

}  // namespace imi
