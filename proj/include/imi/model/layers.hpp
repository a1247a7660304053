#pragma once

#include <memory>
#include <vector>

#include "imi/model/model_spec.hpp"
#include "imi/model/tensor.hpp"

namespace imi {

/// A differentiable layer. Layers are immutable after construction;
/// forward/backward allocate their outputs, so one layer may serve many
/// threads at once.
class Layer {
 public:
  explicit Layer(LayerSpec spec) : spec_(std::move(spec)) {}
  virtual ~Layer() = default;

  const LayerSpec& spec() const { return spec_; }

  virtual Tensor forward(const Tensor& input) const = 0;

  /// Vector-Jacobian product: gradient with respect to `input` given the
  /// forward pair (input, output) and the gradient flowing into `output`.
  virtual Tensor backward(const Tensor& input, const Tensor& output,
                          const Tensor& grad_output) const = 0;

 protected:
  LayerSpec spec_;
};

/// 2-D convolution; weights laid out [out][in][ky][kx].
class Conv2d : public Layer {
 public:
  Conv2d(LayerSpec spec, std::size_t in_channels, std::vector<double> weights,
         std::vector<double> bias);
  Tensor forward(const Tensor& input) const override;
  Tensor backward(const Tensor& input, const Tensor& output,
                  const Tensor& grad_output) const override;

  std::size_t in_channels() const { return in_channels_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  double weight(std::size_t oc, std::size_t ic, std::size_t ky, std::size_t kx) const {
    const std::size_t k = spec_.kernel_size;
    return weights_[((oc * in_channels_ + ic) * k + ky) * k + kx];
  }
  Tensor forward_strided(const Tensor& input) const;
  Tensor backward_strided(const Tensor& input, const Tensor& grad_output) const;

  std::size_t in_channels_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// Inference-mode normalization: y = gamma * (x - mean) / sqrt(var + eps) + beta,
/// per channel.
class Normalization : public Layer {
 public:
  Normalization(LayerSpec spec, std::vector<double> gamma, std::vector<double> beta,
                std::vector<double> mean, std::vector<double> variance, double eps = 1e-5);
  Tensor forward(const Tensor& input) const override;
  Tensor backward(const Tensor& input, const Tensor& output,
                  const Tensor& grad_output) const override;

  double scale(std::size_t c) const { return scale_[c]; }
  double shift(std::size_t c) const { return shift_[c]; }

 private:
  std::vector<double> scale_;
  std::vector<double> shift_;
};

class Relu : public Layer {
 public:
  using Layer::Layer;
  Tensor forward(const Tensor& input) const override;
  Tensor backward(const Tensor& input, const Tensor& output,
                  const Tensor& grad_output) const override;
};

/// Max pooling; the gradient goes to the first maximum in scan order.
class MaxPool : public Layer {
 public:
  using Layer::Layer;
  Tensor forward(const Tensor& input) const override;
  Tensor backward(const Tensor& input, const Tensor& output,
                  const Tensor& grad_output) const override;
};

/// Residual block output: y = x + conv(x), with a shape-preserving conv.
class SkipBlock : public Layer {
 public:
  SkipBlock(LayerSpec spec, Conv2d branch);
  Tensor forward(const Tensor& input) const override;
  Tensor backward(const Tensor& input, const Tensor& output,
                  const Tensor& grad_output) const override;

  const Conv2d& branch() const { return branch_; }

 private:
  Conv2d branch_;
};

/// Fully connected layer over the flattened input; weights [out][in].
class Dense : public Layer {
 public:
  Dense(LayerSpec spec, std::size_t in_features, std::vector<double> weights,
        std::vector<double> bias);
  Tensor forward(const Tensor& input) const override;
  Tensor backward(const Tensor& input, const Tensor& output,
                  const Tensor& grad_output) const override;

  std::size_t in_features() const { return in_features_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

 private:
  std::size_t in_features_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

}  // namespace imi
