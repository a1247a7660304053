#pragma once

#include <span>

#include "imi/model/backend.hpp"

namespace imi::featviz {

/// 1 + mean pairwise cosine similarity of the flattened layer activations
/// of a batch, so the value lies in [0, 2]. A pair containing a zero-norm
/// vector contributes similarity 0. Requires at least two maps.
double diversity_penalty(std::span<const Tensor> maps);

/// Same value; also adds weight * d(penalty)/d(map) into `grads`.
double diversity_penalty(std::span<const Tensor> maps, std::span<Tensor> grads, double weight);

/// sign * mean activation - lambda * diversity_penalty. The penalty is
/// dropped for single-image batches.
class DiversityObjective : public LayerObjective {
 public:
  DiversityObjective(std::size_t channel, double sign, double lambda)
      : activation_(channel, sign), lambda_(lambda) {}
  double evaluate(std::span<const Tensor> maps, std::span<Tensor> grads) const override;

 private:
  ActivationObjective activation_;
  double lambda_;
};

}  // namespace imi::featviz
