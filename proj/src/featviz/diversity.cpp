#include "imi/featviz/diversity.hpp"

#include <cmath>
#include <vector>

#include "imi/common/errors.hpp"
#include "imi/kernels/kernels.hpp"

namespace imi::featviz {
namespace {

double penalty_impl(std::span<const Tensor> maps, std::span<Tensor>* grads, double weight) {
  const std::size_t n = maps.size();
  if (n < 2) throw ConfigError("diversity penalty needs a batch of at least two images");
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (maps[i].size() != maps[0].size()) throw ShapeError("diversity penalty: maps differ in size");
    norms[i] = std::sqrt(kernels::sum_squares(maps[i].values()));
  }
  const double pairs = static_cast<double>(n * (n - 1) / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (norms[i] == 0.0 || norms[j] == 0.0) continue;
      const double inv = 1.0 / (norms[i] * norms[j]);
      const double cosine = kernels::dot(maps[i].values(), maps[j].values()) * inv;
      total += cosine;
      if (grads) {
        // d cos / d a = b / (|a||b|) - cos * a / |a|^2
        const double scale = weight / pairs;
        auto gi = (*grads)[i].values();
        auto gj = (*grads)[j].values();
        kernels::axpy(scale * inv, maps[j].values(), gi);
        kernels::axpy(-scale * cosine / (norms[i] * norms[i]), maps[i].values(), gi);
        kernels::axpy(scale * inv, maps[i].values(), gj);
        kernels::axpy(-scale * cosine / (norms[j] * norms[j]), maps[j].values(), gj);
      }
    }
  }
  return 1.0 + total / pairs;
}

}  // namespace

double diversity_penalty(std::span<const Tensor> maps) { return penalty_impl(maps, nullptr, 0.0); }

double diversity_penalty(std::span<const Tensor> maps, std::span<Tensor> grads, double weight) {
  return penalty_impl(maps, &grads, weight);
}

double DiversityObjective::evaluate(std::span<const Tensor> maps, std::span<Tensor> grads) const {
  double value = activation_.evaluate(maps, grads);
  if (lambda_ != 0.0 && maps.size() >= 2) value -= lambda_ * diversity_penalty(maps, grads, -lambda_);
  return value;
}

}  // namespace imi::featviz
