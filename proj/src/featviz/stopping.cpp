#include "imi/featviz/stopping.hpp"

#include "imi/common/errors.hpp"

namespace imi::featviz {

PlateauStopper::PlateauStopper(std::size_t min_steps, std::size_t window)
    : min_steps_(min_steps), window_(window) {
  if (window_ == 0) throw ConfigError("stopping window must be positive");
}

double PlateauStopper::window_mean(const std::vector<double>& values, std::size_t end) const {
  double sum = 0.0;
  for (std::size_t i = end - window_; i < end; ++i) sum += values[i];
  return sum / static_cast<double>(window_);
}

bool PlateauStopper::record(double magnitude) {
  raw_.push_back(magnitude);
  if (raw_.size() >= window_) smoothed_.push_back(window_mean(raw_, raw_.size()));
  if (raw_.size() < min_steps_ || smoothed_.size() < 2 * window_) return false;
  const std::size_t n = smoothed_.size();
  return window_mean(smoothed_, n) >= window_mean(smoothed_, n - window_);
}

}  // namespace imi::featviz
