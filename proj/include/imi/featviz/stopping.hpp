#pragma once

#include <cstddef>
#include <vector>

namespace imi::featviz {

/// Adaptive halting on the gradient-magnitude trajectory.
///
/// Each recorded magnitude is smoothed with a trailing moving average of
/// `window` steps. Once at least `min_steps` steps have run and two full
/// windows of smoothed values exist, optimisation halts at the first step
/// where the mean smoothed magnitude over the latest window is >= the mean
/// over the window before it.
class PlateauStopper {
 public:
  PlateauStopper(std::size_t min_steps, std::size_t window);

  /// Records one step; returns true when optimisation should stop now.
  bool record(double magnitude);

  std::size_t steps() const { return raw_.size(); }
  const std::vector<double>& raw() const { return raw_; }
  const std::vector<double>& smoothed() const { return smoothed_; }

 private:
  double window_mean(const std::vector<double>& values, std::size_t end) const;

  std::size_t min_steps_;
  std::size_t window_;
  std::vector<double> raw_;
  std::vector<double> smoothed_;  // entry k smooths raw_[k .. k + window)
};

}  // namespace imi::featviz
