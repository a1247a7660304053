#pragma once

#include <cstddef>
#include <optional>

namespace imi::analysis {

struct PowerParams {
  double effect_mean_diff = 0.1;
  double effect_sd = 0.15;
  double cohens_d = 0.67;
  double alpha = 0.01;  ///< per test, two-sided
  double power = 0.95;
  double are_correction = 0.955;
  double target_unit_sd = 0.1;
  std::size_t real_trials_per_session = 40;
  /// Replaces the formula's trials-per-unit value when set.
  std::optional<std::size_t> trials_per_unit_override = 30;
  /// Units actually recruited; defaults to units_required.
  std::optional<std::size_t> units_chosen = 84;

  void validate() const;
};

struct PowerResult {
  double t_test_n_per_group = 0.0;  ///< normal approximation, unrounded
  std::size_t units_required = 0;
  std::size_t trials_per_unit_formula = 0;
  std::size_t trials_per_unit = 0;
  std::size_t units_chosen = 0;
  std::size_t participants_required = 0;
};

/// n_t = 2 ((z_{1-alpha/2} + z_{power}) / d)^2 per group; units_required =
/// ceil(n_t / ARE); trials = ceil(0.25 / sd^2) unless overridden;
/// participants = ceil(units * trials / real_trials_per_session).
PowerResult power_analysis(const PowerParams& params);

}  // namespace imi::analysis
