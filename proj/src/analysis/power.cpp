#include "imi/analysis/power.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "imi/common/errors.hpp"

namespace imi::analysis {

void PowerParams::validate() const {
  if (!(cohens_d > 0.0)) throw ConfigError("Cohen's d must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (!(power > 0.0 && power < 1.0)) throw ConfigError("power must lie in (0, 1)");
  if (!(are_correction > 0.0 && are_correction <= 1.0)) throw ConfigError("ARE correction must lie in (0, 1]");
  if (!(target_unit_sd > 0.0)) throw ConfigError("target unit sd must be positive");
  if (real_trials_per_session == 0) throw ConfigError("real trials per session must be positive");
  if (effect_sd > 0.0 && std::fabs(effect_mean_diff / effect_sd - cohens_d) > 0.01) {
    throw ConfigError("cohens_d disagrees with effect_mean_diff / effect_sd");
  }
}

PowerResult power_analysis(const PowerParams& p) {
  p.validate();
  const boost::math::normal z;
  const double za = boost::math::quantile(z, 1.0 - p.alpha / 2.0);
  const double zb = boost::math::quantile(z, p.power);
  PowerResult r;
  r.t_test_n_per_group = 2.0 * std::pow((za + zb) / p.cohens_d, 2.0);
  r.units_required = static_cast<std::size_t>(std::ceil(r.t_test_n_per_group / p.are_correction));
  r.trials_per_unit_formula =
      static_cast<std::size_t>(std::ceil(0.25 / (p.target_unit_sd * p.target_unit_sd) - 1e-9));
  r.trials_per_unit = p.trials_per_unit_override.value_or(r.trials_per_unit_formula);
  r.units_chosen = p.units_chosen.value_or(r.units_required);
  const std::size_t total = r.units_chosen * r.trials_per_unit;
  r.participants_required = (total + p.real_trials_per_session - 1) / p.real_trials_per_session;
  return r;
}

}  // namespace imi::analysis
