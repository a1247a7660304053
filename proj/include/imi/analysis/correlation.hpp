#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imi/analysis/scores.hpp"

namespace imi::analysis {

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;  ///< two-sided
  std::size_t n = 0;
  bool exact = false;    ///< p from full permutation enumeration
  bool defined = true;   ///< false when either input is constant
};

/// Rank correlation with average ranks for ties. n <= 10 enumerates all n!
/// permutations for p; larger n uses the t approximation with n - 2
/// degrees of freedom.
SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson correlation (helper; NaN when a variance is zero).
double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct LayerPoint {
  std::string layer_id;
  double position = 0.0;  ///< index among eligible layers / (count - 1)
  double mean_score = 0.0;
  std::size_t n_units = 0;
};

struct LayerPositionResult {
  std::string model_id;
  std::vector<LayerPoint> layers;
  std::optional<SpearmanResult> correlation;  ///< empty when fewer than 3 layers
  std::string note;
};

/// Per-layer mean scores against relative depth, one result per model in
/// the scores. `eligible_layers` fixes the ordering.
std::vector<LayerPositionResult> layer_position_analysis(const std::vector<UnitScore>& scores,
                                                         const std::vector<std::string>& eligible_layers);

struct PairedCorrelation {
  std::string group;
  std::vector<std::string> labels;
  std::vector<double> x;
  std::vector<double> y;
  std::optional<SpearmanResult> correlation;
  std::string note;
};

/// Spearman over per-unit (natural, synthetic) scores matched by unit, per
/// model.
std::vector<PairedCorrelation> cross_condition_correlation(const std::vector<UnitScore>& natural,
                                                           const std::vector<UnitScore>& synthetic);

/// Model-mean interpretability against an external per-model metric.
PairedCorrelation score_vs_metric(const std::map<std::string, double>& model_scores,
                                  const std::map<std::string, double>& metric);

}  // namespace imi::analysis
