#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imi/analysis/correlation.hpp"
#include "imi/analysis/scores.hpp"

namespace imi::analysis {

inline constexpr std::size_t kDifficultyCount = 4;

struct DifficultyRow {
  UnitAddress unit;
  stimuli::Condition condition = stimuli::Condition::natural;
  /// Indexed by Difficulty; empty where the level was not measured at all.
  std::array<std::optional<double>, kDifficultyCount> scores;
  std::optional<double> gap_easy_medium;
  std::optional<double> gap_easy_hard;
  /// Scores strictly decrease across the measured levels (easy first).
  bool strictly_decreasing = false;
};

struct DifficultyReport {
  std::vector<DifficultyRow> rows;
  std::array<std::optional<double>, kDifficultyCount> level_means;
  std::vector<stimuli::Difficulty> levels;  ///< measured levels, easiest first
  double fraction_strictly_decreasing = 0.0;
  std::optional<SpearmanResult> gap_vs_easy;  ///< easy - hardest gap against the easy score
  std::vector<std::string> warnings;
};

/// Per-unit score tuples across difficulty levels for one condition. Units
/// missing a level measured for other units are excluded with a warning.
DifficultyReport difficulty_analysis(const std::vector<UnitScore>& scores, stimuli::Condition condition);

struct ConfidenceLevel {
  int confidence = 0;
  std::size_t count = 0;
  std::optional<double> proportion_correct;  ///< empty when count == 0
};

struct ConfidenceSplit {
  std::string model_id;
  stimuli::Condition condition = stimuli::Condition::natural;
  std::array<ConfidenceLevel, 3> levels;
};

/// Proportion correct per confidence rating, per (model, condition).
std::vector<ConfidenceSplit> confidence_split(const std::vector<store::ImiResponseRecord>& records);

}  // namespace imi::analysis
