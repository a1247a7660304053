#pragma once

#include <map>
#include <vector>

#include "imi/store/imi_format.hpp"

namespace imi::analysis {

struct UnitScore {
  UnitAddress unit;
  stimuli::Condition condition = stimuli::Condition::natural;
  stimuli::Difficulty difficulty = stimuli::Difficulty::easy;
  double proportion_correct = 0.0;
  std::size_t n_responses = 0;
  std::size_t n_correct = 0;
};

/// Proportion correct per (unit, condition, difficulty), sorted by that key.
std::vector<UnitScore> unit_scores(const std::vector<store::ImiResponseRecord>& records);

/// Scores restricted to one condition and difficulty.
std::vector<UnitScore> select_scores(const std::vector<UnitScore>& scores, stimuli::Condition condition,
                                     stimuli::Difficulty difficulty);

std::vector<double> score_values(const std::vector<UnitScore>& scores);

/// Scores grouped by model id.
std::map<std::string, std::vector<double>> scores_by_model(const std::vector<UnitScore>& scores);

}  // namespace imi::analysis
