#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imi/model/model_spec.hpp"

namespace imi::stimuli {

enum class Condition { natural, synthetic };
enum class Difficulty { easy, medium, hard, very_hard };

std::string_view to_string(Condition condition);
std::string_view to_string(Difficulty difficulty);
Condition parse_condition(std::string_view text);
/// Accepts "very_hard" and "very-hard".
Difficulty parse_difficulty(std::string_view text);

/// Where the query images come from. Empty percentile = the extremes used
/// by the easy level.
struct DifficultyLevel {
  Difficulty name = Difficulty::easy;
  std::optional<double> query_percentile;
};

/// easy = extreme, medium = 99th, hard = 95th, very hard = 85th percentile.
DifficultyLevel difficulty_level(Difficulty difficulty);

struct ExemplarSelection {
  UnitAddress unit;
  std::size_t t = 0;
  /// Descending activation.
  std::vector<std::string> pos_reference_candidates;
  std::vector<std::string> pos_queries;
  /// Ascending activation.
  std::vector<std::string> neg_reference_candidates;
  std::vector<std::string> neg_queries;
};

/// One 2-AFC item.
struct TrialInstance {
  UnitAddress unit;
  Condition condition = Condition::natural;
  Difficulty difficulty = Difficulty::easy;
  std::vector<std::string> pos_references;
  std::vector<std::string> neg_references;
  std::string pos_query;
  std::string neg_query;
  std::size_t instance_index = 0;
};

inline constexpr std::size_t kReferencesPerSide = 9;

}  // namespace imi::stimuli
