#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace imi::service {

struct QualityThresholds {
  std::size_t max_practice_attempts = 3;
  double min_instruction_seconds = 15.0;
  std::size_t min_catch_correct = 4;
  double min_total_seconds = 135.0;
  double max_total_seconds = 2500.0;
  double max_same_side_fraction = 0.90;
};

/// Measured behaviour of one finished session.
struct QualityInputs {
  std::size_t practice_attempts = 0;
  double instruction_seconds = 0.0;
  std::size_t catch_correct = 0;
  std::size_t catch_total = 0;
  double total_seconds = 0.0;
  /// Share of the more frequent side over the real trials.
  double same_side_fraction = 0.0;
  bool unique_participation = true;
};

struct QualityCheck {
  std::string name;
  double value = 0.0;
  std::string criterion;
  bool passed = false;
};

struct QualityReport {
  std::vector<QualityCheck> checks;
  bool passed = false;

  std::vector<std::string> failed_checks() const;
};

inline constexpr const char* kCheckPractice = "practice_attempts";
inline constexpr const char* kCheckInstructions = "instruction_seconds";
inline constexpr const char* kCheckCatch = "catch_correct";
inline constexpr const char* kCheckDuration = "total_seconds";
inline constexpr const char* kCheckSameSide = "same_side_fraction";
inline constexpr const char* kCheckUnique = "unique_participation";

QualityReport evaluate_quality(const QualityInputs& inputs, const QualityThresholds& thresholds = {});

void to_json(nlohmann::json& j, const QualityReport& report);

}  // namespace imi::service
