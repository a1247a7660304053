#include "imi/service/quality.hpp"

#include <sstream>

namespace imi::service {

std::vector<std::string> QualityReport::failed_checks() const {
  std::vector<std::string> out;
  for (const auto& c : checks) {
    if (!c.passed) out.push_back(c.name);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

QualityReport evaluate_quality(const QualityInputs& in, const QualityThresholds& th) {
  QualityReport r;
  r.checks.push_back({kCheckPractice, static_cast<double>(in.practice_attempts),
                      "<= " + std::to_string(th.max_practice_attempts),
                      in.practice_attempts <= th.max_practice_attempts});
  r.checks.push_back({kCheckInstructions, in.instruction_seconds, ">= " + fmt(th.min_instruction_seconds),
                      in.instruction_seconds >= th.min_instruction_seconds});
  r.checks.push_back({kCheckCatch, static_cast<double>(in.catch_correct),
                      ">= " + std::to_string(th.min_catch_correct) + " of " + std::to_string(in.catch_total),
                      in.catch_correct >= th.min_catch_correct});
  r.checks.push_back({kCheckDuration, in.total_seconds,
                      "in [" + fmt(th.min_total_seconds) + ", " + fmt(th.max_total_seconds) + "]",
                      in.total_seconds >= th.min_total_seconds && in.total_seconds <= th.max_total_seconds});
  r.checks.push_back({kCheckSameSide, in.same_side_fraction, "<= " + fmt(th.max_same_side_fraction),
                      in.same_side_fraction <= th.max_same_side_fraction});
  r.checks.push_back({kCheckUnique, in.unique_participation ? 1.0 : 0.0, "no other participation",
                      in.unique_participation});
  r.passed = true;
  for (const auto& c : r.checks) r.passed = r.passed && c.passed;
  return r;
}

void to_json(nlohmann::json& j, const QualityReport& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"value", c.value}, {"criterion", c.criterion}, {"passed", c.passed}});
  }
  j = nlohmann::json{{"passed", report.passed}, {"checks", checks}, {"failed_checks", report.failed_checks()}};
}

}  // namespace imi::service
