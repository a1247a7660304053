#pragma once

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "imi/common/errors.hpp"
#include "imi/service/catalog.hpp"
#include "imi/store/imi_format.hpp"

namespace imi::sim {

enum class Violation { none, slow_reader, catch_failer, same_side, too_fast, too_slow, triple_practice_failer };
std::string_view to_string(Violation v);
Violation parse_violation(std::string_view text);

/// Confidence distribution over {1, 2, 3}, conditional on the response
/// being correct or not.
struct ConfidenceModel {
  std::array<double, 3> when_correct{0.15, 0.35, 0.50};
  std::array<double, 3> when_incorrect{0.50, 0.35, 0.15};
};

struct ParticipantProfile {
  std::string participant_id;
  /// Accuracy on real trials, per difficulty; `accuracy` is the fallback.
  double accuracy = 0.8;
  std::map<stimuli::Difficulty, double> accuracy_by_difficulty;
  std::map<stimuli::Condition, double> accuracy_by_condition;
  double catch_accuracy = 1.0;
  /// Exactly this many catch trials answered correctly (the first ones).
  std::optional<std::size_t> catch_correct_exact;
  ConfidenceModel confidence;
  /// Reaction times are log-normal in milliseconds.
  double rt_log_mean = 7.6;  // median ~2 s
  double rt_log_sd = 0.35;
  double gap_seconds = 1.0;   ///< time between a response and the next trial
  double instruction_seconds = 30.0;
  std::size_t failed_practice_rounds = 0;
  bool always_top = false;
  /// The session clock is padded up to this many seconds before finishing
  /// (never shortened).
  std::optional<double> total_seconds = 300.0;
  Violation violation = Violation::none;
  std::uint64_t seed = 0;

  double accuracy_for(stimuli::Condition c, stimuli::Difficulty d) const;
  void validate() const;
};

/// Compliant profile with the behaviour of `violation` applied on top.
ParticipantProfile make_profile(std::string participant_id, Violation violation, std::uint64_t seed,
                                double accuracy = 0.8);

/// Ground truth for simulated decisions, derived from the stimulus
/// manifest: which query URLs are positive, and which belong to catch trials.
struct GroundTruth {
  std::set<std::string> positive_queries;
  std::set<std::string> negative_queries;
  std::set<std::string> catch_queries;

  static GroundTruth from_manifest(const store::StimulusManifest& manifest);
};

/// Thin HTTP client for the experiment API. Non-2xx answers raise
/// ServiceError carrying the status and the server's message.
class ServiceClient {
 public:
  ServiceClient(std::string host, int port, std::string admin_token = {});
  ~ServiceClient();

  nlohmann::json get(const std::string& path, int& status, bool admin = false);
  nlohmann::json post(const std::string& path, const nlohmann::json& body, int& status, bool admin = false);
  void advance(const std::string& session_id, double seconds);
  nlohmann::json recruitment();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

class ServiceError : public Error {
 public:
  ServiceError(int status, std::string kind, const std::string& message)
      : Error("HTTP " + std::to_string(status) + " " + kind + ": " + message), status(status), kind(std::move(kind)) {}
  int status;
  std::string kind;
};

struct SessionOutcome {
  std::string session_id;
  std::string participant_id;
  Violation violation = Violation::none;
  bool passed = false;
  std::vector<std::string> failed_checks;
  std::size_t real_trials = 0;
  std::size_t catch_trials = 0;
  std::size_t real_correct = 0;
  std::size_t practice_rounds = 0;
  double simulated_seconds = 0.0;
  nlohmann::json quality;
};

/// Plays one complete session through the public API (virtual-clock
/// service required). Service errors propagate unchanged.
SessionOutcome run_session(ServiceClient& client, const GroundTruth& truth, const service::ExperimentKey& key,
                           const ParticipantProfile& profile);

/// Plays a session that was already admitted.
SessionOutcome play_session(ServiceClient& client, const GroundTruth& truth, const service::ExperimentKey& key,
                            const ParticipantProfile& profile, const std::string& session_id);

}  // namespace imi::sim
