#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "imi/common/errors.hpp"
#include "imi/common/random.hpp"
#include "imi/service/catalog.hpp"
#include "imi/service/quality.hpp"
#include "imi/service/scheduler.hpp"
#include "imi/store/imi_format.hpp"

namespace imi::service {

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Participant already admitted to the requested experiment.
class RejectedError : public Error {
 public:
  using Error::Error;
};

/// Recruitment complete, or the session is already finished.
class ClosedError : public Error {
 public:
  using Error::Error;
};

/// Every open slot is held by sessions still in progress; retry later.
class BusyError : public Error {
 public:
  using Error::Error;
};

enum class SessionState { instructions, practice, main, finished };
std::string_view to_string(SessionState state);

enum class TrialKind { practice, real, catch_trial };

struct ServiceConfig {
  RecruitmentPlan plan;
  std::size_t catch_trials_per_session = 5;
  std::size_t practice_trials = 5;
  QualityThresholds thresholds;
  std::uint64_t seed = 0;
  std::string admin_token;
  /// Session clocks only move through advance_clock(); used by simulations.
  bool virtual_clock = false;
};

struct SessionInfo {
  std::string session_id;
  std::string participant_id;
  ExperimentKey key;
  SessionState state = SessionState::instructions;
  std::size_t practice_trials = 0;
  std::size_t main_trials = 0;
  std::string instruction_start;
};

/// What the client sees of a trial. Never contains the correct side.
struct TrialPayload {
  bool complete = false;  ///< every main trial answered; call finish
  std::string trial_id;
  std::string phase;      ///< "practice" or "main"
  std::size_t index = 0;  ///< position within the phase (round for practice)
  std::size_t total = 0;
  std::size_t practice_round = 0;
  std::vector<std::string> negative_references;  ///< URLs
  std::vector<std::string> positive_references;
  std::string top_query;
  std::string bottom_query;
};

struct ResponseSubmission {
  std::string trial_id;
  std::string choice;
  int confidence = 0;
  double reaction_time_ms = 0.0;
};

struct Feedback {
  std::string trial_id;
  bool correct = false;
  store::Side correct_side = store::Side::top;
  std::string phase;
  bool practice_round_complete = false;
  bool practice_passed = false;
  bool main_complete = false;
};

struct StoredResponse {
  std::string trial_id;
  TrialKind kind = TrialKind::real;
  std::size_t trial_index = 0;
  std::size_t unit = 0;
  std::size_t instance = 0;
  store::Side choice = store::Side::top;
  store::Side positive_side = store::Side::top;
  int confidence = 1;
  double reaction_time_ms = 0.0;
  bool correct = false;
  std::string timestamp;
};

struct SessionSnapshot {
  SessionInfo info;
  std::size_t practice_attempts = 0;
  double instruction_seconds = 0.0;
  std::vector<StoredResponse> responses;
  std::vector<SlotClaim> claims;
  std::optional<QualityReport> quality;
};

struct UnitLedger {
  UnitAddress unit;
  std::vector<std::size_t> committed;  ///< per active instance
  std::vector<std::size_t> pending;
  std::size_t distinct_participants = 0;
};

struct RecruitmentStatus {
  ExperimentKey key;
  std::size_t target_passing_sessions = 0;
  std::size_t passing_sessions = 0;
  std::size_t failed_sessions = 0;
  std::size_t active_sessions = 0;
  std::size_t open_slots = 0;
  std::size_t pending_slots = 0;
  std::size_t committed_slots = 0;
  bool complete = false;
  std::vector<UnitLedger> units;
};

/// In-process experiment server: one experiment per (model, condition,
/// difficulty) found in the manifest, each with its own scheduler. All
/// methods are thread-safe; requests for one session are serialised.
class ExperimentService {
 public:
  ExperimentService(store::StimulusManifest manifest, ServiceConfig config);
  ExperimentService(const ExperimentService&) = delete;
  ExperimentService& operator=(const ExperimentService&) = delete;

  SessionInfo create_session(const std::string& participant_id, const std::string& model_id,
                             stimuli::Condition condition, stimuli::Difficulty difficulty);
  TrialPayload next_trial(const std::string& session_id);
  Feedback submit_response(const std::string& session_id, const ResponseSubmission& submission);
  QualityReport finish(const std::string& session_id);
  /// Virtual-clock mode only.
  void advance_clock(const std::string& session_id, double seconds);

  SessionSnapshot session(const std::string& session_id) const;
  std::vector<RecruitmentStatus> recruitment_status() const;
  RecruitmentStatus recruitment_status(const ExperimentKey& key) const;
  bool all_complete() const;

  /// Real-trial responses of every finished session, ordered by experiment,
  /// session and trial. Failed sessions are included with their checks.
  std::vector<store::ImiResponseRecord> records() const;

  const store::StimulusManifest& manifest() const { return manifest_; }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Trial {
    std::string trial_id;
    TrialKind kind = TrialKind::real;
    std::size_t unit = 0;
    std::size_t instance = 0;
    std::size_t fixed = 0;  ///< index into the catch or practice set
    store::Side positive_side = store::Side::top;
  };

  struct LastResponse {
    ResponseSubmission submission;
    Feedback feedback;
  };

  struct Session {
    SessionInfo info;
    std::size_t ordinal = 0;
    bool other_participation = false;
    double virtual_elapsed = 0.0;
    double instruction_start = 0.0;
    double instruction_end = 0.0;
    double finish_time = 0.0;
    Rng rng{0};
    std::vector<Trial> practice_round;
    std::size_t practice_pos = 0;
    std::size_t practice_attempts = 0;
    bool practice_round_clean = true;
    std::vector<Trial> main;
    std::size_t main_pos = 0;
    std::vector<StoredResponse> responses;
    std::vector<SlotClaim> claims;
    std::optional<LastResponse> last;
    std::optional<QualityReport> quality;
    mutable std::mutex mutex;
  };

  struct Experiment {
    ExperimentStimuli stimuli;
    Scheduler scheduler;
    std::size_t passing = 0;
    std::size_t failed = 0;
    std::size_t active = 0;
  };

  double now(const Session& s) const;
  Session& find(const std::string& session_id) const;
  void start_practice_round(Session& s);
  const Trial& current_trial(const Session& s) const;
  TrialPayload payload(const Session& s, const Trial& trial) const;
  const store::StimulusEntry& entry_for(const Session& s, const Trial& trial) const;
  RecruitmentStatus status_locked(const Experiment& e) const;

  store::StimulusManifest manifest_;
  ServiceConfig config_;
  std::map<ExperimentKey, ExperimentStimuli> catalog_;

  mutable std::mutex admin_mutex_;  // experiments, registry, counters
  std::map<ExperimentKey, Experiment> experiments_;
  std::map<std::string, std::vector<ExperimentKey>> participation_;
  std::size_t next_ordinal_ = 0;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
};

std::string iso8601(double unix_seconds);

void to_json(nlohmann::json& j, const SessionInfo& v);
void to_json(nlohmann::json& j, const TrialPayload& v);
void to_json(nlohmann::json& j, const Feedback& v);
void to_json(nlohmann::json& j, const RecruitmentStatus& v);

}  // namespace imi::service
