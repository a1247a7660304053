#pragma once

#include <functional>
#include <string>
#include <vector>

#include "imi/sim/participant.hpp"

namespace imi::sim {

struct CampaignConfig {
  std::vector<service::ExperimentKey> experiments;
  /// Sessions admitted together and then played concurrently.
  std::size_t wave_size = 9;
  std::uint64_t seed = 0;
  /// Share of participants who receive a quality violation.
  double failure_rate = 0.0;
  /// Violations handed out, in turn, to failing participants.
  std::vector<Violation> injected_violations = {Violation::slow_reader, Violation::catch_failer,
                                                Violation::same_side,   Violation::too_fast,
                                                Violation::too_slow,    Violation::triple_practice_failer};
  /// Template for every participant; id, seed and violation are overwritten.
  ParticipantProfile base;
  std::string participant_prefix = "w";
  bool concurrent = true;
  /// Safety stop against configurations that can never complete.
  std::size_t max_sessions = 100000;
};

struct CampaignResult {
  std::vector<SessionOutcome> sessions;
  std::size_t passing = 0;
  std::size_t failed = 0;
  std::size_t injected_failures = 0;
  /// Real-trial responses given by participants with injected violations.
  std::size_t injected_real_trials = 0;
  nlohmann::json final_status;
};

/// Recruits simulated participants wave by wave until the service reports
/// every listed experiment complete. Given the service seed and this seed
/// the whole campaign is reproducible: admissions within a wave are
/// sequential and only the trial play is concurrent.
CampaignResult run_campaign(ServiceClient& admin, const std::string& host, int port, const std::string& admin_token,
                            const GroundTruth& truth, const CampaignConfig& config);

}  // namespace imi::sim
