#include "imi/sim/campaign.hpp"

#include <cstdio>
#include <exception>
#include <thread>

#include "imi/common/random.hpp"

namespace imi::sim {

using nlohmann::json;

namespace {

bool experiment_complete(const json& status, const service::ExperimentKey& key) {
  for (const auto& e : status.at("experiments")) {
    if (e.at("model_id") == key.model_id && e.at("condition") == stimuli::to_string(key.condition) &&
        e.at("difficulty") == stimuli::to_string(key.difficulty)) {
      return e.at("complete").get<bool>();
    }
  }
  throw ValidationError("service does not run experiment " + key.to_string());
}

}  // namespace

CampaignResult run_campaign(ServiceClient& admin, const std::string& host, int port, const std::string& admin_token,
                            const GroundTruth& truth, const CampaignConfig& config) {
  if (config.wave_size == 0) throw ConfigError("wave size must be positive");
  if (!(config.failure_rate >= 0.0 && config.failure_rate < 1.0)) throw ConfigError("failure rate must lie in [0, 1)");
  if (config.failure_rate > 0.0 && config.injected_violations.empty()) {
    throw ConfigError("failure injection needs at least one violation");
  }
  CampaignResult result;
  std::size_t participant_counter = 0;
  std::size_t violation_cursor = 0;

  for (const auto& key : config.experiments) {
    while (!experiment_complete(admin.recruitment(), key)) {
      if (result.sessions.size() >= config.max_sessions) {
        throw StateError("campaign stopped after " + std::to_string(config.max_sessions) + " sessions");
      }
      struct Admitted {
        ParticipantProfile profile;
        std::string session_id;
      };
      std::vector<Admitted> wave;
      for (std::size_t w = 0; w < config.wave_size; ++w) {
        const std::size_t k = participant_counter;
        ParticipantProfile profile = config.base;
        char id[64];
        std::snprintf(id, sizeof id, "%s%06zu", config.participant_prefix.c_str(), k);
        profile.participant_id = id;
        const std::uint64_t seed = derive_seed(config.seed, k);
        Rng pick(derive_seed(seed, 7));
        Violation v = Violation::none;
        if (config.failure_rate > 0.0 && pick.bernoulli(config.failure_rate)) {
          v = config.injected_violations[violation_cursor % config.injected_violations.size()];
        }
        if (v != Violation::none) {
          ParticipantProfile shaped = make_profile(profile.participant_id, v, seed, profile.accuracy);
          // Keep the campaign's accuracy model; take only the violation's behaviour.
          shaped.accuracy_by_difficulty = profile.accuracy_by_difficulty;
          shaped.accuracy_by_condition = profile.accuracy_by_condition;
          shaped.confidence = profile.confidence;
          profile = shaped;
        }
        profile.seed = seed;
        profile.violation = v;
        int status = 0;
        try {
          const json info = admin.post("/sessions",
                                       json{{"participant_id", profile.participant_id},
                                            {"model_id", key.model_id},
                                            {"condition", std::string(stimuli::to_string(key.condition))},
                                            {"difficulty", std::string(stimuli::to_string(key.difficulty))}},
                                       status);
          wave.push_back({profile, info.at("session_id").get<std::string>()});
          ++participant_counter;
          if (v != Violation::none) ++violation_cursor;
        } catch (const ServiceError& e) {
          if (e.status == 503 || e.status == 410) break;
          throw;
        }
      }
      if (wave.empty()) {
        throw StateError("no session could be admitted for " + key.to_string() + " while recruitment is incomplete");
      }

      std::vector<SessionOutcome> outcomes(wave.size());
      std::vector<std::exception_ptr> errors(wave.size());
      auto play = [&](std::size_t i) {
        try {
          ServiceClient client(host, port, admin_token);
          outcomes[i] = play_session(client, truth, key, wave[i].profile, wave[i].session_id);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      };
      if (config.concurrent && wave.size() > 1) {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < wave.size(); ++i) threads.emplace_back(play, i);
        for (auto& t : threads) t.join();
      } else {
        for (std::size_t i = 0; i < wave.size(); ++i) play(i);
      }
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
      for (auto& o : outcomes) {
        if (o.passed) {
          ++result.passing;
        } else {
          ++result.failed;
        }
        if (o.violation != Violation::none) {
          ++result.injected_failures;
          result.injected_real_trials += o.real_trials;
        }
        result.sessions.push_back(std::move(o));
      }
    }
  }
  result.final_status = admin.recruitment();
  return result;
}

}  // namespace imi::sim
