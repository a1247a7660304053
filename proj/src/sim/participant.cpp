#include "imi/sim/participant.hpp"

#include <cmath>

#include <httplib.h>

#include "imi/common/random.hpp"

namespace imi::sim {

using nlohmann::json;

std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::none: return "none";
    case Violation::slow_reader: return "slow_reader";
    case Violation::catch_failer: return "catch_failer";
    case Violation::same_side: return "same_side";
    case Violation::too_fast: return "too_fast";
    case Violation::too_slow: return "too_slow";
    case Violation::triple_practice_failer: return "triple_practice_failer";
  }
  return "none";
}

Violation parse_violation(std::string_view text) {
  for (auto v : {Violation::none, Violation::slow_reader, Violation::catch_failer, Violation::same_side,
                 Violation::too_fast, Violation::too_slow, Violation::triple_practice_failer}) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown violation '" + std::string(text) + "'");
}

double ParticipantProfile::accuracy_for(stimuli::Condition c, stimuli::Difficulty d) const {
  if (const auto it = accuracy_by_difficulty.find(d); it != accuracy_by_difficulty.end()) return it->second;
  if (const auto it = accuracy_by_condition.find(c); it != accuracy_by_condition.end()) return it->second;
  return accuracy;
}

void ParticipantProfile::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0, 1]");
  };
  prob(accuracy, "accuracy");
  prob(catch_accuracy, "catch accuracy");
  for (const auto& [d, p] : accuracy_by_difficulty) prob(p, "difficulty accuracy");
  for (const auto& [c, p] : accuracy_by_condition) prob(p, "condition accuracy");
  for (const auto* dist : {&confidence.when_correct, &confidence.when_incorrect}) {
    double s = 0.0;
    for (double p : *dist) {
      prob(p, "confidence probability");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw ConfigError("confidence probabilities must sum to 1");
  }
  if (!(rt_log_sd >= 0.0) || !(gap_seconds >= 0.0) || !(instruction_seconds >= 0.0)) {
    throw ConfigError("timing parameters must be non-negative");
  }
}

ParticipantProfile make_profile(std::string participant_id, Violation violation, std::uint64_t seed,
                                double accuracy) {
  ParticipantProfile p;
  p.participant_id = std::move(participant_id);
  p.accuracy = accuracy;
  p.seed = seed;
  p.violation = violation;
  p.total_seconds = 300.0;
  switch (violation) {
    case Violation::none:
      break;
    case Violation::slow_reader:
      p.instruction_seconds = 10.0;
      break;
    case Violation::catch_failer:
      p.catch_correct_exact = 3;
      break;
    case Violation::same_side:
      p.always_top = true;
      break;
    case Violation::too_fast:
      p.instruction_seconds = 20.0;
      p.rt_log_mean = std::log(500.0);
      p.rt_log_sd = 0.2;
      p.gap_seconds = 0.2;
      p.total_seconds = 100.0;
      break;
    case Violation::too_slow:
      p.total_seconds = 3000.0;
      break;
    case Violation::triple_practice_failer:
      p.failed_practice_rounds = 3;
      break;
  }
  return p;
}

GroundTruth GroundTruth::from_manifest(const store::StimulusManifest& m) {
  GroundTruth g;
  auto url = [](const store::StimulusImage& i) { return "/stimuli/" + i.path; };
  for (const auto& e : m.entries) {
    g.positive_queries.insert(url(e.positive_query));
    g.negative_queries.insert(url(e.negative_query));
  }
  for (const auto* set : {&m.catch_trials, &m.practice_trials}) {
    for (const auto& t : *set) {
      g.positive_queries.insert(url(t.positive_query));
      g.negative_queries.insert(url(t.negative_query));
      if (set == &m.catch_trials) {
        g.catch_queries.insert(url(t.positive_query));
        g.catch_queries.insert(url(t.negative_query));
      }
    }
  }
  return g;
}

struct ServiceClient::Impl {
  httplib::Client http;
  std::string token;
  Impl(const std::string& host, int port, std::string t) : http(host, port), token(std::move(t)) {
    http.set_tcp_nodelay(true);
    http.set_keep_alive(true);
    http.set_connection_timeout(10);
    http.set_read_timeout(60);
  }
  httplib::Headers headers(bool admin) const {
    if (!admin) return {};
    return {{"Authorization", "Bearer " + token}};
  }
};

ServiceClient::ServiceClient(std::string host, int port, std::string admin_token)
    : impl_(std::make_unique<Impl>(host, port, std::move(admin_token))) {}

ServiceClient::~ServiceClient() = default;

namespace {

json decode(const httplib::Result& res, const std::string& what, int& status) {
  if (!res) throw IoError("request " + what + " failed: " + httplib::to_string(res.error()));
  status = res->status;
  json body = res->body.empty() ? json::object() : json::parse(res->body, nullptr, false);
  if (body.is_discarded()) body = json{{"error", "non_json"}, {"message", res->body}};
  if (status >= 300) {
    throw ServiceError(status, body.value("error", "error"), body.value("message", res->body));
  }
  return body;
}

}  // namespace

json ServiceClient::get(const std::string& path, int& status, bool admin) {
  return decode(impl_->http.Get(path, impl_->headers(admin)), "GET " + path, status);
}

json ServiceClient::post(const std::string& path, const json& body, int& status, bool admin) {
  return decode(impl_->http.Post(path, impl_->headers(admin), body.dump(), "application/json"), "POST " + path,
                status);
}

void ServiceClient::advance(const std::string& session_id, double seconds) {
  int status = 0;
  post("/admin/sessions/" + session_id + "/advance", json{{"seconds", seconds}}, status, true);
}

json ServiceClient::recruitment() {
  int status = 0;
  return get("/admin/recruitment", status, true);
}

SessionOutcome run_session(ServiceClient& client, const GroundTruth& truth, const service::ExperimentKey& key,
                           const ParticipantProfile& profile) {
  int status = 0;
  const json info = client.post("/sessions",
                                json{{"participant_id", profile.participant_id},
                                     {"model_id", key.model_id},
                                     {"condition", std::string(stimuli::to_string(key.condition))},
                                     {"difficulty", std::string(stimuli::to_string(key.difficulty))}},
                                status);
  return play_session(client, truth, key, profile, info.at("session_id").get<std::string>());
}

SessionOutcome play_session(ServiceClient& client, const GroundTruth& truth, const service::ExperimentKey& key,
                            const ParticipantProfile& profile, const std::string& session_id) {
  profile.validate();
  Rng rng(profile.seed);
  SessionOutcome out;
  out.session_id = session_id;
  out.participant_id = profile.participant_id;
  out.violation = profile.violation;
  int status = 0;
  double elapsed = 0.0;
  auto advance = [&](double seconds) {
    if (seconds <= 0.0) return;
    client.advance(session_id, seconds);
    elapsed += seconds;
  };

  advance(profile.instruction_seconds);
  std::size_t catch_seen = 0;
  bool practice_wrong_this_round = false;
  std::size_t last_round = 0;
  while (true) {
    const json trial = client.get("/sessions/" + session_id + "/trial", status);
    if (trial.at("status") == "complete") break;
    const std::string trial_id = trial.at("trial_id");
    const std::string phase = trial.at("phase");
    const std::string top = trial.at("queries").at("top");
    const std::string bottom = trial.at("queries").at("bottom");
    bool top_positive = false;
    if (truth.positive_queries.contains(top) && truth.negative_queries.contains(bottom)) {
      top_positive = true;
    } else if (!(truth.positive_queries.contains(bottom) && truth.negative_queries.contains(top))) {
      throw ValidationError("trial " + trial_id + " shows queries unknown to the stimulus manifest");
    }

    bool correct = true;
    if (phase == "practice") {
      const std::size_t round = trial.at("practice_round");
      if (round != last_round) {
        practice_wrong_this_round = false;
        last_round = round;
      }
      if (round < profile.failed_practice_rounds && !practice_wrong_this_round) {
        correct = false;
        practice_wrong_this_round = true;
      }
    } else if (truth.catch_queries.contains(top)) {
      if (profile.catch_correct_exact) {
        correct = catch_seen < *profile.catch_correct_exact;
      } else {
        correct = rng.bernoulli(profile.catch_accuracy);
      }
      ++catch_seen;
      ++out.catch_trials;
    } else {
      correct = rng.bernoulli(profile.accuracy_for(key.condition, key.difficulty));
      ++out.real_trials;
    }
    const double u = rng.uniform();
    const auto& dist = correct ? profile.confidence.when_correct : profile.confidence.when_incorrect;
    const int confidence = u < dist[0] ? 1 : (u < dist[0] + dist[1] ? 2 : 3);
    const double rt_ms = std::exp(profile.rt_log_mean + profile.rt_log_sd * rng.normal());

    bool choose_top = correct == top_positive;
    // The side bias shows on real trials only; practice and catch trials are
    // still answered as usual.
    if (profile.always_top && phase != "practice" && !truth.catch_queries.contains(top)) {
      choose_top = true;
      correct = top_positive;
    }
    if (phase != "practice" && !truth.catch_queries.contains(top) && correct) ++out.real_correct;

    advance(rt_ms / 1000.0);
    client.post("/sessions/" + session_id + "/responses",
                json{{"trial_id", trial_id},
                     {"choice", choose_top ? "top" : "bottom"},
                     {"confidence", confidence},
                     {"reaction_time_ms", rt_ms}},
                status);
    advance(profile.gap_seconds);
  }
  if (profile.total_seconds && *profile.total_seconds > elapsed) advance(*profile.total_seconds - elapsed);
  out.simulated_seconds = elapsed;
  out.quality = client.post("/sessions/" + session_id + "/finish", json::object(), status);
  out.passed = out.quality.at("passed").get<bool>();
  out.failed_checks = out.quality.at("failed_checks").get<std::vector<std::string>>();
  for (const auto& c : out.quality.at("checks")) {
    if (c.at("name") == "practice_attempts") out.practice_rounds = static_cast<std::size_t>(c.at("value").get<double>());
  }
  return out;
}

}  // namespace imi::sim
