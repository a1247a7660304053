#include "imi/service/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>

namespace imi::service {

namespace {

constexpr double kVirtualEpoch = 1577836800.0;  // 2020-01-01T00:00:00Z

std::string url(const std::string& path) { return "/stimuli/" + path; }

std::vector<std::string> urls(const std::vector<store::StimulusImage>& images) {
  std::vector<std::string> out;
  for (const auto& i : images) out.push_back(url(i.path));
  return out;
}

/// Half the positions top, half bottom (the odd one out decided by a coin),
/// in random order.
std::vector<store::Side> balanced_sides(std::size_t n, Rng& rng) {
  std::vector<store::Side> sides(n, store::Side::bottom);
  std::size_t tops = n / 2;
  if (n % 2 == 1 && rng.bernoulli(0.5)) ++tops;
  std::fill(sides.begin(), sides.begin() + static_cast<std::ptrdiff_t>(tops), store::Side::top);
  rng.shuffle(sides);
  return sides;
}

}  // namespace

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::instructions: return "instructions";
    case SessionState::practice: return "practice";
    case SessionState::main: return "main";
    case SessionState::finished: return "finished";
  }
  return "unknown";
}

std::string iso8601(double unix_seconds) {
  const auto whole = static_cast<std::time_t>(std::floor(unix_seconds));
  const int millis = static_cast<int>(std::floor((unix_seconds - static_cast<double>(whole)) * 1000.0));
  std::tm tm{};
  gmtime_r(&whole, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}

ExperimentService::ExperimentService(store::StimulusManifest manifest, ServiceConfig config)
    : manifest_(std::move(manifest)), config_(std::move(config)) {
  manifest_.validate();
  config_.plan.validate();
  if (config_.plan.units != manifest_.units.size()) {
    throw ConfigError("recruitment plan expects " + std::to_string(config_.plan.units) + " units but the manifest has " +
                      std::to_string(manifest_.units.size()));
  }
  if (manifest_.catch_trials.size() < config_.catch_trials_per_session) {
    throw ConfigError("manifest provides " + std::to_string(manifest_.catch_trials.size()) + " catch trials, " +
                      std::to_string(config_.catch_trials_per_session) + " needed per session");
  }
  if (manifest_.practice_trials.size() < config_.practice_trials) {
    throw ConfigError("manifest provides " + std::to_string(manifest_.practice_trials.size()) +
                      " practice trials, " + std::to_string(config_.practice_trials) + " configured");
  }
  catalog_ = build_catalog(manifest_, config_.plan.active_instances_per_unit);
  if (catalog_.empty()) throw ConfigError("manifest contains no stimulus entries");
  for (const auto& [key, stim] : catalog_) {
    experiments_.try_emplace(key, Experiment{stim, Scheduler(config_.plan)});
  }
}

double ExperimentService::now(const Session& s) const {
  if (config_.virtual_clock) return kVirtualEpoch + s.virtual_elapsed;
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

ExperimentService::Session& ExperimentService::find(const std::string& session_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  return *it->second;
}

SessionInfo ExperimentService::create_session(const std::string& participant_id, const std::string& model_id,
                                              stimuli::Condition condition, stimuli::Difficulty difficulty) {
  if (participant_id.empty()) throw ValidationError("participant_id must not be empty");
  const ExperimentKey key{model_id, condition, difficulty};
  auto session = std::make_unique<Session>();
  {
    std::lock_guard lock(admin_mutex_);
    const auto exp = experiments_.find(key);
    if (exp == experiments_.end()) throw NotFoundError("no experiment " + key.to_string());
    auto& history = participation_[participant_id];
    if (std::find(history.begin(), history.end(), key) != history.end()) {
      throw RejectedError("participant '" + participant_id + "' was already admitted to " + key.to_string());
    }
    ClaimResult claim = exp->second.scheduler.claim();
    if (claim.status == ClaimStatus::closed) throw ClosedError("recruitment for " + key.to_string() + " is complete");
    if (claim.status == ClaimStatus::busy) {
      throw BusyError("all open slots of " + key.to_string() + " are held by sessions in progress");
    }
    session->other_participation = !history.empty();
    history.push_back(key);
    session->ordinal = next_ordinal_++;
    session->claims = std::move(claim.claims);
    ++exp->second.active;
  }

  Session& s = *session;
  char id[32];
  std::snprintf(id, sizeof id, "s%06zu", s.ordinal);
  s.info.session_id = id;
  s.info.participant_id = participant_id;
  s.info.key = key;
  s.info.state = SessionState::instructions;
  s.info.practice_trials = config_.practice_trials;
  s.rng = Rng(derive_seed(config_.seed, 0x5E55'0000ULL + s.ordinal));

  // Main sequence: real trials in shuffled order with catch trials at
  // uniformly random positions.
  std::vector<Trial> real;
  for (const auto& c : s.claims) {
    Trial t;
    t.kind = TrialKind::real;
    t.unit = c.unit;
    t.instance = c.instance;
    real.push_back(t);
  }
  s.rng.shuffle(real);
  std::vector<std::size_t> catch_pool(manifest_.catch_trials.size());
  for (std::size_t i = 0; i < catch_pool.size(); ++i) catch_pool[i] = i;
  s.rng.shuffle(catch_pool);
  catch_pool.resize(config_.catch_trials_per_session);
  const std::size_t total = real.size() + catch_pool.size();
  std::vector<bool> is_catch(total, false);
  {
    std::vector<std::size_t> positions(total);
    for (std::size_t i = 0; i < total; ++i) positions[i] = i;
    s.rng.shuffle(positions);
    for (std::size_t k = 0; k < catch_pool.size(); ++k) is_catch[positions[k]] = true;
  }
  // Real and catch trials are side-balanced separately.
  const auto real_sides = balanced_sides(real.size(), s.rng);
  const auto catch_sides = balanced_sides(catch_pool.size(), s.rng);
  std::size_t next_real = 0, next_catch = 0;
  for (std::size_t i = 0; i < total; ++i) {
    Trial t;
    if (is_catch[i]) {
      t.kind = TrialKind::catch_trial;
      t.fixed = catch_pool[next_catch];
      t.positive_side = catch_sides[next_catch++];
    } else {
      t = real[next_real];
      t.positive_side = real_sides[next_real++];
    }
    t.trial_id = "m" + std::to_string(i);
    s.main.push_back(t);
  }
  s.info.main_trials = s.main.size();
  s.instruction_start = now(s);
  s.info.instruction_start = iso8601(s.instruction_start);

  SessionInfo info = s.info;
  {
    std::unique_lock lock(sessions_mutex_);
    sessions_.emplace(info.session_id, std::move(session));
  }
  return info;
}

void ExperimentService::start_practice_round(Session& s) {
  s.practice_round.clear();
  s.practice_pos = 0;
  s.practice_round_clean = true;
  const auto sides = balanced_sides(config_.practice_trials, s.rng);
  for (std::size_t k = 0; k < config_.practice_trials; ++k) {
    Trial t;
    t.kind = TrialKind::practice;
    t.fixed = k;
    t.positive_side = sides[k];
    t.trial_id = "p" + std::to_string(s.practice_attempts) + "-" + std::to_string(k);
    s.practice_round.push_back(t);
  }
}

const ExperimentService::Trial& ExperimentService::current_trial(const Session& s) const {
  if (s.info.state == SessionState::practice) return s.practice_round.at(s.practice_pos);
  return s.main.at(s.main_pos);
}

const store::StimulusEntry& ExperimentService::entry_for(const Session& s, const Trial& trial) const {
  return *catalog_.at(s.info.key).instances.at(trial.unit).at(trial.instance);
}

TrialPayload ExperimentService::payload(const Session& s, const Trial& trial) const {
  TrialPayload p;
  p.trial_id = trial.trial_id;
  p.practice_round = s.practice_attempts;
  const std::vector<store::StimulusImage>* pos = nullptr;
  const std::vector<store::StimulusImage>* neg = nullptr;
  const store::StimulusImage* pq = nullptr;
  const store::StimulusImage* nq = nullptr;
  if (trial.kind == TrialKind::real) {
    const auto& e = entry_for(s, trial);
    pos = &e.positive_references;
    neg = &e.negative_references;
    pq = &e.positive_query;
    nq = &e.negative_query;
  } else {
    const auto& f = trial.kind == TrialKind::practice ? manifest_.practice_trials.at(trial.fixed)
                                                      : manifest_.catch_trials.at(trial.fixed);
    pos = &f.positive_references;
    neg = &f.negative_references;
    pq = &f.positive_query;
    nq = &f.negative_query;
  }
  p.positive_references = urls(*pos);
  p.negative_references = urls(*neg);
  const bool pos_top = trial.positive_side == store::Side::top;
  p.top_query = url((pos_top ? pq : nq)->path);
  p.bottom_query = url((pos_top ? nq : pq)->path);
  if (s.info.state == SessionState::practice) {
    p.phase = "practice";
    p.index = s.practice_pos;
    p.total = s.practice_round.size();
  } else {
    p.phase = "main";
    p.index = s.main_pos;
    p.total = s.main.size();
  }
  return p;
}

TrialPayload ExperimentService::next_trial(const std::string& session_id) {
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  switch (s.info.state) {
    case SessionState::finished:
      throw ClosedError("session " + session_id + " is finished");
    case SessionState::instructions:
      s.instruction_end = now(s);
      if (config_.practice_trials > 0) {
        s.info.state = SessionState::practice;
        start_practice_round(s);
      } else {
        s.info.state = SessionState::main;
      }
      break;
    default:
      break;
  }
  if (s.info.state == SessionState::main && s.main_pos >= s.main.size()) {
    TrialPayload done;
    done.complete = true;
    done.phase = "main";
    done.index = s.main.size();
    done.total = s.main.size();
    return done;
  }
  return payload(s, current_trial(s));
}

Feedback ExperimentService::submit_response(const std::string& session_id, const ResponseSubmission& sub) {
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  if (s.last && s.last->submission.trial_id == sub.trial_id) {
    const auto& prev = s.last->submission;
    if (prev.choice == sub.choice && prev.confidence == sub.confidence &&
        prev.reaction_time_ms == sub.reaction_time_ms) {
      return s.last->feedback;
    }
    throw ProtocolError("trial " + sub.trial_id + " was already answered with a different response");
  }
  if (s.info.state == SessionState::finished) throw ClosedError("session " + session_id + " is finished");
  if (s.info.state == SessionState::instructions) {
    throw ProtocolError("no trial has been issued yet; request GET /sessions/" + session_id + "/trial first");
  }
  if (s.info.state == SessionState::main && s.main_pos >= s.main.size()) {
    throw ProtocolError("all trials are answered; unknown trial " + sub.trial_id);
  }
  const Trial& trial = current_trial(s);
  if (trial.trial_id != sub.trial_id) {
    throw ProtocolError("expected a response to trial " + trial.trial_id + ", got " + sub.trial_id);
  }
  const store::Side choice = store::parse_side(sub.choice);
  if (sub.confidence < 1 || sub.confidence > 3) {
    throw ValidationError("confidence must be 1, 2 or 3, got " + std::to_string(sub.confidence));
  }
  const double t_now = now(s);
  const double elapsed_ms = (t_now - s.instruction_start) * 1000.0;
  if (!(sub.reaction_time_ms > 0.0) || !(sub.reaction_time_ms < elapsed_ms)) {
    throw ValidationError("reaction_time_ms must lie in (0, " + std::to_string(elapsed_ms) + ")");
  }

  StoredResponse r;
  r.trial_id = trial.trial_id;
  r.kind = trial.kind;
  r.unit = trial.unit;
  r.instance = trial.instance;
  r.choice = choice;
  r.positive_side = trial.positive_side;
  r.confidence = sub.confidence;
  r.reaction_time_ms = sub.reaction_time_ms;
  r.correct = choice == trial.positive_side;
  r.timestamp = iso8601(t_now);

  Feedback fb;
  fb.trial_id = trial.trial_id;
  fb.correct = r.correct;
  fb.correct_side = trial.positive_side;
  if (s.info.state == SessionState::practice) {
    fb.phase = "practice";
    r.trial_index = s.practice_pos;
    s.practice_round_clean = s.practice_round_clean && r.correct;
    s.responses.push_back(r);
    ++s.practice_pos;
    if (s.practice_pos == s.practice_round.size()) {
      ++s.practice_attempts;
      fb.practice_round_complete = true;
      if (s.practice_round_clean) {
        fb.practice_passed = true;
        s.info.state = SessionState::main;
      } else {
        start_practice_round(s);
      }
    }
  } else {
    fb.phase = "main";
    r.trial_index = s.main_pos;
    s.responses.push_back(r);
    ++s.main_pos;
    fb.main_complete = s.main_pos == s.main.size();
  }
  s.last = LastResponse{sub, fb};
  return fb;
}

QualityReport ExperimentService::finish(const std::string& session_id) {
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  if (s.info.state == SessionState::finished) return *s.quality;
  if (s.info.state != SessionState::main || s.main_pos < s.main.size()) {
    const std::size_t pending = s.info.state == SessionState::main ? s.main.size() - s.main_pos : s.main.size();
    throw ProtocolError("session " + session_id + " still has " + std::to_string(pending) + " unanswered trials");
  }
  s.finish_time = now(s);
  QualityInputs in;
  in.practice_attempts = s.practice_attempts;
  in.instruction_seconds = s.instruction_end - s.instruction_start;
  in.total_seconds = s.finish_time - s.instruction_start;
  in.unique_participation = !s.other_participation;
  std::size_t tops = 0, real_count = 0;
  for (const auto& r : s.responses) {
    if (r.kind == TrialKind::catch_trial) {
      ++in.catch_total;
      if (r.correct) ++in.catch_correct;
    } else if (r.kind == TrialKind::real) {
      ++real_count;
      if (r.choice == store::Side::top) ++tops;
    }
  }
  in.same_side_fraction =
      real_count == 0 ? 0.0 : static_cast<double>(std::max(tops, real_count - tops)) / static_cast<double>(real_count);
  s.quality = evaluate_quality(in, config_.thresholds);
  s.info.state = SessionState::finished;

  std::lock_guard admin(admin_mutex_);
  auto& exp = experiments_.at(s.info.key);
  --exp.active;
  if (s.quality->passed) {
    exp.scheduler.commit(s.claims, s.info.participant_id);
    ++exp.passing;
  } else {
    exp.scheduler.release(s.claims);
    ++exp.failed;
  }
  return *s.quality;
}

void ExperimentService::advance_clock(const std::string& session_id, double seconds) {
  if (!config_.virtual_clock) throw StateError("the service runs on the wall clock; time cannot be advanced");
  if (!(seconds >= 0.0) || !std::isfinite(seconds)) throw ValidationError("clock advance must be a non-negative number");
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  s.virtual_elapsed += seconds;
}

SessionSnapshot ExperimentService::session(const std::string& session_id) const {
  Session& s = find(session_id);
  std::lock_guard lock(s.mutex);
  SessionSnapshot snap;
  snap.info = s.info;
  snap.practice_attempts = s.practice_attempts;
  snap.instruction_seconds = s.info.state == SessionState::instructions ? 0.0 : s.instruction_end - s.instruction_start;
  snap.responses = s.responses;
  snap.claims = s.claims;
  snap.quality = s.quality;
  return snap;
}

RecruitmentStatus ExperimentService::status_locked(const Experiment& e) const {
  RecruitmentStatus st;
  st.key = e.stimuli.key;
  st.target_passing_sessions = config_.plan.target_passing_sessions;
  st.passing_sessions = e.passing;
  st.failed_sessions = e.failed;
  st.active_sessions = e.active;
  st.open_slots = e.scheduler.open_slots();
  st.pending_slots = e.scheduler.pending_slots();
  st.committed_slots = e.scheduler.committed_slots();
  st.complete = e.scheduler.complete();
  for (std::size_t u = 0; u < e.stimuli.units.size(); ++u) {
    UnitLedger l;
    l.unit = e.stimuli.units[u];
    for (std::size_t i = 0; i < config_.plan.active_instances_per_unit; ++i) {
      l.committed.push_back(e.scheduler.committed(u, i));
      l.pending.push_back(e.scheduler.pending(u, i));
    }
    l.distinct_participants = e.scheduler.unit_participants(u).size();
    st.units.push_back(std::move(l));
  }
  return st;
}

std::vector<RecruitmentStatus> ExperimentService::recruitment_status() const {
  std::lock_guard lock(admin_mutex_);
  std::vector<RecruitmentStatus> out;
  for (const auto& [key, e] : experiments_) out.push_back(status_locked(e));
  return out;
}

RecruitmentStatus ExperimentService::recruitment_status(const ExperimentKey& key) const {
  std::lock_guard lock(admin_mutex_);
  const auto it = experiments_.find(key);
  if (it == experiments_.end()) throw NotFoundError("no experiment " + key.to_string());
  return status_locked(it->second);
}

bool ExperimentService::all_complete() const {
  std::lock_guard lock(admin_mutex_);
  return std::all_of(experiments_.begin(), experiments_.end(),
                     [](const auto& kv) { return kv.second.scheduler.complete(); });
}

std::vector<store::ImiResponseRecord> ExperimentService::records() const {
  std::vector<const Session*> finished;
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto& [id, s] : sessions_) finished.push_back(s.get());
  }
  struct Keyed {
    ExperimentKey key;
    std::size_t ordinal;
    std::vector<store::ImiResponseRecord> rows;
  };
  std::vector<Keyed> groups;
  for (const Session* sp : finished) {
    std::lock_guard lock(sp->mutex);
    if (sp->info.state != SessionState::finished) continue;
    Keyed g{sp->info.key, sp->ordinal, {}};
    const auto failed = sp->quality->failed_checks();
    const auto& stim = catalog_.at(sp->info.key);
    for (const auto& r : sp->responses) {
      if (r.kind != TrialKind::real) continue;
      store::ImiResponseRecord rec;
      const UnitAddress& unit = stim.units.at(r.unit);
      rec.model_id = unit.model_id;
      rec.layer_id = unit.layer_id;
      rec.channel_index = unit.channel_index;
      rec.condition = sp->info.key.condition;
      rec.difficulty = sp->info.key.difficulty;
      rec.instance_index = r.instance;
      rec.participant_id = sp->info.participant_id;
      rec.session_id = sp->info.session_id;
      rec.trial_index = r.trial_index;
      rec.choice = r.choice;
      rec.positive_side = r.positive_side;
      rec.correct = r.correct;
      rec.confidence = r.confidence;
      rec.reaction_time_ms = r.reaction_time_ms;
      rec.quality_passed = sp->quality->passed;
      rec.failed_checks = failed;
      g.rows.push_back(std::move(rec));
    }
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.ordinal < b.ordinal;
  });
  std::vector<store::ImiResponseRecord> out;
  for (auto& g : groups) {
    for (auto& r : g.rows) out.push_back(std::move(r));
  }
  return out;
}

void to_json(nlohmann::json& j, const SessionInfo& v) {
  j = nlohmann::json{{"session_id", v.session_id},
                     {"participant_id", v.participant_id},
                     {"model_id", v.key.model_id},
                     {"condition", std::string(stimuli::to_string(v.key.condition))},
                     {"difficulty", std::string(stimuli::to_string(v.key.difficulty))},
                     {"state", std::string(to_string(v.state))},
                     {"practice_trials", v.practice_trials},
                     {"main_trials", v.main_trials},
                     {"instruction_start", v.instruction_start}};
}

void to_json(nlohmann::json& j, const TrialPayload& v) {
  if (v.complete) {
    j = nlohmann::json{{"status", "complete"}, {"phase", v.phase}, {"index", v.index}, {"total", v.total}};
    return;
  }
  j = nlohmann::json{{"status", "trial"},
                     {"trial_id", v.trial_id},
                     {"phase", v.phase},
                     {"index", v.index},
                     {"total", v.total},
                     {"practice_round", v.practice_round},
                     {"references", {{"negative", v.negative_references}, {"positive", v.positive_references}}},
                     {"queries", {{"top", v.top_query}, {"bottom", v.bottom_query}}}};
}

void to_json(nlohmann::json& j, const Feedback& v) {
  j = nlohmann::json{{"trial_id", v.trial_id},
                     {"correct", v.correct},
                     {"correct_side", std::string(store::to_string(v.correct_side))},
                     {"frame", v.correct ? "green" : "red"},
                     {"phase", v.phase},
                     {"practice_round_complete", v.practice_round_complete},
                     {"practice_passed", v.practice_passed},
                     {"main_complete", v.main_complete}};
}

void to_json(nlohmann::json& j, const RecruitmentStatus& v) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& l : v.units) {
    units.push_back({{"unit", {{"layer_id", l.unit.layer_id}, {"channel_index", l.unit.channel_index}}},
                     {"committed", l.committed},
                     {"pending", l.pending},
                     {"distinct_participants", l.distinct_participants}});
  }
  j = nlohmann::json{{"model_id", v.key.model_id},
                     {"condition", std::string(stimuli::to_string(v.key.condition))},
                     {"difficulty", std::string(stimuli::to_string(v.key.difficulty))},
                     {"target_passing_sessions", v.target_passing_sessions},
                     {"passing_sessions", v.passing_sessions},
                     {"failed_sessions", v.failed_sessions},
                     {"active_sessions", v.active_sessions},
                     {"open_slots", v.open_slots},
                     {"pending_slots", v.pending_slots},
                     {"committed_slots", v.committed_slots},
                     {"complete", v.complete},
                     {"units", units}};
}

}  // namespace imi::service
