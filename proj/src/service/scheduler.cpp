#include "imi/service/scheduler.hpp"

#include <algorithm>
#include <numeric>

#include "imi/common/errors.hpp"

namespace imi::service {

void RecruitmentPlan::validate() const {
  if (units == 0 || responses_per_instance == 0 || active_instances_per_unit == 0 || real_trials_per_session == 0) {
    throw ConfigError("recruitment plan counts must be positive");
  }
  if (responses_per_unit != active_instances_per_unit * responses_per_instance) {
    throw ConfigError("responses_per_unit must equal active_instances_per_unit * responses_per_instance (" +
                      std::to_string(responses_per_unit) + " vs " +
                      std::to_string(active_instances_per_unit * responses_per_instance) + ")");
  }
  if (units * responses_per_unit != target_passing_sessions * real_trials_per_session) {
    throw ConfigError("units * responses_per_unit (" + std::to_string(units * responses_per_unit) +
                      ") must equal target_passing_sessions * real_trials_per_session (" +
                      std::to_string(target_passing_sessions * real_trials_per_session) + ")");
  }
  if (real_trials_per_session > units) {
    throw ConfigError("real_trials_per_session exceeds the number of units; units may not repeat in a session");
  }
}

RecruitmentPlan RecruitmentPlan::scaled(std::size_t units, std::size_t active_instances,
                                        std::size_t responses_per_instance, std::size_t real_trials_per_session) {
  RecruitmentPlan p;
  p.units = units;
  p.active_instances_per_unit = active_instances;
  p.responses_per_instance = responses_per_instance;
  p.responses_per_unit = active_instances * responses_per_instance;
  p.real_trials_per_session = real_trials_per_session;
  if (real_trials_per_session == 0 || (units * p.responses_per_unit) % real_trials_per_session != 0) {
    throw ConfigError("units * responses_per_unit must be divisible by real_trials_per_session");
  }
  p.target_passing_sessions = units * p.responses_per_unit / real_trials_per_session;
  p.validate();
  return p;
}

Scheduler::Scheduler(RecruitmentPlan plan) : plan_(plan) {
  plan_.validate();
  open_.assign(plan_.units, std::vector<std::size_t>(plan_.active_instances_per_unit, plan_.responses_per_instance));
  pending_.assign(plan_.units, std::vector<std::size_t>(plan_.active_instances_per_unit, 0));
  committed_ = pending_;
  participants_.resize(plan_.units);
}

ClaimResult Scheduler::claim() {
  std::vector<std::pair<std::size_t, std::size_t>> candidates;  // (open total, unit)
  for (std::size_t u = 0; u < plan_.units; ++u) {
    const std::size_t total = std::accumulate(open_[u].begin(), open_[u].end(), std::size_t{0});
    if (total > 0) candidates.emplace_back(total, u);
  }
  ClaimResult result;
  if (candidates.empty()) {
    result.status = complete() ? ClaimStatus::closed : ClaimStatus::busy;
    return result;
  }
  if (candidates.size() < plan_.real_trials_per_session && pending_slots() > 0) {
    result.status = ClaimStatus::busy;
    return result;
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const std::size_t take = std::min(candidates.size(), plan_.real_trials_per_session);
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t u = candidates[k].second;
    const auto best = std::max_element(open_[u].begin(), open_[u].end());  // first maximum
    const auto i = static_cast<std::size_t>(best - open_[u].begin());
    --open_[u][i];
    ++pending_[u][i];
    result.claims.push_back({u, i});
  }
  result.status = ClaimStatus::granted;
  return result;
}

void Scheduler::commit(const std::vector<SlotClaim>& claims, const std::string& participant_id) {
  for (const auto& c : claims) {
    if (pending_.at(c.unit).at(c.instance) == 0) throw StateError("commit of a slot that is not pending");
    if (!participants_[c.unit].insert(participant_id).second) {
      throw StateError("participant " + participant_id + " already counted for unit " + std::to_string(c.unit));
    }
    --pending_[c.unit][c.instance];
    ++committed_[c.unit][c.instance];
  }
}

void Scheduler::release(const std::vector<SlotClaim>& claims) {
  for (const auto& c : claims) {
    if (pending_.at(c.unit).at(c.instance) == 0) throw StateError("release of a slot that is not pending");
    --pending_[c.unit][c.instance];
    ++open_[c.unit][c.instance];
  }
}

namespace {

std::size_t grand_total(const std::vector<std::vector<std::size_t>>& m) {
  std::size_t s = 0;
  for (const auto& row : m) s += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return s;
}

}  // namespace

std::size_t Scheduler::open_slots() const { return grand_total(open_); }
std::size_t Scheduler::pending_slots() const { return grand_total(pending_); }
std::size_t Scheduler::committed_slots() const { return grand_total(committed_); }

std::size_t Scheduler::unit_committed(std::size_t unit) const {
  return std::accumulate(committed_[unit].begin(), committed_[unit].end(), std::size_t{0});
}

}  // namespace imi::service
