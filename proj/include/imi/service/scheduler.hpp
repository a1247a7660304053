#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace imi::service {

struct RecruitmentPlan {
  std::size_t units = 84;
  std::size_t responses_per_unit = 30;
  std::size_t active_instances_per_unit = 10;
  std::size_t responses_per_instance = 3;
  std::size_t real_trials_per_session = 40;
  std::size_t target_passing_sessions = 63;

  /// Checks the bookkeeping identities: responses_per_unit =
  /// active_instances * responses_per_instance, units * responses_per_unit =
  /// target * real_trials, real_trials <= units.
  void validate() const;
  std::size_t total_slots() const { return units * responses_per_unit; }

  /// Plan with the given shape whose session target follows from the
  /// identity above.
  static RecruitmentPlan scaled(std::size_t units, std::size_t active_instances, std::size_t responses_per_instance,
                                std::size_t real_trials_per_session);
};

struct SlotClaim {
  std::size_t unit = 0;
  std::size_t instance = 0;
  bool operator==(const SlotClaim&) const = default;
};

enum class ClaimStatus { granted, busy, closed };

struct ClaimResult {
  ClaimStatus status = ClaimStatus::closed;
  std::vector<SlotClaim> claims;
};

/// Per (unit, instance) counters of open, pending and committed responses.
/// Not internally synchronised; the owning experiment serialises access.
class Scheduler {
 public:
  explicit Scheduler(RecruitmentPlan plan);

  /// Takes the most under-served distinct units (ties by lower unit index),
  /// one open slot each from that unit's fullest instance (ties by lower
  /// instance). Returns busy when too few units are open while other
  /// sessions hold pending slots, closed when nothing is left to collect.
  /// With nothing pending and fewer open units than a full session needs,
  /// the remaining units are granted.
  ClaimResult claim();
  void commit(const std::vector<SlotClaim>& claims, const std::string& participant_id);
  void release(const std::vector<SlotClaim>& claims);

  const RecruitmentPlan& plan() const { return plan_; }
  std::size_t open_slots() const;
  std::size_t pending_slots() const;
  std::size_t committed_slots() const;
  bool complete() const { return committed_slots() == plan_.total_slots(); }

  std::size_t open(std::size_t unit, std::size_t instance) const { return open_[unit][instance]; }
  std::size_t pending(std::size_t unit, std::size_t instance) const { return pending_[unit][instance]; }
  std::size_t committed(std::size_t unit, std::size_t instance) const { return committed_[unit][instance]; }
  std::size_t unit_committed(std::size_t unit) const;
  const std::set<std::string>& unit_participants(std::size_t unit) const { return participants_[unit]; }

 private:
  RecruitmentPlan plan_;
  std::vector<std::vector<std::size_t>> open_, pending_, committed_;
  std::vector<std::set<std::string>> participants_;
};

}  // namespace imi::service
