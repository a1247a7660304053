#pragma once

#include <map>
#include <string>
#include <vector>

#include "imi/store/imi_format.hpp"

namespace imi::service {

struct ExperimentKey {
  std::string model_id;
  stimuli::Condition condition = stimuli::Condition::natural;
  stimuli::Difficulty difficulty = stimuli::Difficulty::easy;

  auto operator<=>(const ExperimentKey&) const = default;
  std::string to_string() const;
};

/// Stimuli of one experiment: instances[u][i] is the entry for unit u
/// (index into `units`) and instance i.
struct ExperimentStimuli {
  ExperimentKey key;
  std::vector<UnitAddress> units;
  std::vector<std::vector<const store::StimulusEntry*>> instances;
};

/// Groups manifest entries by (condition, difficulty). Units keep the
/// manifest order, which is also the scheduler's tie-break order. Every unit
/// must provide instances 0..min_instances-1.
std::map<ExperimentKey, ExperimentStimuli> build_catalog(const store::StimulusManifest& manifest,
                                                         std::size_t min_instances);

}  // namespace imi::service
