#include "imi/service/catalog.hpp"

#include "imi/common/errors.hpp"

namespace imi::service {

std::string ExperimentKey::to_string() const {
  return model_id + "/" + std::string(stimuli::to_string(condition)) + "/" +
         std::string(stimuli::to_string(difficulty));
}

std::map<ExperimentKey, ExperimentStimuli> build_catalog(const store::StimulusManifest& manifest,
                                                         std::size_t min_instances) {
  std::map<UnitAddress, std::size_t> unit_index;
  for (std::size_t u = 0; u < manifest.units.size(); ++u) unit_index.emplace(manifest.units[u], u);

  std::map<ExperimentKey, ExperimentStimuli> catalog;
  for (const auto& e : manifest.entries) {
    const ExperimentKey key{manifest.model.model_id, e.condition, e.difficulty};
    auto [it, inserted] = catalog.try_emplace(key);
    if (inserted) {
      it->second.key = key;
      it->second.units = manifest.units;
      it->second.instances.resize(manifest.units.size());
    }
    const auto u = unit_index.find(e.unit);
    if (u == unit_index.end()) throw ValidationError("stimulus entry for unlisted unit " + e.unit.to_string());
    auto& slots = it->second.instances[u->second];
    if (slots.size() <= e.instance_index) slots.resize(e.instance_index + 1, nullptr);
    slots[e.instance_index] = &e;
  }
  for (const auto& [key, exp] : catalog) {
    for (std::size_t u = 0; u < exp.units.size(); ++u) {
      const auto& slots = exp.instances[u];
      for (std::size_t i = 0; i < min_instances; ++i) {
        if (i >= slots.size() || slots[i] == nullptr) {
          throw ConfigError("experiment " + key.to_string() + " lacks instance " + std::to_string(i) + " of unit " +
                            exp.units[u].to_string());
        }
      }
    }
  }
  return catalog;
}

}  // namespace imi::service
