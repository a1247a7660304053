#include "imi/analysis/scores.hpp"

#include <tuple>

#include "imi/common/errors.hpp"

namespace imi::analysis {

std::vector<UnitScore> unit_scores(const std::vector<store::ImiResponseRecord>& records) {
  using Key = std::tuple<UnitAddress, stimuli::Condition, stimuli::Difficulty>;
  std::map<Key, UnitScore> groups;
  for (const auto& r : records) {
    const Key key{r.unit(), r.condition, r.difficulty};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) {
      it->second.unit = r.unit();
      it->second.condition = r.condition;
      it->second.difficulty = r.difficulty;
    }
    ++it->second.n_responses;
    if (r.correct) ++it->second.n_correct;
  }
  std::vector<UnitScore> out;
  for (auto& [key, s] : groups) {
    s.proportion_correct = static_cast<double>(s.n_correct) / static_cast<double>(s.n_responses);
    out.push_back(s);
  }
  return out;
}

std::vector<UnitScore> select_scores(const std::vector<UnitScore>& scores, stimuli::Condition condition,
                                     stimuli::Difficulty difficulty) {
  std::vector<UnitScore> out;
  for (const auto& s : scores) {
    if (s.condition == condition && s.difficulty == difficulty) out.push_back(s);
  }
  return out;
}

std::vector<double> score_values(const std::vector<UnitScore>& scores) {
  std::vector<double> out;
  for (const auto& s : scores) out.push_back(s.proportion_correct);
  return out;
}

std::map<std::string, std::vector<double>> scores_by_model(const std::vector<UnitScore>& scores) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& s : scores) out[s.unit.model_id].push_back(s.proportion_correct);
  return out;
}

}  // namespace imi::analysis
