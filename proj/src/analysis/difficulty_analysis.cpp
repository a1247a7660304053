#include "imi/analysis/difficulty_analysis.hpp"

#include "imi/analysis/ranks.hpp"

namespace imi::analysis {

DifficultyReport difficulty_analysis(const std::vector<UnitScore>& scores, stimuli::Condition condition) {
  DifficultyReport rep;
  std::map<UnitAddress, std::array<std::optional<double>, kDifficultyCount>> units;
  std::array<bool, kDifficultyCount> measured{};
  for (const auto& s : scores) {
    if (s.condition != condition) continue;
    const auto d = static_cast<std::size_t>(s.difficulty);
    units[s.unit][d] = s.proportion_correct;
    measured[d] = true;
  }
  for (std::size_t d = 0; d < kDifficultyCount; ++d) {
    if (measured[d]) rep.levels.push_back(static_cast<stimuli::Difficulty>(d));
  }

  std::array<std::vector<double>, kDifficultyCount> per_level;
  std::vector<double> gaps, easy_scores;
  std::size_t decreasing = 0;
  for (const auto& [unit, tuple] : units) {
    bool complete = true;
    for (auto d : rep.levels) complete = complete && tuple[static_cast<std::size_t>(d)].has_value();
    if (!complete) {
      rep.warnings.push_back("unit " + unit.to_string() + " lacks a measured difficulty level and was excluded");
      continue;
    }
    DifficultyRow row;
    row.unit = unit;
    row.condition = condition;
    row.scores = tuple;
    const auto& easy = tuple[0];
    if (easy && tuple[1]) row.gap_easy_medium = *easy - *tuple[1];
    if (easy && tuple[2]) row.gap_easy_hard = *easy - *tuple[2];
    row.strictly_decreasing = rep.levels.size() >= 2;
    for (std::size_t k = 1; k < rep.levels.size(); ++k) {
      const double prev = *tuple[static_cast<std::size_t>(rep.levels[k - 1])];
      const double cur = *tuple[static_cast<std::size_t>(rep.levels[k])];
      row.strictly_decreasing = row.strictly_decreasing && prev > cur;
    }
    if (row.strictly_decreasing) ++decreasing;
    for (auto d : rep.levels) per_level[static_cast<std::size_t>(d)].push_back(*tuple[static_cast<std::size_t>(d)]);
    if (easy && rep.levels.size() >= 2) {
      gaps.push_back(*easy - *tuple[static_cast<std::size_t>(rep.levels.back())]);
      easy_scores.push_back(*easy);
    }
    rep.rows.push_back(std::move(row));
  }
  for (std::size_t d = 0; d < kDifficultyCount; ++d) {
    if (!per_level[d].empty()) rep.level_means[d] = mean(per_level[d]);
  }
  if (!rep.rows.empty()) {
    rep.fraction_strictly_decreasing = static_cast<double>(decreasing) / static_cast<double>(rep.rows.size());
  }
  if (gaps.size() >= 3) rep.gap_vs_easy = spearman(easy_scores, gaps);
  return rep;
}

std::vector<ConfidenceSplit> confidence_split(const std::vector<store::ImiResponseRecord>& records) {
  std::map<std::pair<std::string, stimuli::Condition>, std::array<std::pair<std::size_t, std::size_t>, 3>> groups;
  for (const auto& r : records) {
    if (r.confidence < 1 || r.confidence > 3) continue;
    auto& slot = groups[{r.model_id, r.condition}][static_cast<std::size_t>(r.confidence - 1)];
    ++slot.first;
    if (r.correct) ++slot.second;
  }
  std::vector<ConfidenceSplit> out;
  for (const auto& [key, counts] : groups) {
    ConfidenceSplit cs;
    cs.model_id = key.first;
    cs.condition = key.second;
    for (int c = 0; c < 3; ++c) {
      auto& lvl = cs.levels[static_cast<std::size_t>(c)];
      lvl.confidence = c + 1;
      lvl.count = counts[static_cast<std::size_t>(c)].first;
      if (lvl.count > 0) {
        lvl.proportion_correct =
            static_cast<double>(counts[static_cast<std::size_t>(c)].second) / static_cast<double>(lvl.count);
      }
    }
    out.push_back(cs);
  }
  return out;
}

}  // namespace imi::analysis
