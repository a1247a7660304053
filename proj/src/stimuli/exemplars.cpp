#include "imi/stimuli/exemplars.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imi/common/errors.hpp"
#include "imi/common/random.hpp"

namespace imi::stimuli {

std::string_view to_string(Condition condition) {
  return condition == Condition::natural ? "natural" : "synthetic";
}

std::string_view to_string(Difficulty difficulty) {
  switch (difficulty) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
    case Difficulty::very_hard: return "very_hard";
  }
  return "easy";
}

Condition parse_condition(std::string_view text) {
  if (text == "natural") return Condition::natural;
  if (text == "synthetic") return Condition::synthetic;
  throw ConfigError("unknown condition '" + std::string(text) + "'");
}

Difficulty parse_difficulty(std::string_view text) {
  if (text == "easy") return Difficulty::easy;
  if (text == "medium") return Difficulty::medium;
  if (text == "hard") return Difficulty::hard;
  if (text == "very_hard" || text == "very-hard") return Difficulty::very_hard;
  throw ConfigError("unknown difficulty '" + std::string(text) + "'");
}

DifficultyLevel difficulty_level(Difficulty difficulty) {
  switch (difficulty) {
    case Difficulty::easy: return {difficulty, std::nullopt};
    case Difficulty::medium: return {difficulty, 99.0};
    case Difficulty::hard: return {difficulty, 95.0};
    case Difficulty::very_hard: return {difficulty, 85.0};
  }
  return {Difficulty::easy, std::nullopt};
}

std::vector<std::size_t> ascending_order(const std::vector<double>& activations,
                                         const std::vector<std::string>& image_ids) {
  std::vector<std::size_t> order(activations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (activations[a] != activations[b]) return activations[a] < activations[b];
    return image_ids[a] < image_ids[b];
  });
  return order;
}

std::size_t percentile_index(double q, std::size_t n) {
  if (n == 0) throw DegenerateError("percentile of an empty list");
  const auto idx = static_cast<std::size_t>(std::floor(q / 100.0 * static_cast<double>(n)));
  return std::min(idx, n - 1);
}

ExemplarSelection select_exemplars(const ActivationTable& table, const UnitAddress& unit, std::size_t t) {
  if (t == 0) throw ConfigError("t must be positive");
  const std::size_t per_side = kReferencesPerSide * t + t;
  const std::size_t needed = 2 * per_side;
  if (table.image_count() < needed) {
    throw ConfigError("dataset '" + table.dataset_id + "' has " + std::to_string(table.image_count()) +
                      " images; selecting t=" + std::to_string(t) + " needs at least " + std::to_string(needed));
  }
  const auto column = table.column(unit);
  const auto& ids = table.image_ids;

  std::vector<std::size_t> desc(column.size());
  std::iota(desc.begin(), desc.end(), 0);
  std::sort(desc.begin(), desc.end(), [&](std::size_t a, std::size_t b) {
    if (column[a] != column[b]) return column[a] > column[b];
    return ids[a] < ids[b];
  });
  const auto asc = ascending_order(column, ids);

  ExemplarSelection sel;
  sel.unit = unit;
  sel.t = t;
  std::vector<bool> taken(column.size(), false);
  for (std::size_t r = 0; r < per_side; ++r) {
    taken[desc[r]] = true;
    (r < kReferencesPerSide * t ? sel.pos_reference_candidates : sel.pos_queries).push_back(ids[desc[r]]);
  }
  std::size_t picked = 0;
  for (std::size_t i : asc) {
    if (picked == per_side) break;
    if (taken[i]) continue;
    (picked < kReferencesPerSide * t ? sel.neg_reference_candidates : sel.neg_queries).push_back(ids[i]);
    ++picked;
  }
  return sel;
}

namespace {

// Deals the 9 rank groups of `candidates` across t trials.
std::vector<std::vector<std::string>> deal_groups(const std::vector<std::string>& candidates, std::size_t t,
                                                  Rng& rng) {
  std::vector<std::vector<std::string>> per_trial(t);
  for (std::size_t g = 0; g < kReferencesPerSide; ++g) {
    std::vector<std::size_t> perm(t);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (std::size_t k = 0; k < t; ++k) per_trial[k].push_back(candidates[g * t + perm[k]]);
  }
  return per_trial;
}

std::vector<TrialInstance> build(const ExemplarSelection& sel, const std::vector<std::string>& pos_queries,
                                 const std::vector<std::string>& neg_queries, Difficulty difficulty,
                                 std::uint64_t seed) {
  const std::size_t t = sel.t;
  if (sel.pos_reference_candidates.size() != kReferencesPerSide * t ||
      sel.neg_reference_candidates.size() != kReferencesPerSide * t || pos_queries.size() != t ||
      neg_queries.size() != t) {
    throw ConfigError("exemplar selection sizes do not match t=" + std::to_string(t));
  }
  // References and queries use separate streams so harder levels reuse the
  // exact reference sets of the easy level.
  Rng ref_rng(derive_seed(seed, 1));
  Rng query_rng(derive_seed(seed, 2));
  auto pos = deal_groups(sel.pos_reference_candidates, t, ref_rng);
  auto neg = deal_groups(sel.neg_reference_candidates, t, ref_rng);
  std::vector<std::size_t> pos_perm(t), neg_perm(t);
  std::iota(pos_perm.begin(), pos_perm.end(), 0);
  std::iota(neg_perm.begin(), neg_perm.end(), 0);
  query_rng.shuffle(pos_perm);
  query_rng.shuffle(neg_perm);

  std::vector<TrialInstance> trials(t);
  for (std::size_t k = 0; k < t; ++k) {
    auto& trial = trials[k];
    trial.unit = sel.unit;
    trial.condition = Condition::natural;
    trial.difficulty = difficulty;
    trial.instance_index = k;
    trial.pos_references = std::move(pos[k]);
    trial.neg_references = std::move(neg[k]);
    trial.pos_query = pos_queries[pos_perm[k]];
    trial.neg_query = neg_queries[neg_perm[k]];
  }
  return trials;
}

}  // namespace

std::vector<TrialInstance> assemble_trials(const ExemplarSelection& selection, std::uint64_t seed) {
  return build(selection, selection.pos_queries, selection.neg_queries, Difficulty::easy, seed);
}

std::vector<TrialInstance> assemble_trials_with_queries(const ExemplarSelection& selection,
                                                        const DifficultyQueries& queries,
                                                        Difficulty difficulty, std::uint64_t seed) {
  return build(selection, queries.positive, queries.negative, difficulty, seed);
}

}  // namespace imi::stimuli
