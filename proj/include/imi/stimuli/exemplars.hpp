#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "imi/model/activation_table.hpp"
#include "imi/stimuli/types.hpp"

namespace imi::stimuli {

/// Top 9t images are positive reference candidates and the next t positive
/// queries; the negative side mirrors this from the bottom, skipping images
/// already taken by the positive side. Ties go to the lower image id.
/// Requires at least 2 * 10t images.
ExemplarSelection select_exemplars(const ActivationTable& table, const UnitAddress& unit, std::size_t t);

/// Splits each candidate list into 9 contiguous rank groups of t images and
/// deals one image per group to every trial, without replacement. Queries
/// are assigned to instances by a seeded permutation.
std::vector<TrialInstance> assemble_trials(const ExemplarSelection& selection, std::uint64_t seed);

/// Positions in ascending (activation, image id) order.
std::vector<std::size_t> ascending_order(const std::vector<double>& activations,
                                         const std::vector<std::string>& image_ids);

/// Index into an ascending list of n values used as the q-th percentile.
std::size_t percentile_index(double q, std::size_t n);

struct DifficultyQueries {
  std::vector<std::string> positive;
  std::vector<std::string> negative;
};

/// The t unreserved images whose ascending rank is nearest the q-th
/// percentile (negatives: nearest the (100-q)-th). The extreme level returns
/// the select_exemplars queries. Throws DegenerateError when every
/// activation is equal.
DifficultyQueries difficulty_queries(const ActivationTable& table, const UnitAddress& unit,
                                     const DifficultyLevel& level, std::size_t t,
                                     const std::set<std::string>& reserved);

/// Trials for a harder level: same references as assemble_trials(selection,
/// seed), queries replaced by `queries`.
std::vector<TrialInstance> assemble_trials_with_queries(const ExemplarSelection& selection,
                                                        const DifficultyQueries& queries,
                                                        Difficulty difficulty, std::uint64_t seed);

}  // namespace imi::stimuli
