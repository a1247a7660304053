#include <algorithm>
#include <cmath>

#include "imi/common/errors.hpp"
#include "imi/stimuli/exemplars.hpp"

namespace imi::stimuli {
namespace {

// t unreserved positions of `order` closest to `target`; ties to lower id.
std::vector<std::string> nearest(const std::vector<std::size_t>& order, const std::vector<std::string>& ids,
                                 std::size_t target, std::size_t t, std::set<std::string>& reserved) {
  std::vector<std::size_t> positions;
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (!reserved.count(ids[order[p]])) positions.push_back(p);
  }
  if (positions.size() < t) {
    throw ConfigError("only " + std::to_string(positions.size()) + " unreserved images left; need " +
                      std::to_string(t));
  }
  auto distance = [&](std::size_t p) { return p > target ? p - target : target - p; };
  std::sort(positions.begin(), positions.end(), [&](std::size_t a, std::size_t b) {
    if (distance(a) != distance(b)) return distance(a) < distance(b);
    return ids[order[a]] < ids[order[b]];
  });
  std::vector<std::string> picked;
  for (std::size_t k = 0; k < t; ++k) {
    picked.push_back(ids[order[positions[k]]]);
    reserved.insert(picked.back());
  }
  return picked;
}

}  // namespace

DifficultyQueries difficulty_queries(const ActivationTable& table, const UnitAddress& unit,
                                     const DifficultyLevel& level, std::size_t t,
                                     const std::set<std::string>& reserved) {
  if (!level.query_percentile) {
    auto sel = select_exemplars(table, unit, t);
    return {sel.pos_queries, sel.neg_queries};
  }
  const double q = *level.query_percentile;
  if (!(q > 0.0 && q < 100.0)) throw ConfigError("query percentile must lie in (0, 100)");
  const auto column = table.column(unit);
  const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
  if (column.empty() || *lo == *hi) {
    throw DegenerateError("unit " + unit.to_string() + " has identical activations on every image; "
                          "percentiles are undefined");
  }
  const auto order = ascending_order(column, table.image_ids);
  std::set<std::string> taken = reserved;
  DifficultyQueries out;
  out.positive = nearest(order, table.image_ids, percentile_index(q, order.size()), t, taken);
  out.negative = nearest(order, table.image_ids, percentile_index(100.0 - q, order.size()), t, taken);
  return out;
}

}  // namespace imi::stimuli
