#include "imi/analysis/conover.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "imi/analysis/ranks.hpp"
#include "imi/common/errors.hpp"

namespace imi::analysis {

std::string significance_stars(double p, const StarThresholds& t) {
  if (p < t.three) return "***";
  if (p < t.two) return "**";
  if (p < t.one) return "*";
  return "ns";
}

std::vector<double> holm_adjust(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double v = std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
    running = std::max(running, v);
    adjusted[order[k]] = running;
  }
  return adjusted;
}

namespace {

struct Pooled {
  std::vector<double> ranks;
  std::vector<std::size_t> group;
  std::vector<std::size_t> sizes;
  std::size_t n = 0;
};

Pooled pool(const std::vector<std::vector<double>>& groups) {
  Pooled p;
  std::vector<double> all;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    p.sizes.push_back(groups[g].size());
    for (double v : groups[g]) {
      if (!std::isfinite(v)) throw NumericError("rank test input contains a non-finite value");
      all.push_back(v);
      p.group.push_back(g);
    }
  }
  p.n = all.size();
  p.ranks = average_ranks(all);
  return p;
}

double kw_h(const Pooled& p, const std::vector<double>& mean_ranks, double ties) {
  const double n = static_cast<double>(p.n);
  double h = 0.0;
  for (std::size_t g = 0; g < p.sizes.size(); ++g) {
    const double d = mean_ranks[g] - (n + 1.0) / 2.0;
    h += static_cast<double>(p.sizes[g]) * d * d;
  }
  h *= 12.0 / (n * (n + 1.0));
  const double correction = 1.0 - ties / (n * n * n - n);
  return correction > 0.0 ? h / correction : 0.0;
}

std::vector<double> group_mean_ranks(const Pooled& p) {
  std::vector<double> sums(p.sizes.size(), 0.0);
  for (std::size_t i = 0; i < p.n; ++i) sums[p.group[i]] += p.ranks[i];
  for (std::size_t g = 0; g < sums.size(); ++g) sums[g] /= static_cast<double>(p.sizes[g]);
  return sums;
}

}  // namespace

KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ConfigError("Kruskal-Wallis needs at least two groups");
  const Pooled p = pool(groups);
  std::vector<double> all;
  for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
  KruskalWallis kw;
  kw.h = kw_h(p, group_mean_ranks(p), tie_term(all));
  const boost::math::chi_squared chi(static_cast<double>(groups.size() - 1));
  kw.p_value = kw.h > 0.0 ? boost::math::cdf(boost::math::complement(chi, kw.h)) : 1.0;
  return kw;
}

ConoverResult conover_holm(const std::vector<std::vector<double>>& groups, std::vector<std::string> names,
                           const StarThresholds& thresholds) {
  const std::size_t k = groups.size();
  if (k < 2) throw ConfigError("pairwise comparison needs at least two groups");
  for (const auto& g : groups) {
    if (g.size() < 2) throw ConfigError("every group needs at least two units");
  }
  if (names.empty()) {
    for (std::size_t g = 0; g < k; ++g) names.push_back("group" + std::to_string(g));
  }
  if (names.size() != k) throw ConfigError("one name per group required");

  ConoverResult out;
  out.names = std::move(names);
  out.kruskal = kruskal_wallis(groups);
  const Pooled p = pool(groups);
  const double n = static_cast<double>(p.n);
  const std::vector<double> mr = group_mean_ranks(p);

  double sum_sq = 0.0;
  for (double r : p.ranks) sum_sq += r * r;
  const double s2 = (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0);
  const double df = n - static_cast<double>(k);
  const double scale = s2 * (n - 1.0 - out.kruskal.h) / df;
  const boost::math::students_t t_dist(df);

  std::vector<double> raw;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      PairwiseComparison c;
      c.first = i;
      c.second = j;
      c.mean_rank_difference = mr[i] - mr[j];
      const double se2 = scale * (1.0 / static_cast<double>(p.sizes[i]) + 1.0 / static_cast<double>(p.sizes[j]));
      if (s2 <= 0.0 || c.mean_rank_difference == 0.0) {
        c.t_statistic = 0.0;
        c.p_raw = 1.0;
      } else if (se2 <= 0.0) {
        c.t_statistic = std::copysign(INFINITY, c.mean_rank_difference);
        c.p_raw = 0.0;
      } else {
        c.t_statistic = c.mean_rank_difference / std::sqrt(se2);
        c.p_raw = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(t_dist, std::fabs(c.t_statistic))));
      }
      raw.push_back(c.p_raw);
      out.pairs.push_back(c);
    }
  }
  const auto adjusted = holm_adjust(raw);
  out.p_matrix.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t q = 0; q < out.pairs.size(); ++q) {
    auto& c = out.pairs[q];
    c.p_adjusted = adjusted[q];
    c.stars = significance_stars(c.p_adjusted, thresholds);
    out.p_matrix[c.first][c.second] = out.p_matrix[c.second][c.first] = c.p_adjusted;
  }
  return out;
}

}  // namespace imi::analysis
