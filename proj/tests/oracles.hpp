#pragma once

// Brute-force statistics used to check the analysis code. Written from the
// textbook definitions and deliberately slow.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "imi/common/random.hpp"

namespace imi::testing {

inline std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

struct SpearmanOracle {
  double rho = 0.0;
  double p_value = 1.0;
};

/// Rank correlation with its two-sided p from every permutation of y.
inline SpearmanOracle spearman_by_enumeration(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = naive_ranks(x);
  auto ry = naive_ranks(y);
  SpearmanOracle o;
  o.rho = naive_pearson(rx, ry);
  std::sort(ry.begin(), ry.end());
  std::size_t hits = 0, total = 0;
  do {
    ++total;
    if (std::fabs(naive_pearson(rx, ry)) >= std::fabs(o.rho) - 1e-12) ++hits;
  } while (std::next_permutation(ry.begin(), ry.end()));
  o.p_value = static_cast<double>(hits) / static_cast<double>(total);
  return o;
}

/// Step-down Holm from the definition: the adjusted value of the j-th
/// smallest p is the running maximum of min(1, (m - i) p_(i)) for i <= j.
inline std::vector<double> holm_by_definition(const std::vector<double>& p) {
  const std::size_t m = p.size();
  std::vector<double> out(m);
  for (std::size_t a = 0; a < m; ++a) {
    // Position of p[a] in a stable ascending order.
    double best = 0.0;
    for (std::size_t b = 0; b < m; ++b) {
      const bool before = p[b] < p[a] || (p[b] == p[a] && b <= a);
      if (!before) continue;
      std::size_t rank = 0;  // 0-based position of p[b]
      for (std::size_t c = 0; c < m; ++c) {
        if (p[c] < p[b] || (p[c] == p[b] && c < b)) ++rank;
      }
      best = std::max(best, std::min(1.0, static_cast<double>(m - rank) * p[b]));
    }
    out[a] = best;
  }
  return out;
}

/// Conover pairwise statistics (|t| per pair, pairs in (0,1), (0,2), ...
/// order) for a given assignment of pooled ranks to groups.
inline std::vector<double> conover_abs_t(const std::vector<double>& ranks, const std::vector<std::size_t>& group,
                                         std::size_t k) {
  const double n = static_cast<double>(ranks.size());
  std::vector<double> sum(k, 0.0), size(k, 0.0);
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    sum[group[i]] += ranks[i];
    size[group[i]] += 1.0;
  }
  double ss = 0.0;
  for (double r : ranks) ss += r * r;
  const double s2 = (ss - n * (n + 1) * (n + 1) / 4.0) / (n - 1.0);
  double h = 0.0;
  for (std::size_t g = 0; g < k; ++g) h += sum[g] * sum[g] / size[g];
  h = (h - n * (n + 1) * (n + 1) / 4.0) / s2;
  const double scale = s2 * (n - 1.0 - h) / (n - static_cast<double>(k));
  std::vector<double> t;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double d = sum[i] / size[i] - sum[j] / size[j];
      t.push_back(std::fabs(d) / std::sqrt(scale * (1.0 / size[i] + 1.0 / size[j])));
    }
  }
  return t;
}

/// Raw permutation p-values of the Conover statistics: group labels are
/// shuffled `n_perm` times over the pooled ranks.
inline std::vector<double> conover_permutation_raw(const std::vector<std::vector<double>>& groups, std::size_t n_perm,
                                               std::uint64_t seed) {
  std::vector<double> all;
  std::vector<std::size_t> label;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (double v : groups[g]) {
      all.push_back(v);
      label.push_back(g);
    }
  }
  const auto ranks = naive_ranks(all);
  const auto observed = conover_abs_t(ranks, label, groups.size());
  std::vector<std::size_t> hits(observed.size(), 0);
  Rng rng(seed);
  for (std::size_t p = 0; p < n_perm; ++p) {
    rng.shuffle(label);
    const auto t = conover_abs_t(ranks, label, groups.size());
    for (std::size_t q = 0; q < t.size(); ++q) {
      if (!(t[q] < observed[q] - 1e-12)) ++hits[q];
    }
  }
  std::vector<double> raw;
  for (auto h : hits) raw.push_back((static_cast<double>(h) + 1.0) / (static_cast<double>(n_perm) + 1.0));
  return raw;
}

/// Holm-adjusted permutation p-values of the Conover statistics.
inline std::vector<double> conover_permutation(const std::vector<std::vector<double>>& groups, std::size_t n_perm,
                                               std::uint64_t seed) {
  return holm_by_definition(conover_permutation_raw(groups, n_perm, seed));
}

}  // namespace imi::testing
