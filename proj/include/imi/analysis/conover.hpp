#pragma once

#include <string>
#include <vector>

namespace imi::analysis {

struct StarThresholds {
  double one = 0.05;
  double two = 0.01;
  double three = 0.001;
};

/// "***", "**", "*" or "ns".
std::string significance_stars(double p, const StarThresholds& thresholds = {});

/// Holm step-down adjustment; results are clipped to 1 and monotone in the
/// raw p-values.
std::vector<double> holm_adjust(const std::vector<double>& p_values);

struct KruskalWallis {
  double h = 0.0;        ///< tie-corrected statistic
  double p_value = 1.0;  ///< chi-square with k - 1 degrees of freedom
};

KruskalWallis kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct PairwiseComparison {
  std::size_t first = 0;
  std::size_t second = 0;
  double mean_rank_difference = 0.0;
  double t_statistic = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  std::string stars;
};

struct ConoverResult {
  std::vector<std::string> names;
  KruskalWallis kruskal;
  std::vector<PairwiseComparison> pairs;  ///< (0,1), (0,2), ..., (k-2,k-1)
  std::vector<std::vector<double>> p_matrix;  ///< adjusted; 1 on the diagonal
};

/// Conover-Iman pairwise comparisons on pooled average ranks (t with N - k
/// degrees of freedom, variance scaled by (N - 1 - H) / (N - k)) followed by
/// Holm adjustment. All-identical data yields p = 1 everywhere.
ConoverResult conover_holm(const std::vector<std::vector<double>>& groups, std::vector<std::string> names = {},
                           const StarThresholds& thresholds = {});

}  // namespace imi::analysis
