#pragma once

#include <functional>
#include <vector>

#include "imi/common/errors.hpp"
#include "imi/featviz/synthesize.hpp"

namespace imi::featviz {

/// Raised when the undiversified visualisation is weaker than the natural
/// extreme it must beat.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

struct DiversitySearchConfig {
  double start = 1.0;
  double factor = 10.0;
  std::size_t bisection_steps = 6;
  /// Cap on exponential probes; when every probe up to the cap is feasible
  /// the largest one is returned.
  std::size_t max_exponential_probes = 12;
};

struct SearchProbe {
  double lambda = 0.0;
  /// Weakest batch activation (minimum for max-visualisations, maximum for
  /// min-visualisations).
  double achieved = 0.0;
  bool feasible = false;
};

struct DiversitySearchResult {
  double lambda_star = 0.0;
  SearchProbe baseline;  ///< the lambda = 0 check
  std::vector<SearchProbe> exponential_trace;
  std::vector<SearchProbe> binary_trace;
  /// (lambda, achieved) for every feasible probe, baseline included.
  std::vector<std::pair<double, double>> feasible_probes;
  SynthesisResult images;  ///< the batch generated at lambda_star
};

using Prober = std::function<SynthesisResult(double lambda)>;

/// Feasible(lambda) := every image in the batch is at least as extreme as
/// `natural_extreme` (>= for max, <= for min). Asserts feasibility at 0,
/// probes start, start*factor, ... until the first infeasible value, then
/// bisects `bisection_steps` times between the last feasible and first
/// infeasible value and returns the largest feasible value probed. If the
/// very first exponential probe fails the result is 0.
DiversitySearchResult search_diversity(const Prober& probe, Sign sign, double natural_extreme,
                                       const DiversitySearchConfig& config = {});

DiversitySearchResult search_diversity(const Backend& model, const UnitAddress& unit, Sign sign,
                                       double natural_extreme, const FeatureVizConfig& config,
                                       const DiversitySearchConfig& search = {});

}  // namespace imi::featviz
