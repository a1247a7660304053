#include "imi/featviz/search.hpp"

#include <algorithm>

namespace imi::featviz {
namespace {

SearchProbe assess(double lambda, const SynthesisResult& r, Sign sign, double natural_extreme) {
  SearchProbe p;
  p.lambda = lambda;
  if (r.final_activations.empty()) throw InfeasibleError("probe returned an empty batch");
  if (sign == Sign::max) {
    p.achieved = *std::min_element(r.final_activations.begin(), r.final_activations.end());
    p.feasible = p.achieved >= natural_extreme;
  } else {
    p.achieved = *std::max_element(r.final_activations.begin(), r.final_activations.end());
    p.feasible = p.achieved <= natural_extreme;
  }
  return p;
}

}  // namespace

DiversitySearchResult search_diversity(const Prober& probe, Sign sign, double natural_extreme,
                                       const DiversitySearchConfig& config) {
  if (!(config.start > 0.0) || !(config.factor > 1.0)) {
    throw ConfigError("diversity search needs start > 0 and factor > 1");
  }
  DiversitySearchResult out;
  SynthesisResult best = probe(0.0);
  out.baseline = assess(0.0, best, sign, natural_extreme);
  if (!out.baseline.feasible) {
    throw InfeasibleError("visualisation without diversity reached " + std::to_string(out.baseline.achieved) +
                          ", weaker than the natural extreme " + std::to_string(natural_extreme));
  }
  out.feasible_probes.emplace_back(0.0, out.baseline.achieved);

  double low = 0.0;
  double high = 0.0;
  bool bracketed = false;
  double lambda = config.start;
  for (std::size_t i = 0; i < config.max_exponential_probes; ++i, lambda *= config.factor) {
    SynthesisResult r = probe(lambda);
    const SearchProbe p = assess(lambda, r, sign, natural_extreme);
    out.exponential_trace.push_back(p);
    if (!p.feasible) {
      high = lambda;
      bracketed = true;
      break;
    }
    low = lambda;
    best = std::move(r);
    out.feasible_probes.emplace_back(lambda, p.achieved);
  }

  if (bracketed && low > 0.0) {
    for (std::size_t i = 0; i < config.bisection_steps; ++i) {
      const double mid = 0.5 * (low + high);
      SynthesisResult r = probe(mid);
      const SearchProbe p = assess(mid, r, sign, natural_extreme);
      out.binary_trace.push_back(p);
      if (p.feasible) {
        low = mid;
        best = std::move(r);
        out.feasible_probes.emplace_back(mid, p.achieved);
      } else {
        high = mid;
      }
    }
  }
  out.lambda_star = low;
  out.images = std::move(best);
  return out;
}

DiversitySearchResult search_diversity(const Backend& model, const UnitAddress& unit, Sign sign,
                                       double natural_extreme, const FeatureVizConfig& config,
                                       const DiversitySearchConfig& search) {
  Prober probe = [&](double lambda) {
    FeatureVizConfig c = config;
    c.diversity_weight = lambda;
    return synthesize(model, unit, sign, c);
  };
  return search_diversity(probe, sign, natural_extreme, search);
}

}  // namespace imi::featviz
