#include "imi/analysis/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "imi/analysis/ranks.hpp"
#include "imi/common/errors.hpp"

namespace imi::analysis {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

SpearmanResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("spearman needs equally long inputs");
  if (x.size() < 3) throw ConfigError("spearman needs at least three pairs");
  SpearmanResult r;
  r.n = x.size();
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  r.rho = pearson(rx, ry);
  if (std::isnan(r.rho)) {
    r.defined = false;
    r.rho = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.rho = std::clamp(r.rho, -1.0, 1.0);
  if (r.n <= 10) {
    r.exact = true;
    // |centred rank covariance| orders permutations exactly as |rho| does.
    const double mrx = mean(rx), mry = mean(ry);
    auto centred_cov = [&](const std::vector<double>& ys) {
      double s = 0.0;
      for (std::size_t i = 0; i < rx.size(); ++i) s += (rx[i] - mrx) * (ys[i] - mry);
      return s;
    };
    const double observed = std::fabs(centred_cov(ry));
    const double tol = 1e-9 * std::max(1.0, observed);
    std::size_t hits = 0, total = 0;
    // Enumerate permutations of positions so tied values are counted with
    // multiplicity, matching a label-permutation test.
    std::vector<std::size_t> idx(ry.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> ys(ry.size());
    do {
      for (std::size_t i = 0; i < idx.size(); ++i) ys[i] = ry[idx[i]];
      if (std::fabs(centred_cov(ys)) >= observed - tol) ++hits;
      ++total;
    } while (std::next_permutation(idx.begin(), idx.end()));
    r.p_value = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    const double df = static_cast<double>(r.n) - 2.0;
    if (std::fabs(r.rho) >= 1.0) {
      r.p_value = 0.0;
    } else {
      const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
      const boost::math::students_t dist(df);
      r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
    }
  }
  return r;
}

std::vector<LayerPositionResult> layer_position_analysis(const std::vector<UnitScore>& scores,
                                                         const std::vector<std::string>& eligible_layers) {
  std::map<std::string, std::map<std::string, std::vector<double>>> by_model;
  for (const auto& s : scores) by_model[s.unit.model_id][s.unit.layer_id].push_back(s.proportion_correct);

  std::vector<LayerPositionResult> out;
  const double denom = eligible_layers.size() > 1 ? static_cast<double>(eligible_layers.size() - 1) : 1.0;
  for (const auto& [model, layers] : by_model) {
    LayerPositionResult res;
    res.model_id = model;
    for (std::size_t i = 0; i < eligible_layers.size(); ++i) {
      const auto it = layers.find(eligible_layers[i]);
      if (it == layers.end()) continue;
      res.layers.push_back({eligible_layers[i], eligible_layers.size() > 1 ? static_cast<double>(i) / denom : 0.0,
                            mean(it->second), it->second.size()});
    }
    for (const auto& [layer, values] : layers) {
      if (std::find(eligible_layers.begin(), eligible_layers.end(), layer) == eligible_layers.end()) {
        throw ValidationError("scores reference layer '" + layer + "' outside the eligible layer ordering");
      }
    }
    if (res.layers.size() >= 3) {
      std::vector<double> pos, val;
      for (const auto& l : res.layers) {
        pos.push_back(l.position);
        val.push_back(l.mean_score);
      }
      res.correlation = spearman(pos, val);
      if (!res.correlation->defined) res.note = "correlation undefined: constant layer means";
    } else {
      res.note = "correlation undefined: fewer than three layers with scores";
    }
    out.push_back(std::move(res));
  }
  return out;
}

std::vector<PairedCorrelation> cross_condition_correlation(const std::vector<UnitScore>& natural,
                                                           const std::vector<UnitScore>& synthetic) {
  std::map<std::string, std::map<UnitAddress, std::pair<std::optional<double>, std::optional<double>>>> models;
  for (const auto& s : natural) models[s.unit.model_id][s.unit].first = s.proportion_correct;
  for (const auto& s : synthetic) models[s.unit.model_id][s.unit].second = s.proportion_correct;
  std::vector<PairedCorrelation> out;
  for (const auto& [model, units] : models) {
    PairedCorrelation pc;
    pc.group = model;
    std::size_t unmatched = 0;
    for (const auto& [unit, pair] : units) {
      if (!pair.first || !pair.second) {
        ++unmatched;
        continue;
      }
      pc.labels.push_back(unit.to_string());
      pc.x.push_back(*pair.first);
      pc.y.push_back(*pair.second);
    }
    if (unmatched > 0) pc.note = std::to_string(unmatched) + " units lack one condition and were skipped";
    if (pc.x.size() >= 3) {
      pc.correlation = spearman(pc.x, pc.y);
    } else if (pc.note.empty()) {
      pc.note = "fewer than three matched units";
    }
    out.push_back(std::move(pc));
  }
  return out;
}

PairedCorrelation score_vs_metric(const std::map<std::string, double>& model_scores,
                                  const std::map<std::string, double>& metric) {
  PairedCorrelation pc;
  pc.group = "models";
  for (const auto& [model, score] : model_scores) {
    const auto it = metric.find(model);
    if (it == metric.end()) throw ValidationError("no metric value for model '" + model + "'");
    pc.labels.push_back(model);
    pc.x.push_back(score);
    pc.y.push_back(it->second);
  }
  if (metric.size() != model_scores.size()) throw ValidationError("metric lists models without scores");
  if (pc.x.size() >= 3) {
    pc.correlation = spearman(pc.x, pc.y);
  } else {
    pc.note = "fewer than three models";
  }
  return pc;
}

}  // namespace imi::analysis
