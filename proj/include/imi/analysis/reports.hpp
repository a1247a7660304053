#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "imi/analysis/power.hpp"
#include "imi/model/backend.hpp"
#include "imi/model/dataset.hpp"
#include "imi/store/imi_format.hpp"

namespace imi::analysis {

struct AnalysisOptions {
  std::uint64_t seed = 0;
  std::size_t n_resamples = 10000;
  /// Analyse every record instead of the quality-passing partition.
  bool include_development = false;
  /// Optional external per-model metric for score_vs_metric.
  std::map<std::string, double> external_metric;
  /// When both are set, activation-map predictors are computed.
  const Backend* model = nullptr;
  const ImageDataset* images = nullptr;
  PowerParams power;
  std::string config_hash;
};

/// Runs every analysis on the dataset and writes one CSV per table plus
/// summary.json into `out_dir`. Returns the summary. Throws
/// DependencyError when there is nothing to analyse.
nlohmann::json write_reports(const store::Dataset& dataset, const AnalysisOptions& options,
                             const std::filesystem::path& out_dir);

}  // namespace imi::analysis
