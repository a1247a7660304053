#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imi/analysis/power.hpp"
#include "imi/featviz/search.hpp"
#include "imi/sampling/unit_sampler.hpp"
#include "imi/service/experiment.hpp"
#include "imi/sim/participant.hpp"

namespace imi::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> units;
  std::optional<stimuli::Condition> condition;
  std::optional<stimuli::Difficulty> difficulty;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out;

  // [model]
  std::string backend = "refcnn";  ///< "refcnn" or "file"
  std::uint64_t model_seed = 0;
  std::filesystem::path model_json;
  std::filesystem::path activations_csv;
  std::filesystem::path units_json;

  // [dataset]
  std::string dataset_source = "toy";  ///< "toy" or "png"
  std::size_t dataset_size = 1000;
  std::uint64_t dataset_seed = 0;
  std::filesystem::path dataset_path;

  // [units]
  sampling::SamplingConfig units;

  // [stimuli]
  std::size_t t = 4;
  std::vector<stimuli::Condition> conditions;
  std::vector<stimuli::Difficulty> difficulties;
  std::size_t catch_set_size = 5;
  std::uint64_t stimulus_seed = 0;
  std::size_t workers = 0;  ///< 0 = hardware concurrency

  // [featviz]
  featviz::FeatureVizConfig featviz;
  featviz::DiversitySearchConfig search;

  // [plan], [service], [quality]
  service::ServiceConfig service;
  std::string host = "127.0.0.1";
  int port = 8080;

  // [simulate]
  std::size_t wave_size = 9;
  double failure_rate = 0.0;
  std::uint64_t simulate_seed = 0;
  sim::ParticipantProfile participant;

  // [analysis]
  std::size_t n_resamples = 10000;
  std::uint64_t analysis_seed = 0;
  std::filesystem::path metric_csv;
  analysis::PowerParams power;

  /// SHA-256 of the effective configuration (after overrides).
  std::string hash;

  std::filesystem::path stimuli_dir() const { return out / "stimuli"; }
  std::filesystem::path dataset_dir() const { return out / "dataset"; }
  std::filesystem::path reports_dir() const { return out / "reports"; }
  std::filesystem::path export_dir() const { return out / "imi_export"; }
};

/// Parses a sectioned key = value file (INI). [run] seed is mandatory;
/// every other seed defaults to a value derived from it. Unknown sections
/// or keys are rejected. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});
RunConfig parse_config(const std::string& text, const Overrides& overrides = {},
                       const std::filesystem::path& base_dir = ".");

}  // namespace imi::cli
