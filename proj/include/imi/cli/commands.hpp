#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "imi/cli/config.hpp"
#include "imi/model/backend.hpp"
#include "imi/model/dataset.hpp"
#include "imi/sim/campaign.hpp"
#include "imi/store/imi_format.hpp"

namespace imi::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kConfigError = 2, kDependencyError = 3 };

/// Maps an exception from any command to its exit code.
int exit_code_for(const std::exception& error);

/// The model and images a configuration refers to.
struct Workspace {
  std::unique_ptr<Backend> backend;
  ImageDataset dataset;
};
Workspace open_workspace(const RunConfig& config);

/// Writes stimuli/manifest.json, stimuli/images/, the activation table and
/// featviz records. Returns the manifest.
store::StimulusManifest prepare_stimuli(const RunConfig& config);

/// Reads the prepared manifest or raises DependencyError naming the command
/// that produces it.
store::StimulusManifest require_manifest(const RunConfig& config);

/// Serves the experiment over HTTP until every experiment is complete or the
/// process receives SIGINT/SIGTERM, then writes the dataset.
void serve(const RunConfig& config);

struct SimulationSummary {
  sim::CampaignResult campaign;
  std::size_t records = 0;
};
/// Runs a simulated campaign against an in-process server (virtual clock)
/// and writes the dataset.
SimulationSummary simulate(const RunConfig& config);

/// Writes every report into reports/; returns the summary JSON.
nlohmann::json analyze(const RunConfig& config);

/// Copies the validated dataset into imi_export/.
void export_dataset(const RunConfig& config);

}  // namespace imi::cli
