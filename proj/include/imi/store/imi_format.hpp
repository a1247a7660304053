#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "imi/model/model_spec.hpp"
#include "imi/stimuli/types.hpp"

namespace imi::store {

inline constexpr int kImiVersion = 1;

enum class Side { top, bottom };
std::string_view to_string(Side side);
Side parse_side(std::string_view text);

struct StimulusImage {
  std::string path;       ///< relative to the images/ root
  std::string source_id;  ///< dataset image id, or a synthetic id for visualisations
  double activation = 0.0;
};

/// The images of one (unit, condition, difficulty, instance) trial.
struct StimulusEntry {
  UnitAddress unit;
  stimuli::Condition condition = stimuli::Condition::natural;
  stimuli::Difficulty difficulty = stimuli::Difficulty::easy;
  std::size_t instance_index = 0;
  std::optional<double> query_percentile;
  std::vector<StimulusImage> positive_references;
  std::vector<StimulusImage> negative_references;
  StimulusImage positive_query;
  StimulusImage negative_query;
};

/// Catch and practice trials: same layout, not tied to a sampled unit.
struct FixedTrial {
  std::string trial_key;
  std::vector<StimulusImage> positive_references;
  std::vector<StimulusImage> negative_references;
  StimulusImage positive_query;
  StimulusImage negative_query;
};

struct FeatvizRecord {
  UnitAddress unit;
  std::string sign;  ///< "max" or "min"
  double lambda = 0.0;
  /// False when even the undiversified batch missed the natural extreme;
  /// the lambda = 0 batch is then used as is.
  bool feasible = true;
  std::size_t steps = 0;
  bool truncated = false;
  std::uint64_t seed = 0;
  double natural_extreme = 0.0;
  std::vector<double> final_activations;
  std::vector<std::string> image_paths;
};

struct StimulusManifest {
  ModelSpec model;
  std::string dataset_id;
  std::string config_hash;
  /// Ordered as in the model; used for relative layer positions.
  std::vector<std::string> eligible_layers;
  std::vector<UnitAddress> units;
  std::vector<StimulusEntry> entries;
  std::vector<FixedTrial> catch_trials;
  std::vector<FixedTrial> practice_trials;
  std::vector<FeatvizRecord> featviz;

  const StimulusEntry* find(const UnitAddress& unit, stimuli::Condition condition,
                            stimuli::Difficulty difficulty, std::size_t instance) const;
  /// Distinct image paths in sorted order.
  std::vector<std::string> image_paths() const;
  /// Unique units and entries, nine references per side, non-empty paths.
  void validate() const;
};

struct ImiResponseRecord {
  std::string model_id;
  std::string layer_id;
  std::size_t channel_index = 0;
  stimuli::Condition condition = stimuli::Condition::natural;
  stimuli::Difficulty difficulty = stimuli::Difficulty::easy;
  std::size_t instance_index = 0;
  std::string participant_id;
  std::string session_id;
  std::size_t trial_index = 0;
  Side choice = Side::top;
  Side positive_side = Side::top;
  bool correct = false;
  int confidence = 1;
  double reaction_time_ms = 0.0;
  bool quality_passed = false;
  std::vector<std::string> failed_checks;

  UnitAddress unit() const { return {model_id, layer_id, channel_index}; }
  bool operator==(const ImiResponseRecord&) const = default;
};

void to_json(nlohmann::json& j, const StimulusImage& v);
void from_json(const nlohmann::json& j, StimulusImage& v);
void to_json(nlohmann::json& j, const StimulusManifest& v);
void from_json(const nlohmann::json& j, StimulusManifest& v);
void to_json(nlohmann::json& j, const ImiResponseRecord& v);
void from_json(const nlohmann::json& j, ImiResponseRecord& v);

/// Checks record invariants and that every record resolves in the manifest.
/// Throws ValidationError listing each offender.
void validate_records(const std::vector<ImiResponseRecord>& records, const StimulusManifest& manifest);

void write_manifest(const StimulusManifest& manifest, const std::filesystem::path& path);
StimulusManifest read_manifest(const std::filesystem::path& path);

/// Writes responses.jsonl, manifest.json and images/ (copied from
/// `image_root`) into `directory`. Output bytes depend only on the inputs.
void write_dataset(const std::vector<ImiResponseRecord>& records, const StimulusManifest& manifest,
                   const std::filesystem::path& image_root, const std::filesystem::path& directory);

struct Dataset {
  std::vector<ImiResponseRecord> records;
  StimulusManifest manifest;
};

/// Reads and fully validates a dataset directory. Malformed or truncated
/// lines are reported with their 1-based line number.
Dataset read_dataset(const std::filesystem::path& directory);

struct Partition {
  std::vector<ImiResponseRecord> main;
  std::vector<ImiResponseRecord> development;
};

Partition partition_quality(const std::vector<ImiResponseRecord>& records);

enum class GroupKey { model, layer, unit };

/// Grouping helper for user-defined splits ("refcnn", "refcnn.conv2",
/// "refcnn.conv2.3").
std::map<std::string, std::vector<ImiResponseRecord>> group_records(const std::vector<ImiResponseRecord>& records,
                                                                     GroupKey key);

}  // namespace imi::store
