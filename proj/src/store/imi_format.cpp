#include "imi/store/imi_format.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "imi/common/errors.hpp"
#include "imi/model/json_io.hpp"

namespace imi::store {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Side side) { return side == Side::top ? "top" : "bottom"; }

Side parse_side(std::string_view text) {
  if (text == "top") return Side::top;
  if (text == "bottom") return Side::bottom;
  throw ValidationError("side must be 'top' or 'bottom', got '" + std::string(text) + "'");
}

namespace {

json unit_json(const UnitAddress& unit) {
  return json{{"layer_id", unit.layer_id}, {"channel_index", unit.channel_index}};
}

UnitAddress unit_from(const json& j, const std::string& model_id) {
  return {model_id, j.at("layer_id").get<std::string>(), j.at("channel_index").get<std::size_t>()};
}

json images_json(const std::vector<StimulusImage>& images) {
  json out = json::array();
  for (const auto& img : images) out.push_back(img);
  return out;
}

json fixed_json(const FixedTrial& t) {
  return json{{"trial_key", t.trial_key},
              {"positive_references", images_json(t.positive_references)},
              {"negative_references", images_json(t.negative_references)},
              {"positive_query", t.positive_query},
              {"negative_query", t.negative_query}};
}

FixedTrial fixed_from(const json& j) {
  FixedTrial t;
  j.at("trial_key").get_to(t.trial_key);
  j.at("positive_references").get_to(t.positive_references);
  j.at("negative_references").get_to(t.negative_references);
  j.at("positive_query").get_to(t.positive_query);
  j.at("negative_query").get_to(t.negative_query);
  return t;
}

void check_layout(const std::string& what, const std::vector<StimulusImage>& pos,
                  const std::vector<StimulusImage>& neg, const StimulusImage& pq, const StimulusImage& nq,
                  std::vector<std::string>& problems) {
  if (pos.size() != stimuli::kReferencesPerSide || neg.size() != stimuli::kReferencesPerSide) {
    problems.push_back(what + ": expected 9 references per side");
  }
  auto check = [&](const StimulusImage& img) {
    if (img.path.empty()) problems.push_back(what + ": empty image path");
  };
  for (const auto& img : pos) check(img);
  for (const auto& img : neg) check(img);
  check(pq);
  check(nq);
  if (pq.path == nq.path) problems.push_back(what + ": both queries use the same image");
}

std::string join(const std::vector<std::string>& items, std::size_t limit = 20) {
  std::string out;
  for (std::size_t i = 0; i < items.size() && i < limit; ++i) out += "\n  " + items[i];
  if (items.size() > limit) out += "\n  ... (" + std::to_string(items.size() - limit) + " more)";
  return out;
}

std::string entry_name(const StimulusEntry& e) {
  return e.unit.to_string() + "/" + std::string(stimuli::to_string(e.condition)) + "/" +
         std::string(stimuli::to_string(e.difficulty)) + "/" + std::to_string(e.instance_index);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::set<std::string> kManifestKeys = {"imi_version",     "model",       "dataset_id", "config_hash",
                                             "eligible_layers", "units",       "stimuli",    "catch_trials",
                                             "practice_trials", "featviz"};

}  // namespace

void to_json(json& j, const StimulusImage& v) {
  j = json{{"path", v.path}, {"source_id", v.source_id}, {"activation", v.activation}};
}

void from_json(const json& j, StimulusImage& v) {
  j.at("path").get_to(v.path);
  j.at("source_id").get_to(v.source_id);
  j.at("activation").get_to(v.activation);
}

void to_json(json& j, const StimulusManifest& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back(json{{"unit", unit_json(e.unit)},
                           {"condition", std::string(stimuli::to_string(e.condition))},
                           {"difficulty", std::string(stimuli::to_string(e.difficulty))},
                           {"instance_index", e.instance_index},
                           {"query_percentile", e.query_percentile ? json(*e.query_percentile) : json(nullptr)},
                           {"positive_references", images_json(e.positive_references)},
                           {"negative_references", images_json(e.negative_references)},
                           {"positive_query", e.positive_query},
                           {"negative_query", e.negative_query}});
  }
  json units = json::array();
  for (const auto& u : m.units) units.push_back(unit_json(u));
  json catches = json::array(), practice = json::array(), featviz = json::array();
  for (const auto& t : m.catch_trials) catches.push_back(fixed_json(t));
  for (const auto& t : m.practice_trials) practice.push_back(fixed_json(t));
  for (const auto& f : m.featviz) {
    featviz.push_back(json{{"unit", unit_json(f.unit)},
                           {"sign", f.sign},
                           {"lambda", f.lambda},
                           {"feasible", f.feasible},
                           {"steps", f.steps},
                           {"truncated", f.truncated},
                           {"seed", f.seed},
                           {"natural_extreme", f.natural_extreme},
                           {"final_activations", f.final_activations},
                           {"image_paths", f.image_paths}});
  }
  j = json{{"imi_version", kImiVersion},
           {"model", m.model},
           {"dataset_id", m.dataset_id},
           {"config_hash", m.config_hash},
           {"eligible_layers", m.eligible_layers},
           {"units", units},
           {"stimuli", entries},
           {"catch_trials", catches},
           {"practice_trials", practice},
           {"featviz", featviz}};
}

void from_json(const json& j, StimulusManifest& m) {
  if (!j.is_object()) throw ValidationError("manifest must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kManifestKeys.contains(key)) {
      throw ValidationError("unknown top-level manifest key '" + key + "'; this reader understands imi_version " +
                            std::to_string(kImiVersion));
    }
  }
  if (!j.contains("imi_version")) throw ValidationError("manifest lacks the mandatory imi_version field");
  const int version = j.at("imi_version").get<int>();
  if (version != kImiVersion) {
    throw ValidationError("unsupported imi_version " + std::to_string(version) + "; expected " +
                          std::to_string(kImiVersion));
  }
  j.at("model").get_to(m.model);
  const std::string& model_id = m.model.model_id;
  j.at("dataset_id").get_to(m.dataset_id);
  j.at("config_hash").get_to(m.config_hash);
  j.at("eligible_layers").get_to(m.eligible_layers);
  m.units.clear();
  for (const auto& u : j.at("units")) m.units.push_back(unit_from(u, model_id));
  m.entries.clear();
  for (const auto& e : j.at("stimuli")) {
    StimulusEntry s;
    s.unit = unit_from(e.at("unit"), model_id);
    s.condition = stimuli::parse_condition(e.at("condition").get<std::string>());
    s.difficulty = stimuli::parse_difficulty(e.at("difficulty").get<std::string>());
    e.at("instance_index").get_to(s.instance_index);
    if (!e.at("query_percentile").is_null()) s.query_percentile = e.at("query_percentile").get<double>();
    e.at("positive_references").get_to(s.positive_references);
    e.at("negative_references").get_to(s.negative_references);
    e.at("positive_query").get_to(s.positive_query);
    e.at("negative_query").get_to(s.negative_query);
    m.entries.push_back(std::move(s));
  }
  m.catch_trials.clear();
  m.practice_trials.clear();
  for (const auto& t : j.at("catch_trials")) m.catch_trials.push_back(fixed_from(t));
  for (const auto& t : j.at("practice_trials")) m.practice_trials.push_back(fixed_from(t));
  m.featviz.clear();
  for (const auto& f : j.at("featviz")) {
    FeatvizRecord r;
    r.unit = unit_from(f.at("unit"), model_id);
    f.at("sign").get_to(r.sign);
    f.at("lambda").get_to(r.lambda);
    f.at("feasible").get_to(r.feasible);
    f.at("steps").get_to(r.steps);
    f.at("truncated").get_to(r.truncated);
    f.at("seed").get_to(r.seed);
    f.at("natural_extreme").get_to(r.natural_extreme);
    f.at("final_activations").get_to(r.final_activations);
    f.at("image_paths").get_to(r.image_paths);
    m.featviz.push_back(std::move(r));
  }
}

void to_json(json& j, const ImiResponseRecord& r) {
  j = json{{"model_id", r.model_id},
           {"unit", json{{"layer_id", r.layer_id}, {"channel_index", r.channel_index}}},
           {"condition", std::string(stimuli::to_string(r.condition))},
           {"difficulty", std::string(stimuli::to_string(r.difficulty))},
           {"instance_index", r.instance_index},
           {"participant_id", r.participant_id},
           {"session_id", r.session_id},
           {"trial_index", r.trial_index},
           {"choice", std::string(to_string(r.choice))},
           {"positive_side", std::string(to_string(r.positive_side))},
           {"correct", r.correct},
           {"confidence", r.confidence},
           {"reaction_time_ms", r.reaction_time_ms},
           {"quality_passed", r.quality_passed},
           {"failed_checks", r.failed_checks}};
}

void from_json(const json& j, ImiResponseRecord& r) {
  static const std::set<std::string> keys = {"model_id",      "unit",       "condition",       "difficulty",
                                             "instance_index", "participant_id", "session_id", "trial_index",
                                             "choice",        "positive_side", "correct",      "confidence",
                                             "reaction_time_ms", "quality_passed", "failed_checks"};
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) throw ValidationError("unknown record key '" + key + "'");
  }
  j.at("model_id").get_to(r.model_id);
  j.at("unit").at("layer_id").get_to(r.layer_id);
  j.at("unit").at("channel_index").get_to(r.channel_index);
  r.condition = stimuli::parse_condition(j.at("condition").get<std::string>());
  r.difficulty = stimuli::parse_difficulty(j.at("difficulty").get<std::string>());
  j.at("instance_index").get_to(r.instance_index);
  j.at("participant_id").get_to(r.participant_id);
  j.at("session_id").get_to(r.session_id);
  j.at("trial_index").get_to(r.trial_index);
  r.choice = parse_side(j.at("choice").get<std::string>());
  r.positive_side = parse_side(j.at("positive_side").get<std::string>());
  j.at("correct").get_to(r.correct);
  j.at("confidence").get_to(r.confidence);
  j.at("reaction_time_ms").get_to(r.reaction_time_ms);
  j.at("quality_passed").get_to(r.quality_passed);
  j.at("failed_checks").get_to(r.failed_checks);
}

const StimulusEntry* StimulusManifest::find(const UnitAddress& unit, stimuli::Condition condition,
                                            stimuli::Difficulty difficulty, std::size_t instance) const {
  for (const auto& e : entries) {
    if (e.unit == unit && e.condition == condition && e.difficulty == difficulty && e.instance_index == instance) {
      return &e;
    }
  }
  return nullptr;
}

std::vector<std::string> StimulusManifest::image_paths() const {
  std::set<std::string> paths;
  auto add = [&](const std::vector<StimulusImage>& pos, const std::vector<StimulusImage>& neg,
                 const StimulusImage& pq, const StimulusImage& nq) {
    for (const auto& i : pos) paths.insert(i.path);
    for (const auto& i : neg) paths.insert(i.path);
    paths.insert(pq.path);
    paths.insert(nq.path);
  };
  for (const auto& e : entries) add(e.positive_references, e.negative_references, e.positive_query, e.negative_query);
  for (const auto& t : catch_trials) add(t.positive_references, t.negative_references, t.positive_query, t.negative_query);
  for (const auto& t : practice_trials) {
    add(t.positive_references, t.negative_references, t.positive_query, t.negative_query);
  }
  for (const auto& f : featviz) paths.insert(f.image_paths.begin(), f.image_paths.end());
  return {paths.begin(), paths.end()};
}

void StimulusManifest::validate() const {
  std::vector<std::string> problems;
  std::set<UnitAddress> unit_set;
  for (const auto& u : units) {
    if (u.model_id != model.model_id) problems.push_back("unit " + u.to_string() + " belongs to another model");
    if (!unit_set.insert(u).second) problems.push_back("duplicate unit " + u.to_string());
  }
  std::set<std::string> names;
  for (const auto& e : entries) {
    const std::string name = entry_name(e);
    if (!names.insert(name).second) problems.push_back("duplicate stimulus entry " + name);
    if (!unit_set.contains(e.unit)) problems.push_back(name + ": unit not listed in units");
    check_layout(name, e.positive_references, e.negative_references, e.positive_query, e.negative_query, problems);
  }
  std::set<std::string> keys;
  for (const auto* group : {&catch_trials, &practice_trials}) {
    for (const auto& t : *group) {
      if (!keys.insert(t.trial_key).second) problems.push_back("duplicate trial key " + t.trial_key);
      check_layout(t.trial_key, t.positive_references, t.negative_references, t.positive_query, t.negative_query,
                   problems);
    }
  }
  if (!problems.empty()) throw ValidationError("invalid stimulus manifest:" + join(problems));
}

void validate_records(const std::vector<ImiResponseRecord>& records, const StimulusManifest& manifest) {
  std::vector<std::string> problems;
  std::set<std::tuple<std::string, std::size_t>> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = "record " + std::to_string(i + 1);
    if (r.model_id != manifest.model.model_id) problems.push_back(where + ": model '" + r.model_id + "' not in manifest");
    if (!manifest.find(r.unit(), r.condition, r.difficulty, r.instance_index)) {
      problems.push_back(where + ": no stimulus for " + r.unit().to_string() + " " +
                         std::string(stimuli::to_string(r.condition)) + "/" +
                         std::string(stimuli::to_string(r.difficulty)) + " instance " +
                         std::to_string(r.instance_index));
    }
    if (r.quality_passed != r.failed_checks.empty()) {
      problems.push_back(where + ": quality_passed disagrees with failed_checks");
    }
    if (r.correct != (r.choice == r.positive_side)) problems.push_back(where + ": correct disagrees with choice");
    if (r.confidence < 1 || r.confidence > 3) problems.push_back(where + ": confidence outside 1..3");
    if (!(r.reaction_time_ms > 0.0)) problems.push_back(where + ": reaction time must be positive");
    if (!seen.emplace(r.session_id, r.trial_index).second) {
      problems.push_back(where + ": duplicate response for session " + r.session_id + " trial " +
                         std::to_string(r.trial_index));
    }
  }
  if (!problems.empty()) throw ValidationError("invalid response records:" + join(problems));
}

void write_manifest(const StimulusManifest& manifest, const fs::path& path) {
  write_text(path, json(manifest).dump(2) + "\n");
}

StimulusManifest read_manifest(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed manifest " + path.string() + ": " + e.what());
  }
  StimulusManifest m;
  try {
    m = j.get<StimulusManifest>();
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path.string() + " does not match the schema: " + e.what());
  }
  m.validate();
  return m;
}

void write_dataset(const std::vector<ImiResponseRecord>& records, const StimulusManifest& manifest,
                   const fs::path& image_root, const fs::path& directory) {
  manifest.validate();
  validate_records(records, manifest);
  const auto paths = manifest.image_paths();
  std::vector<std::string> missing;
  for (const auto& p : paths) {
    if (!fs::exists(image_root / p)) missing.push_back(p);
  }
  if (!missing.empty()) throw ValidationError("stimulus images missing under " + image_root.string() + ":" + join(missing));

  fs::create_directories(directory);
  std::string lines;
  for (const auto& r : records) lines += json(r).dump() + "\n";
  write_text(directory / "responses.jsonl", lines);
  write_manifest(manifest, directory / "manifest.json");
  const fs::path images = directory / "images";
  const bool same_root = fs::exists(images) && fs::exists(image_root) && fs::equivalent(images, image_root);
  if (!same_root) {
    for (const auto& p : paths) {
      const fs::path target = images / p;
      fs::create_directories(target.parent_path());
      fs::copy_file(image_root / p, target, fs::copy_options::overwrite_existing);
    }
  }
}

Dataset read_dataset(const fs::path& directory) {
  Dataset out;
  const fs::path manifest_path = directory / "manifest.json";
  const fs::path responses_path = directory / "responses.jsonl";
  if (!fs::exists(manifest_path)) throw IoError("dataset lacks " + manifest_path.string());
  if (!fs::exists(responses_path)) throw IoError("dataset lacks " + responses_path.string());
  out.manifest = read_manifest(manifest_path);

  const std::string text = read_text(responses_path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) {
      throw ValidationError("responses.jsonl line " + std::to_string(line_no) + " is truncated (no line terminator)");
    }
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    try {
      out.records.push_back(json::parse(line).get<ImiResponseRecord>());
    } catch (const json::exception& e) {
      throw ValidationError("responses.jsonl line " + std::to_string(line_no) + " is malformed: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("responses.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_records(out.records, out.manifest);
  return out;
}

Partition partition_quality(const std::vector<ImiResponseRecord>& records) {
  Partition p;
  for (const auto& r : records) (r.quality_passed ? p.main : p.development).push_back(r);
  return p;
}

std::map<std::string, std::vector<ImiResponseRecord>> group_records(const std::vector<ImiResponseRecord>& records,
                                                                     GroupKey key) {
  std::map<std::string, std::vector<ImiResponseRecord>> groups;
  for (const auto& r : records) {
    std::string k = r.model_id;
    if (key != GroupKey::model) k += "." + r.layer_id;
    if (key == GroupKey::unit) k += "." + std::to_string(r.channel_index);
    groups[k].push_back(r);
  }
  return groups;
}

}  // namespace imi::store
