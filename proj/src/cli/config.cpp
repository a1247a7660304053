#include "imi/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "imi/common/sha256.hpp"

namespace imi::cli {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"seed", "out"}},
    {"model", {"backend", "seed", "model_json", "activations_csv", "units_json"}},
    {"dataset", {"source", "size", "seed", "path"}},
    {"units", {"count", "exclusion", "allowlist", "seed"}},
    {"stimuli", {"t", "conditions", "difficulties", "catch_set_size", "practice_trials", "seed", "workers"}},
    {"featviz",
     {"batch_size", "min_steps", "max_steps", "window", "step_size", "augment", "jitter_px", "rotation_deg",
      "scale_min", "scale_max", "init_noise", "seed", "search_start", "search_factor", "bisection_steps",
      "max_probes"}},
    {"plan", {"responses_per_instance", "real_trials_per_session", "catch_trials_per_session"}},
    {"service", {"host", "port", "admin_token", "virtual_clock", "seed"}},
    {"quality",
     {"max_practice_attempts", "min_instruction_seconds", "min_catch_correct", "min_total_seconds",
      "max_total_seconds", "max_same_side_fraction"}},
    {"simulate",
     {"wave_size", "failure_rate", "seed", "accuracy", "accuracy_easy", "accuracy_medium", "accuracy_hard",
      "accuracy_very_hard", "accuracy_natural", "accuracy_synthetic", "catch_accuracy", "instruction_seconds"}},
    {"analysis", {"n_resamples", "seed", "metric_csv"}},
    {"power",
     {"cohens_d", "alpha", "power", "are_correction", "target_unit_sd", "trials_override", "units_chosen",
      "real_trials_per_session", "effect_mean_diff", "effect_sd"}},
};

class Reader {
 public:
  Reader(const pt::ptree& tree, fs::path base) : tree_(tree), base_(std::move(base)) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(path(key)).has_value(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return tree_.get<std::string>(path(key), fallback);
  }

  template <typename T>
  T num(const std::string& key, T fallback) const {
    const auto raw = tree_.get_optional<std::string>(path(key));
    if (!raw) return fallback;
    try {
      std::size_t used = 0;
      T value{};
      const std::string text = boost::trim_copy(*raw);
      if constexpr (std::is_floating_point_v<T>) {
        value = static_cast<T>(std::stod(text, &used));
      } else if constexpr (std::is_signed_v<T>) {
        value = static_cast<T>(std::stoll(text, &used));
      } else {
        if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
        value = static_cast<T>(std::stoull(text, &used));
      }
      if (used != text.size()) throw std::invalid_argument("trailing characters");
      return value;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has invalid numeric value '" + *raw + "'");
    }
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto raw = tree_.get_optional<std::string>(path(key));
    if (!raw) return fallback;
    const std::string v = boost::to_lower_copy(boost::trim_copy(*raw));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "' must be a boolean, got '" + *raw + "'");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> items;
    const auto raw = tree_.get_optional<std::string>(path(key));
    if (!raw) return items;
    boost::split(items, *raw, boost::is_any_of(","));
    for (auto& s : items) boost::trim(s);
    items.erase(std::remove(items.begin(), items.end(), std::string()), items.end());
    return items;
  }

  fs::path file(const std::string& key) const {
    const auto raw = tree_.get_optional<std::string>(path(key));
    if (!raw || raw->empty()) return {};
    const fs::path p(boost::trim_copy(*raw));
    return p.is_absolute() ? p : base_ / p;
  }

 private:
  static pt::ptree::path_type path(const std::string& key) { return pt::ptree::path_type(key, '.'); }
  const pt::ptree& tree_;
  fs::path base_;
};

std::string canonical(const pt::ptree& tree) {
  std::map<std::string, std::string> flat;
  for (const auto& [section, body] : tree) {
    for (const auto& [key, value] : body) {
      if (section == "run" && key == "out") continue;
      flat[section + "." + key] = boost::trim_copy(value.data());
    }
  }
  std::string out;
  for (const auto& [k, v] : flat) out += k + "=" + v + "\n";
  return out;
}

void require_exists(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ConfigError(what + " is required");
  if (!fs::exists(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
}

}  // namespace

RunConfig parse_config(const std::string& text, const Overrides& ov, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = kSchema.find(section);
    if (it == kSchema.end()) {
      if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' must be inside a section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
  }
  if (ov.seed) tree.put("run.seed", std::to_string(*ov.seed));
  if (ov.units) tree.put("units.count", std::to_string(*ov.units));
  if (ov.condition) tree.put("stimuli.conditions", std::string(stimuli::to_string(*ov.condition)));
  if (ov.difficulty) tree.put("stimuli.difficulties", std::string(stimuli::to_string(*ov.difficulty)));

  const Reader r(tree, base_dir);
  RunConfig c;
  if (!r.has("run.seed")) throw ConfigError("[run] seed is mandatory; every random stream derives from it");
  c.seed = r.num<std::uint64_t>("run.seed", 0);
  c.out = ov.out ? *ov.out : r.file("run.out");
  if (c.out.empty()) c.out = base_dir / "out";
  auto seed_for = [&](const std::string& key, std::uint64_t stream) {
    return r.num<std::uint64_t>(key, derive_seed(c.seed, stream));
  };

  c.backend = r.str("model.backend", "refcnn");
  if (c.backend != "refcnn" && c.backend != "file") throw ConfigError("model.backend must be 'refcnn' or 'file'");
  c.model_seed = seed_for("model.seed", 1);
  if (c.backend == "file") {
    c.model_json = r.file("model.model_json");
    c.activations_csv = r.file("model.activations_csv");
    c.units_json = r.file("model.units_json");
    require_exists(c.model_json, "model.model_json");
    require_exists(c.activations_csv, "model.activations_csv");
    require_exists(c.units_json, "model.units_json");
  }

  c.dataset_source = r.str("dataset.source", c.backend == "file" ? "png" : "toy");
  if (c.dataset_source != "toy" && c.dataset_source != "png") throw ConfigError("dataset.source must be 'toy' or 'png'");
  c.dataset_size = r.num<std::size_t>("dataset.size", 1000);
  c.dataset_seed = seed_for("dataset.seed", 2);
  if (c.dataset_source == "png") {
    c.dataset_path = r.file("dataset.path");
    require_exists(c.dataset_path, "dataset.path");
  }

  c.units.n_units = r.num<std::size_t>("units.count", 84);
  c.units.exclusion = r.num<std::size_t>("units.exclusion", 1);
  c.units.allowlist = r.list("units.allowlist");
  c.units.seed = seed_for("units.seed", 3);

  c.t = r.num<std::size_t>("stimuli.t", 10);
  if (c.t == 0) throw ConfigError("stimuli.t must be positive");
  for (const auto& s : r.list("stimuli.conditions")) c.conditions.push_back(stimuli::parse_condition(s));
  if (c.conditions.empty()) {
    c.conditions.push_back(stimuli::Condition::natural);
    if (c.backend == "refcnn") c.conditions.push_back(stimuli::Condition::synthetic);
  }
  if (c.backend == "file" &&
      std::find(c.conditions.begin(), c.conditions.end(), stimuli::Condition::synthetic) != c.conditions.end()) {
    throw ConfigError("the synthetic condition needs a differentiable backend; the file backend is not");
  }
  for (const auto& s : r.list("stimuli.difficulties")) c.difficulties.push_back(stimuli::parse_difficulty(s));
  if (c.difficulties.empty()) c.difficulties.push_back(stimuli::Difficulty::easy);
  c.catch_set_size = r.num<std::size_t>("stimuli.catch_set_size", 5);
  c.service.practice_trials = r.num<std::size_t>("stimuli.practice_trials", 5);
  c.stimulus_seed = seed_for("stimuli.seed", 4);
  c.workers = r.num<std::size_t>("stimuli.workers", 0);

  auto& fv = c.featviz;
  fv.batch_size = r.num<std::size_t>("featviz.batch_size", 9);
  fv.min_steps = r.num<std::size_t>("featviz.min_steps", 2500);
  fv.window = r.num<std::size_t>("featviz.window", 250);
  fv.max_steps = r.num<std::size_t>("featviz.max_steps", std::max<std::size_t>(4 * fv.min_steps, 10000));
  fv.step_size = r.num<double>("featviz.step_size", fv.step_size);
  fv.augmentation.enabled = r.flag("featviz.augment", true);
  fv.augmentation.jitter_px = r.num<int>("featviz.jitter_px", fv.augmentation.jitter_px);
  fv.augmentation.rotation_deg = r.num<double>("featviz.rotation_deg", fv.augmentation.rotation_deg);
  fv.augmentation.scale_min = r.num<double>("featviz.scale_min", fv.augmentation.scale_min);
  fv.augmentation.scale_max = r.num<double>("featviz.scale_max", fv.augmentation.scale_max);
  fv.init_noise = r.num<double>("featviz.init_noise", fv.init_noise);
  fv.seed = seed_for("featviz.seed", 5);
  c.search.start = r.num<double>("featviz.search_start", c.search.start);
  c.search.factor = r.num<double>("featviz.search_factor", c.search.factor);
  c.search.bisection_steps = r.num<std::size_t>("featviz.bisection_steps", c.search.bisection_steps);
  c.search.max_exponential_probes = r.num<std::size_t>("featviz.max_probes", c.search.max_exponential_probes);
  if (std::find(c.conditions.begin(), c.conditions.end(), stimuli::Condition::synthetic) != c.conditions.end()) {
    fv.validate();
  }

  const std::size_t per_instance = r.num<std::size_t>("plan.responses_per_instance", 3);
  const std::size_t real_trials =
      r.num<std::size_t>("plan.real_trials_per_session", std::min<std::size_t>(40, c.units.n_units));
  c.service.plan = service::RecruitmentPlan::scaled(c.units.n_units, c.t, per_instance, real_trials);
  c.service.catch_trials_per_session = r.num<std::size_t>("plan.catch_trials_per_session", 5);
  if (c.catch_set_size < c.service.catch_trials_per_session) {
    throw ConfigError("stimuli.catch_set_size must be at least plan.catch_trials_per_session");
  }
  c.host = r.str("service.host", "127.0.0.1");
  c.port = r.num<int>("service.port", 8080);
  c.service.admin_token = r.str("service.admin_token", "");
  c.service.virtual_clock = r.flag("service.virtual_clock", false);
  c.service.seed = seed_for("service.seed", 6);

  auto& q = c.service.thresholds;
  q.max_practice_attempts = r.num<std::size_t>("quality.max_practice_attempts", q.max_practice_attempts);
  q.min_instruction_seconds = r.num<double>("quality.min_instruction_seconds", q.min_instruction_seconds);
  q.min_catch_correct = r.num<std::size_t>("quality.min_catch_correct", q.min_catch_correct);
  q.min_total_seconds = r.num<double>("quality.min_total_seconds", q.min_total_seconds);
  q.max_total_seconds = r.num<double>("quality.max_total_seconds", q.max_total_seconds);
  q.max_same_side_fraction = r.num<double>("quality.max_same_side_fraction", q.max_same_side_fraction);

  c.wave_size = r.num<std::size_t>("simulate.wave_size", 9);
  c.failure_rate = r.num<double>("simulate.failure_rate", 0.0);
  c.simulate_seed = seed_for("simulate.seed", 7);
  auto& p = c.participant;
  p.accuracy = r.num<double>("simulate.accuracy", 0.8);
  const std::pair<const char*, stimuli::Difficulty> levels[] = {{"simulate.accuracy_easy", stimuli::Difficulty::easy},
                                                                {"simulate.accuracy_medium", stimuli::Difficulty::medium},
                                                                {"simulate.accuracy_hard", stimuli::Difficulty::hard},
                                                                {"simulate.accuracy_very_hard", stimuli::Difficulty::very_hard}};
  for (const auto& [key, level] : levels) {
    if (r.has(key)) p.accuracy_by_difficulty[level] = r.num<double>(key, 0.0);
  }
  if (r.has("simulate.accuracy_natural")) {
    p.accuracy_by_condition[stimuli::Condition::natural] = r.num<double>("simulate.accuracy_natural", 0.0);
  }
  if (r.has("simulate.accuracy_synthetic")) {
    p.accuracy_by_condition[stimuli::Condition::synthetic] = r.num<double>("simulate.accuracy_synthetic", 0.0);
  }
  p.catch_accuracy = r.num<double>("simulate.catch_accuracy", 1.0);
  p.instruction_seconds = r.num<double>("simulate.instruction_seconds", p.instruction_seconds);
  p.validate();

  c.n_resamples = r.num<std::size_t>("analysis.n_resamples", 10000);
  c.analysis_seed = seed_for("analysis.seed", 8);
  c.metric_csv = r.file("analysis.metric_csv");
  if (!c.metric_csv.empty()) require_exists(c.metric_csv, "analysis.metric_csv");
  auto& pw = c.power;
  pw.cohens_d = r.num<double>("power.cohens_d", pw.cohens_d);
  pw.effect_mean_diff = r.num<double>("power.effect_mean_diff", pw.effect_mean_diff);
  pw.effect_sd = r.num<double>("power.effect_sd", pw.effect_sd);
  pw.alpha = r.num<double>("power.alpha", pw.alpha);
  pw.power = r.num<double>("power.power", pw.power);
  pw.are_correction = r.num<double>("power.are_correction", pw.are_correction);
  pw.target_unit_sd = r.num<double>("power.target_unit_sd", pw.target_unit_sd);
  if (r.has("power.trials_override")) pw.trials_per_unit_override = r.num<std::size_t>("power.trials_override", 30);
  if (r.has("power.units_chosen")) pw.units_chosen = r.num<std::size_t>("power.units_chosen", 84);
  pw.real_trials_per_session = r.num<std::size_t>("power.real_trials_per_session", pw.real_trials_per_session);
  pw.validate();

  c.hash = sha256_hex(canonical(tree));
  return c;
}

RunConfig load_config(const fs::path& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  return parse_config(ss.str(), overrides, base);
}

}  // namespace imi::cli
