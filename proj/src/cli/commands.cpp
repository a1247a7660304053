#include "imi/cli/commands.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <boost/algorithm/string.hpp>

#include "imi/analysis/reports.hpp"
#include "imi/common/png_io.hpp"
#include "imi/featviz/search.hpp"
#include "imi/model/activation_table.hpp"
#include "imi/model/file_backend.hpp"
#include "imi/model/reference_cnn.hpp"
#include "imi/service/http_server.hpp"
#include "imi/stimuli/exemplars.hpp"
#include "imi/stimuli/export.hpp"

namespace imi::cli {

namespace fs = std::filesystem;
using store::StimulusEntry;
using store::StimulusImage;
using stimuli::Condition;
using stimuli::Difficulty;

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error)) return kConfigError;
  if (dynamic_cast<const DependencyError*>(&error)) return kDependencyError;
  return kFailure;
}

Workspace open_workspace(const RunConfig& config) {
  Workspace ws;
  if (config.backend == "file") {
    ws.backend = std::make_unique<FileBackend>(
        FileBackend::load(config.model_json, config.activations_csv, config.units_json));
  } else {
    ws.backend = make_reference_cnn(config.model_seed);
  }
  if (config.dataset_source == "png") {
    ws.dataset = load_png_dataset(config.dataset_path, config.dataset_path.filename().string());
  } else {
    ws.dataset = make_toy_dataset(config.dataset_size, config.dataset_seed);
  }
  if (ws.dataset.size() == 0) throw ConfigError("dataset '" + ws.dataset.dataset_id + "' contains no images");
  return ws;
}

namespace {

bool has_condition(const RunConfig& config, Condition c) {
  return std::find(config.conditions.begin(), config.conditions.end(), c) != config.conditions.end();
}

ActivationTable table_for(const Workspace& ws, const std::vector<UnitAddress>& units) {
  const auto* file = dynamic_cast<const FileBackend*>(ws.backend.get());
  if (!file) return record_activation_table(*ws.backend, ws.dataset, units);
  const auto& full = file->table();
  ActivationTable table;
  table.dataset_id = ws.dataset.dataset_id;
  table.image_ids = full.image_ids;
  table.units = units;
  std::vector<std::size_t> columns;
  for (const auto& u : units) {
    if (std::find(full.units.begin(), full.units.end(), u) == full.units.end()) {
      throw ConfigError("imported activation table has no column for sampled unit " + u.to_string() +
                        "; export every channel of the eligible layers or set units.allowlist");
    }
    columns.push_back(full.unit_index(u));
  }
  table.activations.reserve(full.image_count() * units.size());
  for (std::size_t i = 0; i < full.image_count(); ++i) {
    if (!ws.dataset.index_of(full.image_ids[i])) {
      throw ConfigError("image '" + full.image_ids[i] + "' of the activation table is not in dataset.path");
    }
    for (std::size_t c : columns) table.activations.push_back(full.at(i, c));
  }
  return table;
}

// Runs job(i) for i in [0, n) on `workers` threads; the first failure (by
// index) is rethrown after all threads join.
template <typename Job>
void parallel_for(std::size_t n, std::size_t workers, Job job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run);
  run();
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct UnitOutput {
  std::vector<StimulusEntry> entries;
  std::vector<store::FeatvizRecord> featviz;
};

class StimulusWriter {
 public:
  StimulusWriter(const Workspace& ws, const ActivationTable& table, fs::path image_root, std::string salt)
      : ws_(ws), table_(table), root_(std::move(image_root)), salt_(std::move(salt)) {
    for (std::size_t i = 0; i < table.image_ids.size(); ++i) rows_[table.image_ids[i]] = i;
  }

  StimulusImage natural(const UnitAddress& unit, std::size_t column, Condition c, Difficulty d,
                        const std::string& role, const std::string& image_id) const {
    const std::size_t index = *ws_.dataset.index_of(image_id);
    const std::string key =
        stimuli::stimulus_key(unit, c, std::string(stimuli::to_string(d)) + "/" + role, index);
    StimulusImage img{stimuli::stimulus_path(salt_, key), image_id, table_.at(rows_.at(image_id), column)};
    stimuli::export_image(ws_.dataset, image_id, root_, img.path);
    return img;
  }

  StimulusImage synthetic(const std::string& key, const std::string& source_id, const Tensor& image,
                          double activation) const {
    StimulusImage img{stimuli::stimulus_path(salt_, key), source_id, activation};
    write_png(image, root_ / img.path);
    return img;
  }

 private:
  const Workspace& ws_;
  const ActivationTable& table_;
  fs::path root_;
  std::string salt_;
  std::map<std::string, std::size_t> rows_;
};

store::FeatvizRecord visualise(const RunConfig& config, const Backend& backend, const UnitAddress& unit,
                               std::size_t unit_ordinal, featviz::Sign sign, double natural_extreme,
                               const StimulusWriter& writer, std::vector<StimulusImage>& images) {
  featviz::FeatureVizConfig fv = config.featviz;
  fv.seed = derive_seed(config.featviz.seed, 2 * unit_ordinal + (sign == featviz::Sign::max ? 0 : 1));
  std::optional<featviz::SynthesisResult> baseline;
  const featviz::Prober probe = [&](double lambda) {
    auto c = fv;
    c.diversity_weight = lambda;
    auto result = featviz::synthesize(backend, unit, sign, c);
    if (lambda == 0.0 && !baseline) baseline = result;
    return result;
  };

  store::FeatvizRecord rec;
  rec.unit = unit;
  rec.sign = sign == featviz::Sign::max ? "max" : "min";
  rec.seed = fv.seed;
  rec.natural_extreme = natural_extreme;
  featviz::SynthesisResult batch;
  try {
    auto found = featviz::search_diversity(probe, sign, natural_extreme, config.search);
    rec.lambda = found.lambda_star;
    batch = std::move(found.images);
  } catch (const featviz::InfeasibleError&) {
    rec.feasible = false;
    rec.lambda = 0.0;
    batch = baseline ? *baseline : probe(0.0);
  }
  rec.steps = batch.steps;
  rec.truncated = batch.truncated;
  rec.final_activations = batch.final_activations;
  for (std::size_t k = 0; k < batch.images.size(); ++k) {
    const std::string role = "featviz-" + rec.sign;
    auto img = writer.synthetic(stimuli::stimulus_key(unit, Condition::synthetic, role, k),
                                unit.to_string() + ":" + role + ":" + std::to_string(k), batch.images[k],
                                batch.final_activations[k]);
    rec.image_paths.push_back(img.path);
    images.push_back(std::move(img));
  }
  return rec;
}

UnitOutput prepare_unit(const RunConfig& config, const Workspace& ws, const ActivationTable& table,
                        const StimulusWriter& writer, std::size_t ordinal) {
  const UnitAddress& unit = table.units[ordinal];
  UnitOutput out;
  const auto sel = stimuli::select_exemplars(table, unit, config.t);
  const std::uint64_t seed = derive_seed(config.stimulus_seed, ordinal);

  std::vector<StimulusImage> fv_max, fv_min;
  if (has_condition(config, Condition::synthetic)) {
    const auto column = table.column(ordinal);
    const auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    out.featviz.push_back(visualise(config, *ws.backend, unit, ordinal, featviz::Sign::max, *hi, writer, fv_max));
    out.featviz.push_back(visualise(config, *ws.backend, unit, ordinal, featviz::Sign::min, *lo, writer, fv_min));
  }

  std::set<std::string> reserved;
  for (const auto* group : {&sel.pos_reference_candidates, &sel.neg_reference_candidates, &sel.pos_queries,
                            &sel.neg_queries}) {
    reserved.insert(group->begin(), group->end());
  }

  for (Difficulty d : config.difficulties) {
    const auto level = stimuli::difficulty_level(d);
    std::vector<stimuli::TrialInstance> trials;
    if (!level.query_percentile) {
      trials = stimuli::assemble_trials(sel, seed);
    } else {
      const auto queries = stimuli::difficulty_queries(table, unit, level, config.t, reserved);
      trials = stimuli::assemble_trials_with_queries(sel, queries, d, seed);
    }
    for (Condition c : config.conditions) {
      for (const auto& trial : trials) {
        StimulusEntry e;
        e.unit = unit;
        e.condition = c;
        e.difficulty = d;
        e.instance_index = trial.instance_index;
        e.query_percentile = level.query_percentile;
        if (c == Condition::natural) {
          for (const auto& id : trial.pos_references) {
            e.positive_references.push_back(writer.natural(unit, ordinal, c, d, "pos_ref", id));
          }
          for (const auto& id : trial.neg_references) {
            e.negative_references.push_back(writer.natural(unit, ordinal, c, d, "neg_ref", id));
          }
        } else {
          e.positive_references = fv_max;
          e.negative_references = fv_min;
        }
        e.positive_query = writer.natural(unit, ordinal, c, d, "pos_query", trial.pos_query);
        e.negative_query = writer.natural(unit, ordinal, c, d, "neg_query", trial.neg_query);
        out.entries.push_back(std::move(e));
      }
    }
  }
  return out;
}

// Procedural trials that need no model knowledge: catch trials contrast
// bright and dark images, practice trials horizontal and vertical stripes.
Tensor procedural_image(const Shape& shape, bool positive, bool stripes, Rng& rng) {
  Tensor img(shape);
  const std::size_t channels = shape[0], h = shape[1], w = shape[2];
  const double base = positive ? rng.uniform(0.75, 0.95) : rng.uniform(0.05, 0.25);
  const std::size_t period = 2 + rng.below(3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = base;
      if (stripes) v = (((positive ? y : x) / period) % 2 == 0) ? 0.9 : 0.1;
      v += rng.uniform(-0.05, 0.05);
      for (std::size_t c = 0; c < channels; ++c) img.at(c, y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return img;
}

std::vector<store::FixedTrial> procedural_trials(const std::string& prefix, std::size_t count, bool stripes,
                                                 const Shape& shape, std::uint64_t seed, const fs::path& root,
                                                 const std::string& salt) {
  std::vector<store::FixedTrial> trials;
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng(derive_seed(seed, k));
    store::FixedTrial t;
    t.trial_key = prefix + "-" + std::to_string(k);
    auto make = [&](const std::string& role, std::size_t i, bool positive) {
      const std::string key = prefix + "/" + std::to_string(k) + "/" + role + "/" + std::to_string(i);
      StimulusImage img{stimuli::stimulus_path(salt, key), t.trial_key + ":" + role + ":" + std::to_string(i),
                        positive ? 1.0 : 0.0};
      write_png(procedural_image(shape, positive, stripes, rng), root / img.path);
      return img;
    };
    for (std::size_t i = 0; i < stimuli::kReferencesPerSide; ++i) t.positive_references.push_back(make("pos_ref", i, true));
    for (std::size_t i = 0; i < stimuli::kReferencesPerSide; ++i) t.negative_references.push_back(make("neg_ref", i, false));
    t.positive_query = make("pos_query", 0, true);
    t.negative_query = make("neg_query", 0, false);
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<UnitAddress> sorted_units(const ModelSpec& spec, std::vector<UnitAddress> units) {
  std::sort(units.begin(), units.end(), [&](const UnitAddress& a, const UnitAddress& b) {
    const auto la = *spec.layer_index(a.layer_id), lb = *spec.layer_index(b.layer_id);
    if (la != lb) return la < lb;
    return a.channel_index < b.channel_index;
  });
  return units;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + path.string());
}

store::Dataset require_dataset(const RunConfig& config) {
  const auto dir = config.dataset_dir();
  if (!fs::exists(dir / "responses.jsonl") || !fs::exists(dir / "manifest.json")) {
    throw DependencyError("no response dataset at " + dir.string() +
                          "; run `imi simulate` (or collect data with `imi serve`) first");
  }
  return store::read_dataset(dir);
}

std::map<std::string, double> read_metric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read analysis.metric_csv '" + path.string() + "'");
  std::map<std::string, double> metric;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    boost::trim(line);
    if (line.empty() || (line_no == 1 && line.find("model") == 0)) continue;
    std::vector<std::string> cells;
    boost::split(cells, line, boost::is_any_of(","));
    if (cells.size() != 2) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected model_id,value");
    try {
      metric[boost::trim_copy(cells[0])] = std::stod(cells[1]);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": value is not a number");
    }
  }
  return metric;
}

}  // namespace

store::StimulusManifest prepare_stimuli(const RunConfig& config) {
  const Workspace ws = open_workspace(config);
  const ModelSpec& spec = ws.backend->spec();
  if (has_condition(config, Condition::synthetic) && !ws.backend->differentiable()) {
    throw ConfigError("the synthetic condition needs a differentiable backend");
  }
  const auto units = sorted_units(spec, sampling::sample_units(spec, config.units));
  const ActivationTable table = table_for(ws, units);

  const fs::path dir = config.stimuli_dir();
  const fs::path image_root = dir / "images";
  fs::remove_all(image_root);
  fs::create_directories(image_root);
  save_activation_table(table, dir / "activations.csv", dir / "units.json");

  const std::string salt = "imi-" + std::to_string(config.stimulus_seed);
  const StimulusWriter writer(ws, table, image_root, salt);
  std::vector<UnitOutput> outputs(units.size());
  parallel_for(units.size(), config.workers,
               [&](std::size_t u) { outputs[u] = prepare_unit(config, ws, table, writer, u); });

  store::StimulusManifest m;
  m.model = spec;
  m.dataset_id = ws.dataset.dataset_id;
  m.config_hash = config.hash;
  m.eligible_layers = sampling::eligible_layers(spec, config.units.exclusion, config.units.allowlist);
  m.units = units;
  for (auto& o : outputs) {
    std::move(o.entries.begin(), o.entries.end(), std::back_inserter(m.entries));
    std::move(o.featviz.begin(), o.featviz.end(), std::back_inserter(m.featviz));
  }
  const Shape& shape = spec.input_shape;
  m.catch_trials = procedural_trials("catch", config.catch_set_size, false, shape,
                                     derive_seed(config.stimulus_seed, 0xCA7C0000), image_root, salt);
  m.practice_trials = procedural_trials("practice", config.service.practice_trials, true, shape,
                                        derive_seed(config.stimulus_seed, 0x9AC70000), image_root, salt);
  m.validate();
  store::write_manifest(m, dir / "manifest.json");
  return m;
}

store::StimulusManifest require_manifest(const RunConfig& config) {
  const auto path = config.stimuli_dir() / "manifest.json";
  if (!fs::exists(path)) {
    throw DependencyError("no stimulus manifest at " + path.string() + "; run `imi prepare-stimuli` first");
  }
  auto m = store::read_manifest(path);
  if (m.config_hash != config.hash) {
    std::cerr << "warning: stimuli were prepared with config " << m.config_hash << ", current config is "
              << config.hash << "\n";
  }
  return m;
}

void serve(const RunConfig& config) {
  const auto manifest = require_manifest(config);
  service::ExperimentService svc(manifest, config.service);
  const fs::path image_root = config.stimuli_dir() / "images";
  service::HttpServer server(svc, image_root);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = server.bind(config.host, config.port);
  std::cout << "serving " << svc.recruitment_status().size() << " experiments on http://" << config.host << ":"
            << port << " (config " << config.hash.substr(0, 12) << ")" << std::endl;
  server.start();
  const timespec poll{0, 500'000'000};
  while (!svc.all_complete()) {
    if (sigtimedwait(&signals, nullptr, &poll) > 0) break;
  }
  server.stop();
  const auto records = svc.records();
  store::write_dataset(records, manifest, image_root, config.dataset_dir());
  std::cout << "wrote " << records.size() << " responses to " << config.dataset_dir().string() << std::endl;
}

SimulationSummary simulate(const RunConfig& config) {
  const auto manifest = require_manifest(config);
  service::ServiceConfig sc = config.service;
  sc.virtual_clock = true;
  if (sc.admin_token.empty()) sc.admin_token = "imi-simulate";
  service::ExperimentService svc(manifest, sc);
  const fs::path image_root = config.stimuli_dir() / "images";
  service::HttpServer server(svc, image_root);
  const int port = server.bind("127.0.0.1", 0);
  server.start();

  sim::CampaignConfig cc;
  for (const auto& status : svc.recruitment_status()) {
    const auto& key = status.key;
    if (has_condition(config, key.condition) &&
        std::find(config.difficulties.begin(), config.difficulties.end(), key.difficulty) !=
            config.difficulties.end()) {
      cc.experiments.push_back(key);
    }
  }
  for (Condition c : config.conditions) {
    for (Difficulty d : config.difficulties) {
      const service::ExperimentKey key{manifest.model.model_id, c, d};
      if (std::find(cc.experiments.begin(), cc.experiments.end(), key) == cc.experiments.end()) {
        server.stop();
        throw DependencyError("the stimulus manifest has no " + key.to_string() +
                              " stimuli; rerun `imi prepare-stimuli` with this condition and difficulty");
      }
    }
  }
  cc.wave_size = config.wave_size;
  cc.seed = config.simulate_seed;
  cc.failure_rate = config.failure_rate;
  cc.base = config.participant;

  SimulationSummary summary;
  try {
    sim::ServiceClient admin("127.0.0.1", port, sc.admin_token);
    summary.campaign = sim::run_campaign(admin, "127.0.0.1", port, sc.admin_token,
                                         sim::GroundTruth::from_manifest(manifest), cc);
  } catch (...) {
    server.stop();
    throw;
  }
  server.stop();

  auto records = svc.records();
  std::erase_if(records, [&](const store::ImiResponseRecord& r) {
    return std::find(cc.experiments.begin(), cc.experiments.end(),
                     service::ExperimentKey{r.model_id, r.condition, r.difficulty}) == cc.experiments.end();
  });
  summary.records = records.size();
  store::write_dataset(records, manifest, image_root, config.dataset_dir());

  nlohmann::json j;
  j["config_hash"] = config.hash;
  j["sessions"] = summary.campaign.sessions.size();
  j["passing_sessions"] = summary.campaign.passing;
  j["failed_sessions"] = summary.campaign.failed;
  j["injected_failures"] = summary.campaign.injected_failures;
  j["records"] = summary.records;
  j["recruitment"] = summary.campaign.final_status;
  write_json(j, config.out / "simulation.json");
  return summary;
}

nlohmann::json analyze(const RunConfig& config) {
  const auto dataset = require_dataset(config);
  analysis::AnalysisOptions opts;
  opts.seed = config.analysis_seed;
  opts.n_resamples = config.n_resamples;
  opts.power = config.power;
  opts.config_hash = config.hash;
  if (!config.metric_csv.empty()) opts.external_metric = read_metric_csv(config.metric_csv);

  std::optional<Workspace> ws;
  if (config.backend == "refcnn") {
    ws = open_workspace(config);
    if (ws->backend->spec().model_id == dataset.manifest.model.model_id &&
        ws->dataset.dataset_id == dataset.manifest.dataset_id) {
      opts.model = ws->backend.get();
      opts.images = &ws->dataset;
    }
  }
  return analysis::write_reports(dataset, opts, config.reports_dir());
}

void export_dataset(const RunConfig& config) {
  const auto dataset = require_dataset(config);
  store::write_dataset(dataset.records, dataset.manifest, config.dataset_dir() / "images", config.export_dir());
}

}  // namespace imi::cli
