#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "imi/common/png_io.hpp"
#include "imi/model/reference_cnn.hpp"
#include "imi/service/experiment.hpp"
#include "imi/service/http_server.hpp"
#include "imi/sim/campaign.hpp"
#include "imi/stimuli/exemplars.hpp"
#include "imi/stimuli/export.hpp"
#include "imi/model/activation_table.hpp"
#include "imi/store/imi_format.hpp"

namespace imi::testing {

inline store::StimulusImage fake_image(const std::string& key, double activation = 0.0) {
  return {stimuli::stimulus_path("fixture", key), key, activation};
}

inline store::FixedTrial fake_fixed(const std::string& key) {
  store::FixedTrial t;
  t.trial_key = key;
  for (std::size_t i = 0; i < stimuli::kReferencesPerSide; ++i) {
    t.positive_references.push_back(fake_image(key + "/pr/" + std::to_string(i), 1.0));
    t.negative_references.push_back(fake_image(key + "/nr/" + std::to_string(i), 0.0));
  }
  t.positive_query = fake_image(key + "/pq", 1.0);
  t.negative_query = fake_image(key + "/nq", 0.0);
  return t;
}

/// A manifest over `units` reference-CNN units (conv3 channels first, then
/// norm3, conv2, norm2 and norm1) with `t` instances per (condition,
/// difficulty). Image paths are opaque and distinct per role; no image
/// files exist.
inline store::StimulusManifest fake_manifest(std::size_t units, std::size_t t,
                                             std::vector<stimuli::Condition> conditions = {stimuli::Condition::natural},
                                             std::vector<stimuli::Difficulty> difficulties = {stimuli::Difficulty::easy},
                                             std::size_t catch_trials = 5, std::size_t practice_trials = 5) {
  store::StimulusManifest m;
  m.model = make_reference_cnn(0)->spec();
  m.dataset_id = "fixture";
  m.config_hash = "fixture";
  m.eligible_layers = {"norm1", "conv2", "norm2", "conv3", "norm3"};
  for (const char* layer : {"conv3", "norm3", "conv2", "norm2", "norm1"}) {
    const std::size_t channels = m.model.layer(layer).channel_count;
    for (std::size_t c = 0; c < channels && m.units.size() < units; ++c) m.units.push_back({m.model.model_id, layer, c});
  }
  for (const auto& unit : m.units) {
    for (auto c : conditions) {
      for (auto d : difficulties) {
        for (std::size_t i = 0; i < t; ++i) {
          store::StimulusEntry e;
          e.unit = unit;
          e.condition = c;
          e.difficulty = d;
          e.instance_index = i;
          e.query_percentile = stimuli::difficulty_level(d).query_percentile;
          const std::string base = unit.to_string() + "/" + std::string(stimuli::to_string(c)) + "/" +
                                   std::string(stimuli::to_string(d)) + "/" + std::to_string(i);
          for (std::size_t k = 0; k < stimuli::kReferencesPerSide; ++k) {
            e.positive_references.push_back(fake_image(base + "/pr/" + std::to_string(k), 1.0));
            e.negative_references.push_back(fake_image(base + "/nr/" + std::to_string(k), -1.0));
          }
          e.positive_query = fake_image(base + "/pq", 0.5);
          e.negative_query = fake_image(base + "/nq", -0.5);
          m.entries.push_back(std::move(e));
        }
      }
    }
  }
  for (std::size_t k = 0; k < catch_trials; ++k) m.catch_trials.push_back(fake_fixed("catch-" + std::to_string(k)));
  for (std::size_t k = 0; k < practice_trials; ++k) {
    m.practice_trials.push_back(fake_fixed("practice-" + std::to_string(k)));
  }
  return m;
}

/// Writes a small PNG for every image path of the manifest.
inline void materialize_images(const store::StimulusManifest& m, const std::filesystem::path& root) {
  std::size_t k = 0;
  for (const auto& p : m.image_paths()) {
    write_png(Tensor({3, 4, 4}, static_cast<double>(k++ % 7) / 7.0), root / p);
  }
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("imi-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// An experiment service behind a real HTTP server on a free local port.
struct LiveService {
  std::unique_ptr<service::ExperimentService> service;
  std::unique_ptr<service::HttpServer> server;
  int port = -1;
  std::string token = "test-token";

  LiveService(store::StimulusManifest manifest, service::ServiceConfig config,
              const std::filesystem::path& image_root = "/nonexistent") {
    config.virtual_clock = true;
    config.admin_token = token;
    service = std::make_unique<service::ExperimentService>(std::move(manifest), std::move(config));
    server = std::make_unique<service::HttpServer>(*service, image_root);
    port = server->bind("127.0.0.1", 0);
    server->start();
  }
  ~LiveService() { server->stop(); }

  sim::CampaignResult campaign(const sim::CampaignConfig& config) {
    sim::ServiceClient admin("127.0.0.1", port, token);
    return sim::run_campaign(admin, "127.0.0.1", port, token,
                             sim::GroundTruth::from_manifest(service->manifest()), config);
  }
};

inline sim::CampaignConfig campaign_for(const store::StimulusManifest& m, std::uint64_t seed, double accuracy = 0.8) {
  sim::CampaignConfig c;
  std::set<service::ExperimentKey> keys;
  for (const auto& e : m.entries) keys.insert({m.model.model_id, e.condition, e.difficulty});
  c.experiments.assign(keys.begin(), keys.end());
  c.seed = seed;
  c.base.accuracy = accuracy;
  return c;
}

/// Single-unit activation table with `n` images; `levels` > 0 quantises
/// the values so ties occur.
inline ActivationTable random_table(std::size_t n, Rng& rng, int levels = 0) {
  ActivationTable t;
  t.dataset_id = "random";
  t.units = {{"refcnn", "conv2", 0}};
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "img%05zu", i);
    t.image_ids.push_back(id);
    double v = rng.normal();
    if (levels > 0) v = std::round(v * levels) / levels;
    t.activations.push_back(v);
  }
  return t;
}

/// Independent check of an exemplar selection and its trials against the
/// activation column: the selection must be the 9t + t most extreme images
/// per side (ties by image id), every trial takes one reference from each
/// of the nine rank groups, references are used exactly once across the t
/// trials, queries exactly once, and no image appears in two roles.
/// Returns a description of every violation.
inline std::vector<std::string> exemplar_violations(const ActivationTable& table,
                                                    const stimuli::ExemplarSelection& sel,
                                                    const std::vector<stimuli::TrialInstance>& trials) {
  std::vector<std::string> bad;
  const std::size_t t = sel.t, per_side = 10 * t;
  const auto col = table.column(0);
  std::vector<std::size_t> idx(col.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto by = [&](bool desc) {
    auto order = idx;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (col[a] != col[b]) return desc ? col[a] > col[b] : col[a] < col[b];
      return table.image_ids[a] < table.image_ids[b];
    });
    return order;
  };
  const auto desc = by(true), asc = by(false);
  std::vector<std::string> top, bottom;
  std::set<std::string> taken;
  for (std::size_t r = 0; r < per_side; ++r) {
    top.push_back(table.image_ids[desc[r]]);
    taken.insert(top.back());
  }
  for (std::size_t i : asc) {
    if (bottom.size() == per_side) break;
    if (!taken.contains(table.image_ids[i])) bottom.push_back(table.image_ids[i]);
  }
  auto expect_eq = [&](const std::vector<std::string>& got, std::vector<std::string> want, const char* what) {
    if (got != want) bad.push_back(std::string(what) + " differs from the oracle selection");
  };
  expect_eq(sel.pos_reference_candidates, {top.begin(), top.begin() + 9 * t}, "positive reference candidates");
  expect_eq(sel.pos_queries, {top.begin() + 9 * t, top.end()}, "positive queries");
  expect_eq(sel.neg_reference_candidates, {bottom.begin(), bottom.begin() + 9 * t}, "negative reference candidates");
  expect_eq(sel.neg_queries, {bottom.begin() + 9 * t, bottom.end()}, "negative queries");

  if (trials.size() != t) {
    bad.push_back("expected " + std::to_string(t) + " trials");
    return bad;
  }
  std::map<std::string, int> uses;
  for (std::size_t k = 0; k < t; ++k) {
    const auto& tr = trials[k];
    const std::string where = "trial " + std::to_string(k);
    if (tr.instance_index != k) bad.push_back(where + ": instance index " + std::to_string(tr.instance_index));
    for (auto [refs, cands, side] : {std::tuple{&tr.pos_references, &sel.pos_reference_candidates, "positive"},
                                     std::tuple{&tr.neg_references, &sel.neg_reference_candidates, "negative"}}) {
      if (refs->size() != 9) {
        bad.push_back(where + ": " + side + " side has " + std::to_string(refs->size()) + " references");
        continue;
      }
      std::vector<int> per_group(9, 0);
      for (const auto& id : *refs) {
        const auto it = std::find(cands->begin(), cands->end(), id);
        if (it == cands->end()) {
          bad.push_back(where + ": " + id + " is not a " + side + " candidate");
          continue;
        }
        per_group[static_cast<std::size_t>(it - cands->begin()) / t]++;
        uses[id]++;
      }
      for (std::size_t g = 0; g < 9; ++g) {
        if (per_group[g] != 1) bad.push_back(where + ": " + side + " group " + std::to_string(g) + " used " +
                                             std::to_string(per_group[g]) + " times");
      }
    }
    if (std::find(sel.pos_queries.begin(), sel.pos_queries.end(), tr.pos_query) == sel.pos_queries.end()) {
      bad.push_back(where + ": positive query outside the query set");
    }
    if (std::find(sel.neg_queries.begin(), sel.neg_queries.end(), tr.neg_query) == sel.neg_queries.end()) {
      bad.push_back(where + ": negative query outside the query set");
    }
    uses[tr.pos_query]++;
    uses[tr.neg_query]++;
    std::set<std::string> in_trial(tr.pos_references.begin(), tr.pos_references.end());
    in_trial.insert(tr.neg_references.begin(), tr.neg_references.end());
    in_trial.insert(tr.pos_query);
    in_trial.insert(tr.neg_query);
    if (in_trial.size() != 20) bad.push_back(where + ": images are not pairwise distinct");
  }
  for (const auto* group : {&sel.pos_reference_candidates, &sel.neg_reference_candidates, &sel.pos_queries,
                            &sel.neg_queries}) {
    for (const auto& id : *group) {
      if (uses[id] != 1) bad.push_back(id + " used " + std::to_string(uses[id]) + " times");
    }
  }
  return bad;
}

}  // namespace imi::testing
