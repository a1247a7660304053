#include "imi/analysis/reports.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include "imi/analysis/bootstrap.hpp"
#include "imi/analysis/conover.hpp"
#include "imi/analysis/correlation.hpp"
#include "imi/analysis/difficulty_analysis.hpp"
#include "imi/analysis/predictors.hpp"
#include "imi/analysis/ranks.hpp"
#include "imi/analysis/scores.hpp"
#include "imi/common/errors.hpp"

namespace imi::analysis {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

class Csv {
 public:
  Csv(const fs::path& path, const std::string& header) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << header << "\n";
  }
  template <typename... T>
  void row(const T&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cells), ...);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

json spearman_json(const std::optional<SpearmanResult>& r) {
  if (!r) return nullptr;
  return json{{"rho", r->rho}, {"p_value", r->p_value}, {"n", r->n}, {"exact", r->exact}, {"defined", r->defined}};
}

std::string cond(stimuli::Condition c) { return std::string(stimuli::to_string(c)); }
std::string diff(stimuli::Difficulty d) { return std::string(stimuli::to_string(d)); }

}  // namespace

json write_reports(const store::Dataset& dataset, const AnalysisOptions& options, const fs::path& out_dir) {
  const auto partition = store::partition_quality(dataset.records);
  const auto& records = options.include_development ? dataset.records : partition.main;
  if (records.empty()) {
    throw DependencyError("dataset has no " + std::string(options.include_development ? "" : "quality-passing ") +
                          "responses to analyse; run 'simulate' (or collect data) first");
  }
  fs::create_directories(out_dir);
  json summary;
  summary["config_hash"] = options.config_hash;
  summary["records"] = {{"total", dataset.records.size()},
                        {"main", partition.main.size()},
                        {"development", partition.development.size()},
                        {"analysed", records.size()}};
  std::vector<std::string> files;

  const auto scores = unit_scores(records);
  {
    Csv csv(out_dir / "unit_scores.csv",
            "model_id,layer_id,channel_index,condition,difficulty,n_responses,n_correct,proportion_correct");
    for (const auto& s : scores) {
      csv.row(s.unit.model_id, s.unit.layer_id, s.unit.channel_index, cond(s.condition), diff(s.difficulty),
              s.n_responses, s.n_correct, num(s.proportion_correct));
    }
    files.push_back("unit_scores.csv");
  }

  std::set<std::pair<stimuli::Condition, stimuli::Difficulty>> experiments;
  for (const auto& s : scores) experiments.emplace(s.condition, s.difficulty);

  // Bootstrap intervals and model comparisons per experiment.
  json boot = json::array(), conover = json::array(), layers = json::array();
  {
    Csv bcsv(out_dir / "bootstrap.csv", "model_id,condition,difficulty,n_units,mean,lower,upper,n_resamples,seed");
    Csv ccsv(out_dir / "conover.csv",
             "condition,difficulty,model_a,model_b,mean_rank_difference,t_statistic,p_raw,p_adjusted,stars");
    Csv lcsv(out_dir / "layer_position.csv", "model_id,condition,difficulty,layer_id,position,mean_score,n_units");
    for (const auto& [c, d] : experiments) {
      const auto sel = select_scores(scores, c, d);
      const auto by_model = scores_by_model(sel);
      std::vector<std::vector<double>> groups;
      std::vector<std::string> names;
      for (const auto& [model, values] : by_model) {
        const auto ci = bootstrap_ci(values, options.n_resamples, options.seed);
        bcsv.row(model, cond(c), diff(d), values.size(), num(ci.mean), num(ci.lower), num(ci.upper), ci.n_resamples,
                 ci.seed);
        boot.push_back({{"model_id", model}, {"condition", cond(c)}, {"difficulty", diff(d)}, {"mean", ci.mean},
                        {"lower", ci.lower}, {"upper", ci.upper}, {"n_units", values.size()}});
        groups.push_back(values);
        names.push_back(model);
      }
      bool comparable = groups.size() >= 2;
      for (const auto& g : groups) comparable = comparable && g.size() >= 2;
      if (comparable) {
        const auto res = conover_holm(groups, names);
        for (const auto& p : res.pairs) {
          ccsv.row(cond(c), diff(d), names[p.first], names[p.second], num(p.mean_rank_difference), num(p.t_statistic),
                   num(p.p_raw), num(p.p_adjusted), p.stars);
        }
        conover.push_back({{"condition", cond(c)}, {"difficulty", diff(d)}, {"kruskal_h", res.kruskal.h},
                           {"kruskal_p", res.kruskal.p_value}, {"p_matrix", res.p_matrix}, {"models", names}});
      } else {
        conover.push_back({{"condition", cond(c)}, {"difficulty", diff(d)},
                           {"note", "needs at least two models with two or more units each"}});
      }
      for (const auto& lp : layer_position_analysis(sel, dataset.manifest.eligible_layers)) {
        for (const auto& l : lp.layers) {
          lcsv.row(lp.model_id, cond(c), diff(d), l.layer_id, num(l.position), num(l.mean_score), l.n_units);
        }
        layers.push_back({{"model_id", lp.model_id}, {"condition", cond(c)}, {"difficulty", diff(d)},
                          {"spearman", spearman_json(lp.correlation)}, {"note", lp.note}});
      }
    }
    files.insert(files.end(), {"bootstrap.csv", "conover.csv", "layer_position.csv"});
  }
  summary["bootstrap"] = boot;
  summary["conover_holm"] = conover;
  summary["layer_position"] = layers;

  // Natural vs synthetic, per difficulty.
  json cross = json::array();
  {
    Csv csv(out_dir / "cross_condition.csv", "model_id,difficulty,unit,natural,synthetic");
    for (int d = 0; d < static_cast<int>(kDifficultyCount); ++d) {
      const auto level = static_cast<stimuli::Difficulty>(d);
      const auto nat = select_scores(scores, stimuli::Condition::natural, level);
      const auto syn = select_scores(scores, stimuli::Condition::synthetic, level);
      if (nat.empty() || syn.empty()) continue;
      for (const auto& pc : cross_condition_correlation(nat, syn)) {
        for (std::size_t i = 0; i < pc.x.size(); ++i) csv.row(pc.group, diff(level), pc.labels[i], num(pc.x[i]), num(pc.y[i]));
        cross.push_back({{"model_id", pc.group}, {"difficulty", diff(level)},
                         {"spearman", spearman_json(pc.correlation)}, {"note", pc.note}});
      }
    }
    files.push_back("cross_condition.csv");
  }
  summary["cross_condition"] = cross;

  json difficulty = json::array();
  {
    Csv csv(out_dir / "difficulty.csv",
            "condition,model_id,layer_id,channel_index,easy,medium,hard,very_hard,gap_easy_medium,gap_easy_hard,"
            "strictly_decreasing");
    for (auto c : {stimuli::Condition::natural, stimuli::Condition::synthetic}) {
      const auto rep = difficulty_analysis(scores, c);
      if (rep.rows.empty()) continue;
      for (const auto& r : rep.rows) {
        csv.row(cond(c), r.unit.model_id, r.unit.layer_id, r.unit.channel_index, opt(r.scores[0]), opt(r.scores[1]),
                opt(r.scores[2]), opt(r.scores[3]), opt(r.gap_easy_medium), opt(r.gap_easy_hard),
                r.strictly_decreasing ? "true" : "false");
      }
      json means = json::object();
      for (std::size_t d = 0; d < kDifficultyCount; ++d) {
        if (rep.level_means[d]) means[diff(static_cast<stimuli::Difficulty>(d))] = *rep.level_means[d];
      }
      difficulty.push_back({{"condition", cond(c)}, {"level_means", means}, {"units", rep.rows.size()},
                            {"fraction_strictly_decreasing", rep.fraction_strictly_decreasing},
                            {"gap_vs_easy", spearman_json(rep.gap_vs_easy)}, {"warnings", rep.warnings}});
    }
    files.push_back("difficulty.csv");
  }
  summary["difficulty"] = difficulty;

  json confidence = json::array();
  {
    Csv csv(out_dir / "confidence.csv", "model_id,condition,confidence,count,proportion_correct");
    for (const auto& cs : confidence_split(records)) {
      json levels = json::object();
      for (const auto& l : cs.levels) {
        csv.row(cs.model_id, cond(cs.condition), l.confidence, l.count, opt(l.proportion_correct));
        levels[std::to_string(l.confidence)] = {{"count", l.count},
                                                {"proportion_correct", l.proportion_correct
                                                                           ? json(*l.proportion_correct)
                                                                           : json(nullptr)}};
      }
      confidence.push_back({{"model_id", cs.model_id}, {"condition", cond(cs.condition)}, {"levels", levels}});
    }
    files.push_back("confidence.csv");
  }
  summary["confidence"] = confidence;

  if (options.model && options.images) {
    Csv csv(out_dir / "predictors.csv",
            "model_id,layer_id,channel_index,local_contrast,pixel_sparsity,channel_sparsity,natural_easy_score");
    const auto nat = select_scores(scores, stimuli::Condition::natural, stimuli::Difficulty::easy);
    std::vector<double> contrast, pix, chan, sc;
    for (const auto& s : nat) {
      const auto maps = unit_maps(*options.model, *options.images, s.unit);
      const double lc = predictor_contrast(maps);
      const auto sp = predictor_sparseness(maps);
      csv.row(s.unit.model_id, s.unit.layer_id, s.unit.channel_index, num(lc), num(sp.pixel), num(sp.channel),
              num(s.proportion_correct));
      contrast.push_back(lc);
      pix.push_back(sp.pixel);
      chan.push_back(sp.channel);
      sc.push_back(s.proportion_correct);
    }
    json pred = json::object();
    if (sc.size() >= 3) {
      pred["local_contrast"] = spearman_json(spearman(contrast, sc));
      pred["pixel_sparsity"] = spearman_json(spearman(pix, sc));
      pred["channel_sparsity"] = spearman_json(spearman(chan, sc));
    }
    summary["predictors"] = pred;
    files.push_back("predictors.csv");
  } else {
    summary["predictors"] = {{"note", "requires a differentiable model backend and the image dataset"}};
  }

  if (!options.external_metric.empty()) {
    std::map<std::string, double> model_means;
    for (const auto& [model, values] :
         scores_by_model(select_scores(scores, stimuli::Condition::natural, stimuli::Difficulty::easy))) {
      model_means[model] = mean(values);
    }
    const auto pc = score_vs_metric(model_means, options.external_metric);
    Csv csv(out_dir / "score_vs_metric.csv", "model_id,mean_score,metric");
    for (std::size_t i = 0; i < pc.x.size(); ++i) csv.row(pc.labels[i], num(pc.x[i]), num(pc.y[i]));
    summary["score_vs_metric"] = {{"spearman", spearman_json(pc.correlation)}, {"note", pc.note}};
    files.push_back("score_vs_metric.csv");
  }

  const auto power = power_analysis(options.power);
  summary["power"] = {{"t_test_n_per_group", power.t_test_n_per_group},
                      {"units_required", power.units_required},
                      {"trials_per_unit_formula", power.trials_per_unit_formula},
                      {"trials_per_unit", power.trials_per_unit},
                      {"units_chosen", power.units_chosen},
                      {"participants_required", power.participants_required}};
  files.push_back("summary.json");
  summary["files"] = files;

  std::ofstream out(out_dir / "summary.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write summary.json");
  out << summary.dump(2) << "\n";
  return summary;
}

}  // namespace imi::analysis
