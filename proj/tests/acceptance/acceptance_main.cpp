// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "../support.hpp"
#include "imi/analysis/bootstrap.hpp"
#include "imi/analysis/conover.hpp"
#include "imi/analysis/correlation.hpp"
#include "imi/analysis/difficulty_analysis.hpp"
#include "imi/analysis/power.hpp"
#include "imi/analysis/ranks.hpp"
#include "imi/analysis/reports.hpp"
#include "imi/analysis/scores.hpp"
#include "imi/cli/commands.hpp"
#include "imi/cli/config.hpp"
#include "imi/featviz/search.hpp"
#include "imi/model/activation_table.hpp"
#include "imi/model/dataset.hpp"
#include "imi/sampling/unit_sampler.hpp"

namespace fs = std::filesystem;
using namespace imi;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& criterion) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = criterion();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Desk-scale configuration shared by the pipeline criteria: reference CNN,
// 12 units, t = 4, 3 responses per instance, 8 real trials per session.
std::string desk_config(const fs::path& out) {
  return "[run]\nseed = 7\nout = " + out.string() +
         "\n[dataset]\nsource = toy\nsize = 600\n"
         "[units]\ncount = 12\n"
         "[stimuli]\nt = 4\nconditions = natural, synthetic\ndifficulties = easy\n"
         "[featviz]\nmin_steps = 100\nwindow = 25\nmax_steps = 400\nbisection_steps = 3\nmax_probes = 4\n"
         "[plan]\nresponses_per_instance = 3\nreal_trials_per_session = 8\n"
         "[analysis]\nn_resamples = 10000\n";
}

struct Desk {
  cli::RunConfig config;
  store::StimulusManifest manifest;
  fs::path image_root;
  double prepare_seconds = 0.0;
};

const Desk& desk() {
  static const Desk d = [] {
    Desk x;
    const auto out = imi::testing::scratch_dir("acceptance-desk");
    x.config = cli::parse_config(desk_config(out));
    const auto t0 = Clock::now();
    x.manifest = cli::prepare_stimuli(x.config);
    x.prepare_seconds = seconds_since(t0);
    x.image_root = x.config.stimuli_dir() / "images";
    return x;
  }();
  return d;
}

service::ServiceConfig desk_service(std::uint64_t seed) {
  auto sc = desk().config.service;
  sc.seed = seed;
  return sc;
}

std::vector<store::ImiResponseRecord> records_for(const std::vector<store::ImiResponseRecord>& all,
                                                  stimuli::Condition c) {
  std::vector<store::ImiResponseRecord> out;
  for (const auto& r : all) {
    if (r.quality_passed && r.condition == c) out.push_back(r);
  }
  return out;
}

/// Every unit of every experiment has exactly its target of passing
/// responses, `per_instance` on each active instance, from distinct
/// participants. Checked against the returned records, not the scheduler.
std::vector<std::string> ledger_violations(const std::vector<store::ImiResponseRecord>& records,
                                           const store::StimulusManifest& m, const service::RecruitmentPlan& plan) {
  std::vector<std::string> bad;
  std::map<std::string, std::map<std::size_t, std::size_t>> per_instance;
  std::map<std::string, std::multiset<std::string>> participants;
  for (const auto& r : records) {
    if (!r.quality_passed) continue;
    const std::string key = std::string(stimuli::to_string(r.condition)) + "/" +
                            std::string(stimuli::to_string(r.difficulty)) + "/" + r.unit().to_string();
    ++per_instance[key][r.instance_index];
    participants[key].insert(r.participant_id);
  }
  std::set<std::string> expected;
  for (const auto& e : m.entries) {
    expected.insert(std::string(stimuli::to_string(e.condition)) + "/" + std::string(stimuli::to_string(e.difficulty)) +
                    "/" + e.unit.to_string());
  }
  if (per_instance.size() != expected.size()) {
    bad.push_back(fmt("%zu (experiment, unit) cells have responses, %zu expected", per_instance.size(),
                      expected.size()));
  }
  for (const auto& key : expected) {
    const auto& inst = per_instance[key];
    std::size_t total = 0;
    for (std::size_t i = 0; i < plan.active_instances_per_unit; ++i) {
      const auto it = inst.find(i);
      const std::size_t n = it == inst.end() ? 0 : it->second;
      total += n;
      if (n != plan.responses_per_instance) bad.push_back(key + fmt(" instance %zu has %zu responses", i, n));
    }
    if (inst.size() > plan.active_instances_per_unit) bad.push_back(key + " has responses on inactive instances");
    if (total != plan.responses_per_unit) bad.push_back(key + fmt(" has %zu responses", total));
    const auto& ps = participants[key];
    if (std::set<std::string>(ps.begin(), ps.end()).size() != ps.size()) bad.push_back(key + " repeats a participant");
  }
  return bad;
}

std::string first(const std::vector<std::string>& v) { return v.empty() ? "" : " first: " + v.front(); }

// ---------------------------------------------------------------------------

Outcome end_to_end_recovery() {
  const auto t0 = Clock::now();
  const Desk& d = desk();
  const double p = 0.8;
  const int reps = 100;
  std::vector<double> grand_means;
  int covered = 0, within = 0;
  double first_run_seconds = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const auto r0 = Clock::now();
    imi::testing::LiveService live(d.manifest, desk_service(derive_seed(1000, rep)), d.image_root);
    auto cfg = imi::testing::campaign_for(d.manifest, derive_seed(2000, rep), p);
    live.campaign(cfg);
    const auto recs = records_for(live.service->records(), stimuli::Condition::natural);
    const auto scores = analysis::score_values(analysis::unit_scores(recs));
    const auto ci = analysis::bootstrap_ci(scores, d.config.n_resamples, derive_seed(3000, rep));
    grand_means.push_back(ci.mean);
    if (ci.lower <= p && p <= ci.upper) ++covered;
    if (std::fabs(ci.mean - p) <= 0.03) ++within;
    if (rep == 0) {
      // Time one complete pass: stimulus preparation, campaign, reports.
      store::Dataset ds{live.service->records(), d.manifest};
      analysis::AnalysisOptions opt;
      opt.n_resamples = d.config.n_resamples;
      analysis::write_reports(ds, opt, imi::testing::scratch_dir("acceptance-reports"));
      first_run_seconds = d.prepare_seconds + seconds_since(r0);
    }
  }
  const double overall = analysis::mean(grand_means);
  const double coverage = static_cast<double>(covered) / reps;
  const bool pass = std::fabs(overall - p) <= 0.03 && coverage >= 0.93 && first_run_seconds < 600.0;
  return {pass, fmt("mean of grand means %.4f (|d| <= 0.03), %d/%d single runs within 0.03, CI coverage %.2f "
                    "(>= 0.93), one full run %.1f s (< 600), all %d repetitions %.1f s",
                    overall, within, reps, coverage, first_run_seconds, reps, seconds_since(t0))};
}

struct InjectedCampaign {
  sim::CampaignResult result;
  std::vector<store::ImiResponseRecord> records;
};

const InjectedCampaign& injected_campaign() {
  static const InjectedCampaign c = [] {
    const Desk& d = desk();
    imi::testing::LiveService live(d.manifest, desk_service(77), d.image_root);
    auto cfg = imi::testing::campaign_for(d.manifest, 78);
    cfg.failure_rate = 0.3;
    InjectedCampaign out;
    out.result = live.campaign(cfg);
    out.records = live.service->records();
    return out;
  }();
  return c;
}

Outcome scheduler_ledger() {
  // Desk scale on the prepared stimuli with injected failures.
  const Desk& d = desk();
  const auto& inj = injected_campaign();
  auto bad = ledger_violations(inj.records, d.manifest, d.config.service.plan);
  std::string detail = fmt("desk scale: %zu passing / %zu failed sessions, %zu violations", inj.result.passing,
                           inj.result.failed, bad.size());

  // Published scale: 84 units, 10 active instances, 3 per instance, 40 real
  // trials per session.
  const auto m = imi::testing::fake_manifest(84, 10);
  service::ServiceConfig sc;
  sc.plan = service::RecruitmentPlan::scaled(84, 10, 3, 40);
  sc.seed = 5;
  imi::testing::LiveService live(m, sc);
  auto cfg = imi::testing::campaign_for(m, 6);
  cfg.failure_rate = 0.2;
  cfg.wave_size = 12;
  const auto res = live.campaign(cfg);
  const auto bad_full = ledger_violations(live.service->records(), m, sc.plan);
  const bool target_ok = res.passing == sc.plan.target_passing_sessions && inj.result.passing ==
                                                                               2 * d.config.service.plan.target_passing_sessions;
  detail += fmt("; 84 units x 30: %zu passing (target %zu) / %zu failed sessions, %zu violations", res.passing,
                sc.plan.target_passing_sessions, res.failed, bad_full.size());
  bad.insert(bad.end(), bad_full.begin(), bad_full.end());
  return {bad.empty() && target_ok, detail + first(bad)};
}

Outcome quality_battery() {
  const auto m = imi::testing::fake_manifest(8, 2, {stimuli::Condition::natural, stimuli::Condition::synthetic});
  service::ServiceConfig sc;
  sc.plan = service::RecruitmentPlan::scaled(8, 2, 3, 8);
  sc.seed = 21;
  imi::testing::LiveService live(m, sc);
  sim::ServiceClient client("127.0.0.1", live.port, live.token);
  const auto truth = sim::GroundTruth::from_manifest(m);
  const service::ExperimentKey natural{"refcnn", stimuli::Condition::natural, stimuli::Difficulty::easy};
  const service::ExperimentKey synthetic{"refcnn", stimuli::Condition::synthetic, stimuli::Difficulty::easy};

  struct Case {
    std::string label;
    sim::Violation violation;
    std::vector<std::string> expected;
  };
  const std::vector<Case> cases = {
      {"practice attempts 4", sim::Violation::triple_practice_failer, {service::kCheckPractice}},
      {"instruction dwell 10 s", sim::Violation::slow_reader, {service::kCheckInstructions}},
      {"catch 3/5", sim::Violation::catch_failer, {service::kCheckCatch}},
      {"duration 100 s", sim::Violation::too_fast, {service::kCheckDuration}},
      {"duration 3000 s", sim::Violation::too_slow, {service::kCheckDuration}},
      {"same side 100%", sim::Violation::same_side, {service::kCheckSameSide}},
  };
  std::vector<std::string> bad;
  std::size_t k = 0;
  auto check = [&](const std::string& label, const sim::SessionOutcome& o, const std::vector<std::string>& want) {
    if (o.failed_checks != want) {
      std::string got;
      for (const auto& c : o.failed_checks) got += c + " ";
      bad.push_back(label + " flagged [" + got + "]");
    }
  };
  for (const auto& c : cases) {
    const auto profile = sim::make_profile("battery-" + std::to_string(k), c.violation, 100 + k, 1.0);
    ++k;
    check(c.label, sim::run_session(client, truth, natural, profile), c.expected);
  }
  // The repeat participant first completes a compliant session on one
  // experiment, then joins a second one.
  const auto repeat = sim::make_profile("battery-repeat", sim::Violation::none, 200, 1.0);
  const auto first_session = sim::run_session(client, truth, natural, repeat);
  check("repeat participant, first session", first_session, {});
  check("repeat participation", sim::run_session(client, truth, synthetic, repeat), {service::kCheckUnique});
  const auto compliant = sim::make_profile("battery-compliant", sim::Violation::none, 300, 1.0);
  const auto ok = sim::run_session(client, truth, natural, compliant);
  check("compliant", ok, {});
  return {bad.empty() && ok.passed,
          fmt("7 single-violation sessions and 1 compliant session, %zu mismatches", bad.size()) + first(bad)};
}

/// The piecewise-linear state of the network at `image`: the sign of every
/// ReLU input and the winning position of every max-pool window. Central
/// differences are only meaningful when x + h and x - h share this state.
std::vector<std::size_t> activation_pattern(const Backend& net, const Tensor& image) {
  std::vector<std::size_t> pattern;
  const auto& layers = net.spec().layers;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const auto& spec = layers[l];
    if (spec.kind != LayerKind::relu && spec.kind != LayerKind::pooling) continue;
    const Tensor in = net.feature_maps(image, layers[l - 1].id);
    const std::size_t c_n = in.shape()[0], h_n = in.shape()[1], w_n = in.shape()[2];
    if (spec.kind == LayerKind::relu) {
      for (std::size_t i = 0; i < in.size(); ++i) pattern.push_back(in[i] > 0.0);
      continue;
    }
    const std::size_t oh = spec.output_shape[1], ow = spec.output_shape[2];
    for (std::size_t c = 0; c < c_n; ++c) {
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          std::size_t best = 0;
          double best_v = -INFINITY;
          for (std::size_t ky = 0; ky < spec.kernel_size; ++ky) {
            for (std::size_t kx = 0; kx < spec.kernel_size; ++kx) {
              const long y = static_cast<long>(oy * spec.stride + ky) - static_cast<long>(spec.padding);
              const long x = static_cast<long>(ox * spec.stride + kx) - static_cast<long>(spec.padding);
              if (y < 0 || x < 0 || y >= static_cast<long>(h_n) || x >= static_cast<long>(w_n)) continue;
              const double v = in[(c * h_n + static_cast<std::size_t>(y)) * w_n + static_cast<std::size_t>(x)];
              if (v > best_v) {
                best_v = v;
                best = ky * spec.kernel_size + kx;
              }
            }
          }
          pattern.push_back(best);
        }
      }
    }
  }
  return pattern;
}

Outcome gradient_correctness() {
  auto net = make_reference_cnn(3);
  Rng rng(99);
  Tensor image(net->spec().input_shape);
  for (auto& v : image.values()) v = rng.uniform();
  std::map<LayerKind, std::string> by_kind;
  for (const auto& l : net->spec().layers) {
    // Prefer a mid-network representative of each kind.
    if (!by_kind.contains(l.kind) || l.id.back() == '2') by_kind[l.kind] = l.id;
  }
  const double h = 1e-5;
  std::string detail;
  double worst = 0.0;
  std::size_t redrawn = 0;
  for (const auto& [kind, layer] : by_kind) {
    const UnitAddress unit{"refcnn", layer, 1};
    const Tensor grad = net->input_gradient(image, unit);
    double layer_worst = 0.0;
    for (int k = 0; k < 100;) {
      const std::size_t idx = rng.below(image.size());
      Tensor plus = image, minus = image;
      plus[idx] += h;
      minus[idx] -= h;
      if (activation_pattern(*net, plus) != activation_pattern(*net, minus)) {
        ++redrawn;  // the interval straddles a kink
        continue;
      }
      const double fd = (net->unit_activation(plus, unit) - net->unit_activation(minus, unit)) / (2 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(grad[idx]), 1e-7});
      layer_worst = std::max(layer_worst, std::fabs(grad[idx] - fd) / denom);
      ++k;
    }
    worst = std::max(worst, layer_worst);
    detail += fmt("%s %.1e; ", layer.c_str(), layer_worst);
  }
  return {worst <= 1e-4 && by_kind.size() >= 5,
          fmt("%zu layer kinds x 100 coordinates, max relative error %.2e (<= 1e-4), %zu coordinates redrawn "
              "because +-h crosses a ReLU or max-pool switch: ",
              by_kind.size(), worst, redrawn) +
              detail};
}

Outcome featviz_guarantee() {
  const Desk& d = desk();
  auto net = make_reference_cnn(d.config.model_seed);
  const auto dataset = make_toy_dataset(d.config.dataset_size, d.config.dataset_seed);
  sampling::SamplingConfig sc;
  sc.n_units = 20;
  sc.seed = 2024;
  const auto units = sampling::sample_units(net->spec(), sc);
  const auto table = record_activation_table(*net, dataset, units);
  std::size_t ok = 0;
  std::vector<std::string> notes;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto col = table.column(u);
    const double natural_max = *std::max_element(col.begin(), col.end());
    auto fv = d.config.featviz;
    fv.seed = derive_seed(4242, u);
    try {
      const auto found = featviz::search_diversity(*net, units[u], featviz::Sign::max, natural_max, fv, d.config.search);
      auto again = fv;
      again.diversity_weight = found.lambda_star;
      const auto batch = featviz::synthesize(*net, units[u], featviz::Sign::max, again);
      const double weakest = *std::min_element(batch.final_activations.begin(), batch.final_activations.end());
      if (weakest >= natural_max) {
        ++ok;
      } else {
        notes.push_back(units[u].to_string() + fmt(" min %.4g < natural %.4g", weakest, natural_max));
      }
    } catch (const featviz::InfeasibleError& e) {
      notes.push_back(units[u].to_string() + " infeasible at lambda 0");
    }
  }
  const double rate = static_cast<double>(ok) / static_cast<double>(units.size());

  // Monotone stub: feasible exactly when lambda <= 350.
  const double threshold = 350.0;
  std::vector<double> probed;
  const featviz::Prober stub = [&](double lambda) {
    probed.push_back(lambda);
    featviz::SynthesisResult r;
    r.final_activations = {10.0 + (threshold - lambda), 11.0 + (threshold - lambda)};
    r.diversity_weight = lambda;
    return r;
  };
  const auto res = featviz::search_diversity(stub, featviz::Sign::max, 10.0);
  // Grid oracle: the bracket [100, 1000] split into 2^6 cells; the answer
  // is the largest feasible grid point.
  double oracle = 0.0;
  for (int k = 0; k <= 64; ++k) {
    const double g = 100.0 + 900.0 * k / 64.0;
    if (g <= threshold) oracle = g;
  }
  const bool stub_ok = res.lambda_star <= threshold && threshold - res.lambda_star <= 900.0 / 64.0 &&
                       std::fabs(res.lambda_star - oracle) < 1e-9;
  return {rate >= 0.95 && stub_ok,
          fmt("%zu/%zu units reach the natural maximum at the searched lambda (%.0f%%, >= 95%%); stub lambda %.4f, "
              "grid oracle %.4f, threshold gap %.4f (<= %.4f)",
              ok, units.size(), 100 * rate, res.lambda_star, oracle, threshold - res.lambda_star, 900.0 / 64.0) +
              first(notes)};
}

Outcome stimulus_invariants() {
  Rng rng(31337);
  std::size_t violations = 0, instances = 0;
  std::string example;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t t = 1 + rng.below(12);
    const std::size_t n = 20 * t + rng.below(300);
    const int levels = rng.bernoulli(0.5) ? static_cast<int>(2 + rng.below(20)) : 0;
    const auto table = imi::testing::random_table(n, rng, levels);
    const auto sel = stimuli::select_exemplars(table, table.units[0], t);
    const auto trials = stimuli::assemble_trials(sel, rng.next());
    const auto bad = imi::testing::exemplar_violations(table, sel, trials);
    violations += bad.size();
    instances += trials.size();
    if (!bad.empty() && example.empty()) example = bad.front();
  }
  return {violations == 0, fmt("1000 random (dataset, t) cases, %zu trial instances, %zu violations", instances,
                               violations) + (example.empty() ? "" : " first: " + example)};
}

Outcome statistics_vs_oracles() {
  Rng rng(4096);
  // Spearman, n = 5, against enumeration of all 120 permutations.
  double rho_err = 0.0, p_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x(5), y(5);
    for (int i = 0; i < 5; ++i) {
      x[i] = static_cast<double>(rng.below(k % 2 ? 4 : 100));
      y[i] = rng.normal();
    }
    if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
    const auto got = analysis::spearman(x, y);
    const auto want = imi::testing::spearman_by_enumeration(x, y);
    rho_err = std::max(rho_err, std::fabs(got.rho - want.rho));
    p_err = std::max(p_err, std::fabs(got.p_value - want.p_value) + (got.exact ? 0.0 : 1.0));
  }
  // Conover-Holm against a permutation test of the same statistic.
  double conover_err = 0.0, conover_raw_err = 0.0;
  for (int k = 0; k < 12; ++k) {
    std::vector<std::vector<double>> groups(3);
    for (std::size_t g = 0; g < 3; ++g) {
      groups[g].resize(5 + rng.below(6));
      for (auto& v : groups[g]) v = rng.normal() + 0.8 * static_cast<double>(g) * (k % 3) / 2.0;
    }
    const auto res = analysis::conover_holm(groups);
    const auto raw = imi::testing::conover_permutation_raw(groups, 100000, rng.next());
    const auto oracle = imi::testing::holm_by_definition(raw);
    for (std::size_t q = 0; q < oracle.size(); ++q) {
      conover_err = std::max(conover_err, std::fabs(res.pairs[q].p_adjusted - oracle[q]));
      conover_raw_err = std::max(conover_raw_err, std::fabs(res.pairs[q].p_raw - raw[q]));
    }
  }
  // Holm monotonicity.
  std::size_t holm_bad = 0;
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> p(2 + rng.below(15));
    for (auto& v : p) v = rng.bernoulli(0.1) ? 0.01 : rng.uniform();
    const auto adj = analysis::holm_adjust(p);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (adj[i] < p[i] || adj[i] > 1.0) ++holm_bad;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[i] <= p[j] && adj[i] > adj[j]) ++holm_bad;
      }
    }
  }
  const bool pass = rho_err <= 1e-9 && p_err <= 1e-12 && conover_err <= 0.01 && holm_bad == 0;
  return {pass, fmt("Spearman n=5 |drho| %.1e (<= 1e-9), |dp| %.1e (exact); Conover-Holm max |dp| %.4f vs "
                    "permutation (<= 0.01; unadjusted %.4f); Holm monotonicity violations %zu over 1000 vectors",
                    rho_err, p_err, conover_err, conover_raw_err, holm_bad)};
}

Outcome power() {
  const auto r = analysis::power_analysis(analysis::PowerParams{});
  const bool pass = r.units_required >= 83 && r.units_required <= 89 && r.trials_per_unit == 30 &&
                    r.participants_required == 63;
  return {pass, fmt("units_required %zu (86 +/- 3; t-test n per group %.2f), trials per unit %zu (formula %zu), "
                    "participants %zu for (84, 30, 40)",
                    r.units_required, r.t_test_n_per_group, r.trials_per_unit, r.trials_per_unit_formula,
                    r.participants_required)};
}

Outcome difficulty_ordering() {
  using D = stimuli::Difficulty;
  const std::size_t units = 20;
  const auto m = imi::testing::fake_manifest(units, 10, {stimuli::Condition::natural}, {D::easy, D::medium, D::hard});
  service::ServiceConfig sc;
  sc.plan = service::RecruitmentPlan::scaled(units, 10, 30, units);
  sc.seed = 8;
  imi::testing::LiveService live(m, sc);
  auto cfg = imi::testing::campaign_for(m, 9);
  cfg.wave_size = 20;
  cfg.base.accuracy_by_difficulty = {{D::easy, 0.9}, {D::medium, 0.7}, {D::hard, 0.6}};
  live.campaign(cfg);
  const auto scores = analysis::unit_scores(records_for(live.service->records(), stimuli::Condition::natural));
  const auto rep = analysis::difficulty_analysis(scores, stimuli::Condition::natural);
  return {rep.rows.size() == units && rep.fraction_strictly_decreasing >= 0.90,
          fmt("%zu units, %zu responses per unit and level; easy > medium > hard for %.0f%% (>= 90%%); level means "
              "%.3f / %.3f / %.3f",
              rep.rows.size(), sc.plan.responses_per_unit, 100 * rep.fraction_strictly_decreasing,
              rep.level_means[0].value_or(NAN), rep.level_means[1].value_or(NAN), rep.level_means[2].value_or(NAN))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome imi_round_trip() {
  const Desk& d = desk();
  const auto& inj = injected_campaign();
  const auto a = imi::testing::scratch_dir("acceptance-imi-a");
  const auto b = imi::testing::scratch_dir("acceptance-imi-b");
  store::write_dataset(inj.records, d.manifest, d.image_root, a);
  const auto back = store::read_dataset(a);
  store::write_dataset(back.records, back.manifest, a / "images", b);
  bool identical = back.records == inj.records;
  for (const char* f : {"responses.jsonl", "manifest.json"}) identical = identical && slurp(a / f) == slurp(b / f);
  std::size_t images_differ = 0;
  for (const auto& p : d.manifest.image_paths()) {
    if (slurp(a / "images" / p) != slurp(b / "images" / p)) ++images_differ;
  }
  const auto part = store::partition_quality(back.records);
  const std::size_t expected_main = 2 * d.config.service.plan.total_slots();
  const bool counts = part.main.size() == expected_main && part.development.size() == inj.result.injected_real_trials &&
                      inj.result.failed == inj.result.injected_failures;
  return {identical && images_differ == 0 && counts,
          fmt("write-read-write %s, %zu image files differ; main %zu (expected %zu), development %zu (injected %zu); "
              "failed sessions %zu (injected %zu)",
              identical ? "byte-identical" : "DIFFERS", images_differ, part.main.size(), expected_main,
              part.development.size(), inj.result.injected_real_trials, inj.result.failed,
              inj.result.injected_failures)};
}

}  // namespace

int main() {
  std::printf("acceptance criteria\n");
  std::fflush(stdout);
  report("gradient_correctness", gradient_correctness);
  report("stimulus_invariants", stimulus_invariants);
  report("statistics_vs_oracles", statistics_vs_oracles);
  report("power_analysis", power);
  report("quality_battery", quality_battery);
  report("difficulty_ordering", difficulty_ordering);
  report("end_to_end_recovery", end_to_end_recovery);
  report("scheduler_ledger", scheduler_ledger);
  report("imi_round_trip", imi_round_trip);
  report("featviz_guarantee", featviz_guarantee);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
