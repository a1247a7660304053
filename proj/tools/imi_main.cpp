#include <iostream>

#include <CLI11.hpp>

#include "imi/cli/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> units;
  std::string condition;
  std::string difficulty;
};

imi::cli::RunConfig load(const Flags& f) {
  imi::cli::Overrides ov;
  if (!f.out.empty()) ov.out = f.out;
  ov.seed = f.seed;
  ov.units = f.units;
  if (!f.condition.empty()) ov.condition = imi::stimuli::parse_condition(f.condition);
  if (!f.difficulty.empty()) ov.difficulty = imi::stimuli::parse_difficulty(f.difficulty);
  return imi::cli::load_config(f.config, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Psychophysical interpretability measurement for vision model units"};
  app.require_subcommand(1);
  Flags flags;
  auto add_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", flags.config, "Run configuration (INI)")->required();
    cmd->add_option("--out", flags.out, "Output directory (overrides [run] out)");
    cmd->add_option("--seed", flags.seed, "Master seed (overrides [run] seed)");
    cmd->add_option("--units", flags.units, "Number of units to sample");
    cmd->add_option("--condition", flags.condition, "Restrict to one condition")
        ->check(CLI::IsMember({"natural", "synthetic"}));
    cmd->add_option("--difficulty", flags.difficulty, "Restrict to one difficulty level")
        ->check(CLI::IsMember({"easy", "medium", "hard", "very-hard", "very_hard"}));
  };
  auto* prepare = app.add_subcommand("prepare-stimuli", "Sample units and write stimulus images and manifest");
  auto* serve = app.add_subcommand("serve", "Run the experiment HTTP service");
  auto* simulate = app.add_subcommand("simulate", "Run a simulated participant campaign");
  auto* analyze = app.add_subcommand("analyze", "Compute every report from the response dataset");
  auto* exporter = app.add_subcommand("export", "Package the response dataset");
  for (auto* cmd : {prepare, serve, simulate, analyze, exporter}) add_flags(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : imi::cli::kConfigError;
  }

  try {
    const auto config = load(flags);
    if (prepare->parsed()) {
      const auto m = imi::cli::prepare_stimuli(config);
      std::cout << "prepared " << m.entries.size() << " stimulus entries for " << m.units.size() << " units in "
                << config.stimuli_dir().string() << " (config " << config.hash.substr(0, 12) << ")\n";
    } else if (serve->parsed()) {
      imi::cli::serve(config);
    } else if (simulate->parsed()) {
      const auto s = imi::cli::simulate(config);
      std::cout << "simulated " << s.campaign.sessions.size() << " sessions (" << s.campaign.passing << " passing, "
                << s.campaign.failed << " failed); " << s.records << " responses in "
                << config.dataset_dir().string() << "\n";
    } else if (analyze->parsed()) {
      const auto summary = imi::cli::analyze(config);
      std::cout << "reports written to " << config.reports_dir().string() << "\n";
      if (summary.contains("files")) std::cout << summary["files"].dump() << "\n";
    } else if (exporter->parsed()) {
      imi::cli::export_dataset(config);
      std::cout << "exported dataset to " << config.export_dir().string() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return imi::cli::exit_code_for(e);
  }
  return 0;
}
