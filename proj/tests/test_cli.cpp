#include <doctest.h>

#include <fstream>

#include "imi/cli/commands.hpp"
#include "imi/cli/config.hpp"
#include "support.hpp"

using namespace imi;
using namespace imi::cli;

namespace {

const char* kMinimal = R"(
[run]
seed = 42

[units]
count = 12

[plan]
real_trials_per_session = 8
)";

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("defaults derive from the run seed") {
    const auto c = parse_config(kMinimal, {}, "/tmp/base");
    CHECK(c.seed == 42);
    CHECK(c.model_seed == derive_seed(42, 1));
    CHECK(c.stimulus_seed == derive_seed(42, 4));
    CHECK(c.service.seed == derive_seed(42, 6));
    CHECK(c.out == std::filesystem::path("/tmp/base/out"));
    CHECK(c.t == 10);
    CHECK(c.conditions == std::vector{stimuli::Condition::natural, stimuli::Condition::synthetic});
    CHECK(c.difficulties == std::vector{stimuli::Difficulty::easy});
    CHECK(c.service.plan.units == 12);
    CHECK(c.service.plan.target_passing_sessions == 12 * 30 / 8);
    CHECK(c.hash.size() == 64);
  }

  TEST_CASE("the seed is mandatory") {
    CHECK_THROWS_AS(parse_config("[units]\ncount = 3\n"), ConfigError);
  }

  TEST_CASE("unknown sections and keys are rejected") {
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[extra]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[stimuli]\nsize = 1\n"), ConfigError);
  }

  TEST_CASE("malformed values are rejected") {
    CHECK_THROWS_AS(parse_config("[run]\nseed = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[run]\nseed = -3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[stimuli]\nt = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[model]\nbackend = onnx\n"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[service]\nvirtual_clock = maybe\n"), ConfigError);
    CHECK_THROWS(parse_config(std::string(kMinimal) + "[stimuli]\nconditions = painted\n"));
  }

  TEST_CASE("an inconsistent plan is a configuration error") {
    CHECK_THROWS_AS(parse_config("[run]\nseed = 1\n[units]\ncount = 5\n[plan]\nreal_trials_per_session = 7\n"),
                    ConfigError);
  }

  TEST_CASE("overrides replace file values and change the hash") {
    const auto base = parse_config(kMinimal);
    Overrides ov;
    ov.seed = 43;
    ov.difficulty = stimuli::Difficulty::hard;
    ov.out = "elsewhere";
    const auto c = parse_config(kMinimal, ov);
    CHECK(c.seed == 43);
    CHECK(c.difficulties == std::vector{stimuli::Difficulty::hard});
    CHECK(c.out == std::filesystem::path("elsewhere"));
    CHECK(c.hash != base.hash);
  }

  TEST_CASE("the hash ignores formatting, key order and the output directory") {
    const auto a = parse_config("[run]\nseed = 5\nout = a\n[units]\ncount = 12\n[plan]\nreal_trials_per_session = 8\n");
    const auto b = parse_config(
        "[plan]\nreal_trials_per_session=8\n\n[units]\ncount   = 12\n[run]\nout = b\nseed=5\n");
    CHECK(a.hash == b.hash);
    const auto c = parse_config("[run]\nseed = 5\n[units]\ncount = 12\n[plan]\nreal_trials_per_session = 4\n");
    CHECK(c.hash != a.hash);
  }

  TEST_CASE("file backend requires its inputs") {
    CHECK_THROWS_AS(parse_config(std::string(kMinimal) + "[model]\nbackend = file\n"), ConfigError);
  }

  TEST_CASE("loading from disk resolves paths against the file") {
    const auto dir = imi::testing::scratch_dir("cli-config");
    std::ofstream(dir / "run.ini") << kMinimal << "[analysis]\nn_resamples = 500\n";
    const auto c = load_config(dir / "run.ini");
    CHECK(c.out == dir / "out");
    CHECK(c.n_resamples == 500);
    CHECK_THROWS_AS(load_config(dir / "missing.ini"), ConfigError);
  }
}

TEST_SUITE("commands") {
  TEST_CASE("exit codes by error kind") {
    CHECK(exit_code_for(ConfigError("x")) == kConfigError);
    CHECK(exit_code_for(DependencyError("x")) == kDependencyError);
    CHECK(exit_code_for(ValidationError("x")) == kFailure);
    CHECK(exit_code_for(std::runtime_error("x")) == kFailure);
  }

  TEST_CASE("later stages refuse to run without their inputs") {
    const auto dir = imi::testing::scratch_dir("cli-deps");
    Overrides ov;
    ov.out = dir / "out";
    const auto c = parse_config(kMinimal, ov);
    CHECK_THROWS_AS(simulate(c), DependencyError);
    CHECK_THROWS_AS(analyze(c), DependencyError);
    CHECK_THROWS_AS(export_dataset(c), DependencyError);
  }
}
