#include <doctest.h>

#include <fstream>
#include <sstream>

#include "imi/common/errors.hpp"
#include "support.hpp"

using namespace imi;
using namespace imi::store;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<ImiResponseRecord> fake_records(const StimulusManifest& m, std::size_t sessions, Rng& rng) {
  std::vector<ImiResponseRecord> out;
  for (std::size_t s = 0; s < sessions; ++s) {
    const bool passed = s % 3 != 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& e = m.entries[rng.below(m.entries.size())];
      ImiResponseRecord r;
      r.model_id = e.unit.model_id;
      r.layer_id = e.unit.layer_id;
      r.channel_index = e.unit.channel_index;
      r.condition = e.condition;
      r.difficulty = e.difficulty;
      r.instance_index = e.instance_index;
      r.participant_id = "p" + std::to_string(s);
      r.session_id = "s" + std::to_string(s);
      r.trial_index = k;
      r.positive_side = rng.bernoulli(0.5) ? Side::top : Side::bottom;
      r.choice = rng.bernoulli(0.5) ? Side::top : Side::bottom;
      r.correct = r.choice == r.positive_side;
      r.confidence = 1 + static_cast<int>(rng.below(3));
      r.reaction_time_ms = rng.uniform(200.0, 5000.0);
      r.quality_passed = passed;
      if (!passed) r.failed_checks = {"catch_correct"};
      out.push_back(r);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("dataset write, read, write is byte-identical") {
  const auto m = testing::fake_manifest(4, 3, {stimuli::Condition::natural, stimuli::Condition::synthetic});
  const auto dir = testing::scratch_dir("store-roundtrip");
  testing::materialize_images(m, dir / "src");
  Rng rng(4);
  const auto records = fake_records(m, 9, rng);
  write_dataset(records, m, dir / "src", dir / "a");
  const auto back = read_dataset(dir / "a");
  CHECK(back.records == records);
  write_dataset(back.records, back.manifest, dir / "a" / "images", dir / "b");
  CHECK(slurp(dir / "a" / "responses.jsonl") == slurp(dir / "b" / "responses.jsonl"));
  CHECK(slurp(dir / "a" / "manifest.json") == slurp(dir / "b" / "manifest.json"));
  for (const auto& p : m.image_paths()) CHECK(slurp(dir / "a" / "images" / p) == slurp(dir / "b" / "images" / p));
  // Writing onto itself leaves the files untouched.
  write_dataset(back.records, back.manifest, dir / "a" / "images", dir / "a");
  CHECK(slurp(dir / "a" / "responses.jsonl") == slurp(dir / "b" / "responses.jsonl"));
}

TEST_CASE("partition and grouping") {
  const auto m = testing::fake_manifest(3, 2);
  Rng rng(5);
  const auto records = fake_records(m, 12, rng);
  const auto part = partition_quality(records);
  CHECK(part.main.size() == 8 * 4);
  CHECK(part.development.size() == 4 * 4);
  for (const auto& r : part.main) CHECK(r.quality_passed);
  const auto by_unit = group_records(records, GroupKey::unit);
  std::size_t total = 0;
  for (const auto& [key, group] : by_unit) {
    total += group.size();
    for (const auto& r : group) CHECK(key == r.unit().to_string());
  }
  CHECK(total == records.size());
  CHECK(group_records(records, GroupKey::model).size() == 1);
  CHECK(group_records(records, GroupKey::layer).begin()->first == "refcnn.conv3");
}

TEST_CASE("reader reports the offending line") {
  const auto m = testing::fake_manifest(2, 2);
  const auto dir = testing::scratch_dir("store-bad");
  testing::materialize_images(m, dir / "src");
  Rng rng(6);
  write_dataset(fake_records(m, 2, rng), m, dir / "src", dir / "d");
  const auto good = slurp(dir / "d" / "responses.jsonl");
  auto rewrite = [&](const std::string& text) {
    std::ofstream(dir / "d" / "responses.jsonl", std::ios::binary) << text;
  };
  auto message = [&] {
    try {
      read_dataset(dir / "d");
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  rewrite(good.substr(0, good.size() - 1));
  CHECK(message().find("line 8 is truncated") != std::string::npos);
  rewrite(good + "{not json}\n");
  CHECK(message().find("line 9 is malformed") != std::string::npos);
  std::string extra = good;
  extra.insert(1, "\"surprise\":1,");
  rewrite(extra);
  CHECK(message().find("line 1") != std::string::npos);
  CHECK(message().find("surprise") != std::string::npos);
  std::string bad_unit = good;
  bad_unit.replace(bad_unit.find("\"channel_index\":"), 17, "\"channel_index\":31");
  rewrite(bad_unit);
  CHECK_FALSE(message().empty());
}

TEST_CASE("validation lists offending records") {
  const auto m = testing::fake_manifest(2, 2);
  Rng rng(7);
  auto records = fake_records(m, 2, rng);
  records[1].confidence = 4;
  records[3].correct = !records[3].correct;
  records[5].instance_index = 9;
  try {
    validate_records(records, m);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("record 2") != std::string::npos);
    CHECK(msg.find("record 4") != std::string::npos);
    CHECK(msg.find("record 6") != std::string::npos);
  }
}

TEST_CASE("manifest versioning and unknown keys") {
  const auto m = testing::fake_manifest(2, 1);
  nlohmann::json j = m;
  CHECK(j.at("imi_version") == kImiVersion);
  const auto back = j.get<StimulusManifest>();
  CHECK(nlohmann::json(back).dump() == j.dump());
  auto future = j;
  future["imi_version"] = kImiVersion + 1;
  CHECK_THROWS_AS(future.get<StimulusManifest>(), ValidationError);
  auto extra = j;
  extra["responses_v2"] = 1;
  CHECK_THROWS_AS(extra.get<StimulusManifest>(), ValidationError);
  auto broken = m;
  broken.entries[0].positive_references.pop_back();
  CHECK_THROWS_AS(broken.validate(), ValidationError);
}
