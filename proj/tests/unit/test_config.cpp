#include "ermu/config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace ermu;

namespace {
const char* kBase = R"(master_seed: 9
trials: 3
ladder: [100, 200]
problem:
  loss: huber
  lambda: 0.2
families:
  - id: lin
    kind: linear-independent
  - id: rf
    kind: random-features
    covariance: hermite-exact
free_energy:
  enabled: true
  t_offsets: [0, .inf]
)";
}  // namespace

TEST_CASE("parse reads values and fills defaults") {
  const ExperimentConfig c = parse_config(kBase);
  CHECK(c.campaign.master_seed == 9);
  CHECK(c.campaign.trials == 3);
  CHECK(c.campaign.ladder == std::vector<int>{100, 200});
  CHECK(c.campaign.problem.lambda == 0.2);
  REQUIRE(c.campaign.families.size() == 2);
  CHECK(c.campaign.families[1].kind == FamilyKind::RandomFeatures);
  CHECK(c.campaign.families[1].cov_mode == CovarianceMode::HermiteExact);
  CHECK_FALSE(c.campaign.families[0].cov_mode.has_value());
  CHECK(c.free_energy.enabled);
  CHECK(std::isinf(c.free_energy.t_offsets[1]));
  CHECK_FALSE(c.sweep.enabled);
}

TEST_CASE("serialization round-trips") {
  const ExperimentConfig c = parse_config(kBase);
  const std::string text = serialize_config(c);
  const ExperimentConfig d = parse_config(text);
  CHECK(serialize_config(d) == text);
  CHECK(config_hash(c) == config_hash(d));
  CHECK(config_hash(c).size() == 64);
}

TEST_CASE("hash ignores output location and threads but not results-relevant fields") {
  ExperimentConfig c = parse_config(kBase);
  const std::string h = config_hash(c);
  c.output_dir = "elsewhere";
  c.campaign.threads = 7;
  CHECK(config_hash(c) == h);
  c.campaign.master_seed = 10;
  CHECK(config_hash(c) != h);
}

TEST_CASE("unknown keys are reported with their position") {
  try {
    parse_config("trials: 3\nladder: [100]\nfamilies:\n  - id: a\n    kind: linear-independent\n    colour: red\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 6);
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
  }
}

TEST_CASE("empty ladder names the field") {
  try {
    parse_config("trials: 2\nladder: []\nfamilies:\n  - id: linear\n    kind: linear-independent\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "ladder");
    CHECK(e.line() == 2);
  }
}

TEST_CASE("invalid values and syntax errors") {
  CHECK_THROWS_AS(parse_config("trials: 0\nfamilies:\n  - id: a\n    kind: linear-independent\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("trials: 2\nfamilies:\n  - id: a\n    kind: banana\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("trials: 2\nfamilies: []\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("trials: 2\nfamilies:\n  - id: a:b\n    kind: linear-independent\n"), ConfigError);
  CHECK_THROWS_AS(
      parse_config("trials: 2\nfamilies:\n  - id: a\n    kind: linear-independent\n  - id: a\n    kind: random-features\n"),
      ConfigError);
  try {
    parse_config("trials: 2\nladder: [100\nfamilies: x\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() > 0);
  }
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"universality.yaml", "null_control.yaml", "neural_tangent.yaml", "diagnostics.yaml"}) {
    CAPTURE(name);
    const auto path = std::filesystem::path(ERMU_SOURCE_DIR) / "configs" / name;
    CHECK_NOTHROW(load_config(path));
  }
  CHECK_THROWS(load_config("/nonexistent/config.yaml"));
}
