#include <doctest.h>

#include <string>

#include "s2wef/config.hpp"
#include "s2wef/error.hpp"

using namespace s2wef;
using namespace s2wef::fedsim;

namespace {

std::vector<std::string> diagnostics_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigFileError& e) {
    return e.diagnostics();
  }
  return {};
}

bool mentions(const std::vector<std::string>& diags, const std::string& what) {
  for (const auto& d : diags) {
    if (d.find(what) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("defaults are valid") {
  SimConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.free_rider_count() == 3);
  CHECK(c.attack_onset() == 2);
  CHECK(c.architecture() == std::vector<std::size_t>{8, c.hidden_units, 2});
  CHECK(c.train.local_iterations == 5);
  CHECK(c.partition.beta == 0.5);
}

TEST_CASE("config round-trip" * doctest::test_suite("invariants")) {
  SimConfig c;
  c.clients = 20;
  c.free_rider_ratio = 0.1;
  c.scenario = Scenario::S2;
  c.attack.kind = attacks::AttackKind::AWCA;
  c.attack.awca_sigma = 1e-6;
  c.attack.use_abs = false;
  c.partition = {PartitionKind::DIRICHLET, 0.25};
  c.rounds = 7;
  c.train = {0.01, 0.5, 16, 3};
  c.hidden_units = 12;
  c.detector = detect::DetectorKind::WEF_NA_BASELINE;
  c.accumulate = true;
  c.baseline_epsilon = 0.1;
  c.seeds = {9, 8, 123456789012345ULL};
  c.dataset.classes = 3;
  c.dataset.separation = 1.7;
  const std::string text = dump_config(c);
  const SimConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(dump_config(back) == text);
  CHECK(parse_config(dump_config(SimConfig{})) == SimConfig{});
}

TEST_CASE("a minimal file takes defaults") {
  const auto c = parse_config(R"({"schema_version": 1})");
  CHECK(c == SimConfig{});
}

TEST_CASE("unknown keys are rejected with a line number") {
  const auto d = diagnostics_of("{\n  \"schema_version\": 1,\n  \"clinets\": 10\n}\n");
  REQUIRE(d.size() == 1);
  CHECK(mentions(d, "line 3"));
  CHECK(mentions(d, "clinets"));

  const auto nested = diagnostics_of("{\n  \"schema_version\": 1,\n  \"train\": {\n    \"lr\": 0.1\n  }\n}\n");
  CHECK(mentions(nested, "line 4"));
  CHECK(mentions(nested, "/train/lr"));
}

TEST_CASE("schema version and types are checked") {
  CHECK(mentions(diagnostics_of(R"({"clients": 10})"), "schema_version"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 2})"), "schema_version"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 1, "clients": "ten"})"), "/clients"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 1, "clients": -3})"), "/clients"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 1, "scenario": "S3"})"), "/scenario"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 1, "attack": {"kind": "XYZ"}})"), "/attack/kind"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 1, "detector": "FOO"})"), "/detector"));
  CHECK(mentions(diagnostics_of(R"([1, 2])"), "object"));
}

TEST_CASE("malformed JSON reports a position") {
  const auto d = diagnostics_of("{\n  \"schema_version\": 1,\n  \"clients\": 10,,\n}\n");
  REQUIRE(d.size() == 1);
  CHECK(mentions(d, "line 3"));
}

TEST_CASE("semantic validation" * doctest::test_suite("invariants")) {
  SimConfig c;
  c.free_rider_ratio = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.free_rider_ratio = 0.25;  // 2.5 clients
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.clients = 4;
  c.free_rider_ratio = 0.25;
  CHECK_NOTHROW(c.validate());
  c = SimConfig{};
  c.rounds = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.train.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.attack.rwa_range = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  const auto d = diagnostics_of("{\n  \"schema_version\": 1,\n  \"free_rider_ratio\": 0.6\n}\n");
  CHECK(mentions(d, "line 3"));
  CHECK(mentions(d, "honest majority"));
  CHECK(mentions(diagnostics_of(R"({"schema_version": 1, "rounds": 2})"), "rounds"));
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigFileError);
}
