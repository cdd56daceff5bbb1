#include <doctest.h>

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "biasharness/error.hpp"
#include "biasharness/finetune.hpp"
#include "biasharness/parsing.hpp"
#include "fixtures.hpp"

using namespace biasharness;

namespace {

Dataset prepared_mbic(const EvaluationMode& mode) {
  auto d = load_dataset_text(bhtest::mbic_csv({}), ColumnMap{}, "mbic.csv");
  return prepare_for_mode(clean(d), mode);
}

OracleMap oracle_for(const Dataset& d) {
  OracleMap o;
  for (const auto& s : d.sentences) {
    if (s.gold != GoldLabel::Biased) continue;
    o[s.id] = {BiasType(kCanonicalCategories[s.id % 9]), 0.5 + (s.id % 5) / 10.0, "oracle note " + std::to_string(s.id)};
  }
  return o;
}

const TemplateSet& templates() {
  static const auto t = TemplateSet::load(bhtest::kTemplateDir);
  return t;
}

}  // namespace

TEST_CASE("oracle parsing") {
  auto o = parse_oracle(R"({"3": {"bias_type": "sexism", "bias_score": 1.4}, "10": {"bias_type": "political bias",
                           "bias_description": "loaded"}})");
  REQUIRE(o.size() == 2);
  CHECK(o.at(3).bias_type == BiasType(BiasCategory::Gender));
  CHECK(o.at(3).bias_score == 1.0);
  CHECK(o.at(10).bias_score == 0.5);
  CHECK(o.at(10).description == "loaded");
  CHECK_THROWS_AS(parse_oracle("[]"), DataError);
  CHECK_THROWS_AS(parse_oracle(R"({"x1": {"bias_type": "racial bias"}})"), DataError);
  CHECK_THROWS_AS(parse_oracle(R"({"1": {"bias_score": 0.3}})"), DataError);
  CHECK_THROWS_AS(parse_oracle("{"), DataError);
}

TEST_CASE("block-mode export of 50 units") {
  const auto mode = EvaluationMode::blocks(10);
  auto d = prepared_mbic(mode);
  REQUIRE(d.size() == 1550);
  auto set = build_finetune_set(d, 50, mode, PromptSpec{}, templates(), oracle_for(d), 42);

  CHECK(set.examples.size() == 50);
  CHECK(set.consumed_ids.size() == 500);
  CHECK(set.remaining.size() == 1050);
  CHECK(set.remaining.provenance == d.provenance);

  std::set<std::size_t> consumed(set.consumed_ids.begin(), set.consumed_ids.end());
  for (const auto& s : set.remaining.sentences) CHECK_FALSE(consumed.count(s.id));

  for (const auto& ex : set.examples) {
    REQUIRE(ex.messages.size() == 3);
    CHECK(ex.messages[0].role == "system");
    CHECK(ex.messages[2].role == "assistant");
    auto parsed = parse_findings(ex.assistant());
    CHECK(parsed.kind == ParseKind::Parsed);
    std::size_t biased = 0;
    for (auto id : ex.sentence_ids) biased += d.by_id(id).gold == GoldLabel::Biased;
    CHECK(parsed.findings.size() == biased);
    for (const auto& f : parsed.findings) {
      auto v = validate_finding(f);
      REQUIRE(v.accepted());
      CHECK(v.flags.empty());
    }
  }
}

TEST_CASE("individual-mode export leaves the rest of the sentences") {
  const auto mode = EvaluationMode::individual();
  auto d = prepared_mbic(mode);
  REQUIRE(d.size() == 1551);
  auto set = build_finetune_set(d, 50, mode, PromptSpec{}, templates(), oracle_for(d), 1);
  CHECK(set.remaining.size() == 1501);
  for (const auto& ex : set.examples) CHECK(ex.sentence_ids.size() == 1);
}

TEST_CASE("the seed decides which units are consumed") {
  const auto mode = EvaluationMode::blocks(10);
  auto d = prepared_mbic(mode);
  auto oracle = oracle_for(d);
  auto a = build_finetune_set(d, 20, mode, PromptSpec{}, templates(), oracle, 5);
  auto b = build_finetune_set(d, 20, mode, PromptSpec{}, templates(), oracle, 5);
  auto c = build_finetune_set(d, 20, mode, PromptSpec{}, templates(), oracle, 6);
  CHECK(a.consumed_ids == b.consumed_ids);
  CHECK(to_jsonl(a.examples) == to_jsonl(b.examples));
  CHECK(a.consumed_ids != c.consumed_ids);
}

TEST_CASE("export errors") {
  const auto mode = EvaluationMode::blocks(10);
  auto d = prepared_mbic(mode);
  CHECK_THROWS_AS(build_finetune_set(d, 156, mode, PromptSpec{}, templates(), oracle_for(d), 0), ConfigError);
  try {
    build_finetune_set(d, 155, mode, PromptSpec{}, templates(), OracleMap{}, 0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("oracle has no finding") != std::string::npos);
  }
}

TEST_CASE("no-system variant folds the instructions into the user turn") {
  const auto mode = EvaluationMode::blocks(10);
  auto d = prepared_mbic(mode);
  auto set = build_finetune_set(d, 3, mode, find_variant("no-system").spec, templates(), oracle_for(d), 0);
  for (const auto& ex : set.examples) {
    REQUIRE(ex.messages.size() == 2);
    CHECK(ex.messages[0].role == "user");
  }
}

TEST_CASE("JSONL round trip and manifest") {
  const auto mode = EvaluationMode::blocks(10);
  auto d = prepared_mbic(mode);
  auto set = build_finetune_set(d, 4, mode, PromptSpec{}, templates(), oracle_for(d), 9);
  auto text = to_jsonl(set.examples);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  auto back = parse_jsonl(text);
  REQUIRE(back.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(back[i].messages == set.examples[i].messages);

  bhtest::TempDir dir;
  write_jsonl(set.examples, dir / "out" / "ft.jsonl");
  CHECK(read_jsonl(dir / "out" / "ft.jsonl").size() == 4);

  CHECK_THROWS_AS(parse_jsonl("{\"messages\": [{\"role\": \"user\", \"content\": \"x\"}]}\n"), DataError);
  CHECK_THROWS_AS(parse_jsonl("not json\n"), DataError);

  auto manifest = nlohmann::json::parse(finetune_manifest_json(set, mode, 4));
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["examples"] == 4);
  CHECK(manifest["consumed_ids"].size() == 40);
  CHECK(manifest["remaining_sentences"] == 1510);
}

TEST_CASE("remaining sentences reload through the CSV writer") {
  const auto mode = EvaluationMode::blocks(10);
  auto d = prepared_mbic(mode);
  auto set = build_finetune_set(d, 50, mode, PromptSpec{}, templates(), oracle_for(d), 3);
  auto csv = dataset_to_csv(set.remaining, ColumnMap{});
  auto reloaded = load_dataset_text(csv, ColumnMap{}, "remaining.csv");
  REQUIRE(reloaded.size() == 1050);
  for (std::size_t i = 0; i < reloaded.size(); ++i) {
    CHECK(reloaded.sentences[i].text == set.remaining.sentences[i].text);
    CHECK(reloaded.sentences[i].gold == set.remaining.sentences[i].gold);
  }
}
