#include <doctest.h>

#include <cmath>
#include <limits>

#include "biasharness/core_types.hpp"
#include "biasharness/error.hpp"

using namespace biasharness;

TEST_CASE("display names are the taxonomy spellings") {
  CHECK(category_display_name(BiasCategory::Linguistic) == "linguistic bias");
  CHECK(category_display_name(BiasCategory::TextLevelContext) == "text-level context bias");
  CHECK(category_display_name(BiasCategory::ReportingLevelContext) == "reporting-level context bias");
  CHECK(category_display_name(BiasCategory::Cognitive) == "cognitive bias");
  CHECK(category_display_name(BiasCategory::HateSpeech) == "hate speech");
  CHECK(category_display_name(BiasCategory::FakeNews) == "fake news");
  CHECK(category_display_name(BiasCategory::Racial) == "racial bias");
  CHECK(category_display_name(BiasCategory::Gender) == "gender bias");
  CHECK(category_display_name(BiasCategory::Political) == "political bias");
  CHECK(category_display_name(BiasCategory::None) == "none");
}

TEST_CASE("slugs invert") {
  for (auto c : kCanonicalCategories) CHECK(category_from_slug(category_slug(c)) == c);
  CHECK(category_from_slug("none") == BiasCategory::None);
  CHECK(category_from_slug("other") == BiasCategory::Other);
  CHECK_FALSE(category_from_slug("politics").has_value());
}

TEST_CASE("parse_bias_type normalizes case and whitespace") {
  CHECK(parse_bias_type("Political Bias").category() == BiasCategory::Political);
  CHECK(parse_bias_type("  political   bias ").category() == BiasCategory::Political);
  CHECK(parse_bias_type("HATE SPEECH").category() == BiasCategory::HateSpeech);
  CHECK(parse_bias_type("Text-level context bias").category() == BiasCategory::TextLevelContext);
}

TEST_CASE("a bare stem without an alias stays Other") {
  CHECK(parse_bias_type("political").is_other());
  CHECK(parse_bias_type("Gender").label() == "gender");
}

TEST_CASE("sexism maps to gender bias through the default aliases") {
  CHECK(parse_bias_type("sexism").category() == BiasCategory::Gender);
  CHECK(parse_bias_type("Sexism").category() == BiasCategory::Gender);
}

TEST_CASE("unknown labels become Other and keep their spelling") {
  auto t = parse_bias_type("Spin");
  CHECK(t.is_other());
  CHECK(t.verbatim() == "Spin");
  CHECK(t.label() == "spin");
  CHECK(t.display_name() == "spin");
  CHECK(parse_bias_type("loaded language") == parse_bias_type("Loaded  Language"));
}

TEST_CASE("None is its own category") {
  CHECK(parse_bias_type("None").is_none());
  CHECK(parse_bias_type("none").is_none());
}

TEST_CASE("empty labels are rejected") {
  CHECK_THROWS_AS(parse_bias_type(""), ValidationError);
  CHECK_THROWS_AS(parse_bias_type("   "), ValidationError);
}

TEST_CASE("alias table loads from JSON") {
  auto t = AliasTable::from_json(R"({"loaded language": "linguistic bias", "partisanship": "political"})");
  CHECK(parse_bias_type("Loaded language", t).category() == BiasCategory::Linguistic);
  CHECK(parse_bias_type("partisanship", t).category() == BiasCategory::Political);
  CHECK_THROWS_AS(AliasTable::from_json(R"({"x": "not a category"})"), ConfigError);
  CHECK_THROWS_AS(AliasTable::from_json("[1]"), ConfigError);
}

TEST_CASE("EvaluationMode") {
  CHECK(EvaluationMode::blocks().unit_size() == 10);
  CHECK(EvaluationMode::blocks(4).unit_size() == 4);
  CHECK(EvaluationMode::individual().unit_size() == 1);
  CHECK(EvaluationMode::individual().name() == "individual");
  CHECK_THROWS_AS(EvaluationMode::blocks(0), ConfigError);
}

TEST_CASE("validate_finding: complete finding passes untouched") {
  RawFinding raw{"A sentence.", "political bias", 0.8, "why"};
  auto r = validate_finding(raw);
  REQUIRE(r.accepted());
  CHECK(r.flags.empty());
  CHECK(r.finding->sentence_text == "A sentence.");
  CHECK(r.finding->bias_type.category() == BiasCategory::Political);
  CHECK(r.finding->bias_score == 0.8);
  CHECK(r.finding->description == "why");
}

TEST_CASE("validate_finding: out-of-range scores clamp with a flag") {
  auto hi = validate_finding({"s", "gender bias", 1.7, "d"});
  CHECK(hi.finding->bias_score == 1.0);
  CHECK(hi.flags == std::vector<std::string>{"score_clamped"});
  auto lo = validate_finding({"s", "gender bias", -0.2, "d"});
  CHECK(lo.finding->bias_score == 0.0);
  auto nan = validate_finding({"s", "gender bias", std::numeric_limits<double>::quiet_NaN(), "d"});
  CHECK(nan.finding->bias_score == 0.0);
  CHECK(nan.flags == std::vector<std::string>{"score_clamped"});
}

TEST_CASE("validate_finding: missing optional fields get defaults and flags") {
  auto r = validate_finding({"s", std::nullopt, std::nullopt, std::nullopt});
  REQUIRE(r.accepted());
  CHECK(r.finding->bias_score == 0.5);
  CHECK(r.finding->bias_type.is_other());
  CHECK(r.finding->bias_type.label() == "unspecified");
  CHECK(r.finding->description.empty());
  CHECK(r.flags.size() == 3);
}

TEST_CASE("validate_finding: missing sentence text rejects") {
  CHECK_FALSE(validate_finding({std::nullopt, "political bias", 0.5, "d"}).accepted());
  auto r = validate_finding({"   ", "political bias", 0.5, "d"});
  CHECK_FALSE(r.accepted());
  CHECK(r.rejection == "missing sentence text");
}
