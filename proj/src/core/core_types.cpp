#include "biasharness/core_types.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

#include "biasharness/error.hpp"
#include "text_util.hpp"

namespace biasharness {

namespace {

struct CategoryInfo {
  BiasCategory category;
  std::string_view display;
  std::string_view slug;
};

constexpr CategoryInfo kInfo[] = {
    {BiasCategory::Linguistic, "linguistic bias", "linguistic"},
    {BiasCategory::TextLevelContext, "text-level context bias", "text-level-context"},
    {BiasCategory::ReportingLevelContext, "reporting-level context bias",
     "reporting-level-context"},
    {BiasCategory::Cognitive, "cognitive bias", "cognitive"},
    {BiasCategory::HateSpeech, "hate speech", "hate-speech"},
    {BiasCategory::FakeNews, "fake news", "fake-news"},
    {BiasCategory::Racial, "racial bias", "racial"},
    {BiasCategory::Gender, "gender bias", "gender"},
    {BiasCategory::Political, "political bias", "political"},
    {BiasCategory::None, "none", "none"},
};

std::optional<BiasCategory> match_canonical(std::string_view normalized) {
  for (const auto& info : kInfo) {
    if (normalized == info.display) return info.category;
  }
  constexpr std::string_view kSuffix = " bias";
  if (text::ends_with(normalized, kSuffix)) {
    auto stem = normalized.substr(0, normalized.size() - kSuffix.size());
    for (const auto& info : kInfo) {
      if (info.category == BiasCategory::None) continue;
      if (stem == info.display) return info.category;
      // "political bias" minus its own suffix
      auto display = info.display;
      if (text::ends_with(display, kSuffix) &&
          stem == display.substr(0, display.size() - kSuffix.size())) {
        return info.category;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view category_display_name(BiasCategory c) {
  for (const auto& info : kInfo) {
    if (info.category == c) return info.display;
  }
  return {};
}

std::string_view category_slug(BiasCategory c) {
  for (const auto& info : kInfo) {
    if (info.category == c) return info.slug;
  }
  return "other";
}

std::optional<BiasCategory> category_from_slug(std::string_view slug) {
  for (const auto& info : kInfo) {
    if (info.slug == slug) return info.category;
  }
  if (slug == "other") return BiasCategory::Other;
  return std::nullopt;
}

bool is_canonical(BiasCategory c) {
  return c != BiasCategory::None && c != BiasCategory::Other;
}

BiasType::BiasType(BiasCategory category) : category_(category) {
  if (category == BiasCategory::Other) {
    throw ValidationError("Other bias type requires a label");
  }
}

BiasType BiasType::other(std::string verbatim) {
  BiasType t;
  t.category_ = BiasCategory::Other;
  t.verbatim_ = text::trim(verbatim);
  t.label_ = normalize_label(t.verbatim_);
  return t;
}

std::string BiasType::display_name() const {
  if (is_other()) return label_;
  return std::string(category_display_name(category_));
}

AliasTable AliasTable::defaults() {
  AliasTable t;
  t.add("sexism", BiasCategory::Gender);
  return t;
}

AliasTable AliasTable::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("alias table is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("alias table must be a JSON object");
  AliasTable t;
  for (const auto& [alias, target] : doc.items()) {
    if (!target.is_string()) throw ConfigError("alias '" + alias + "' must map to a string");
    const auto key = normalize_label(target.get<std::string>());
    std::optional<BiasCategory> cat = match_canonical(key);
    if (!cat) {
      for (const auto& info : kInfo) {
        if (key == info.slug) cat = info.category;
      }
    }
    if (!cat) throw ConfigError("alias '" + alias + "' targets unknown category '" + key + "'");
    t.add(alias, *cat);
  }
  return t;
}

void AliasTable::add(std::string_view alias, BiasCategory category) {
  entries_[normalize_label(alias)] = category;
}

std::optional<BiasCategory> AliasTable::lookup(std::string_view normalized) const {
  auto it = entries_.find(std::string(normalized));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string normalize_label(std::string_view label) {
  return text::collapse_whitespace(text::to_lower_ascii(label));
}

BiasType parse_bias_type(std::string_view label, const AliasTable& aliases) {
  const auto normalized = normalize_label(label);
  if (normalized.empty()) throw ValidationError("empty bias type label");
  if (auto cat = match_canonical(normalized)) return BiasType(*cat);
  if (auto cat = aliases.lookup(normalized)) return BiasType(*cat);
  return BiasType::other(std::string(label));
}

EvaluationMode EvaluationMode::blocks(std::size_t size) {
  if (size == 0) throw ConfigError("block size must be at least 1");
  return {Kind::Blocks, size};
}

std::string_view gold_label_name(GoldLabel g) {
  switch (g) {
    case GoldLabel::Biased: return "Biased";
    case GoldLabel::NonBiased: return "NonBiased";
    case GoldLabel::Undecided: return "Undecided";
  }
  return "?";
}

ValidationReport validate_finding(const RawFinding& raw, const AliasTable& aliases) {
  ValidationReport report;
  if (!raw.sentence_text || text::trim(*raw.sentence_text).empty()) {
    report.rejection = "missing sentence text";
    return report;
  }

  BiasFinding f;
  f.sentence_text = *raw.sentence_text;

  if (raw.bias_type && !text::trim(*raw.bias_type).empty()) {
    f.bias_type = parse_bias_type(*raw.bias_type, aliases);
  } else {
    f.bias_type = BiasType::other("unspecified");
    report.flags.emplace_back(kFlagTypeMissing);
  }

  if (raw.bias_score) {
    double s = *raw.bias_score;
    if (std::isnan(s)) {
      s = 0.0;
      report.flags.emplace_back(kFlagScoreClamped);
    } else if (s < 0.0 || s > 1.0) {
      s = s < 0.0 ? 0.0 : 1.0;
      report.flags.emplace_back(kFlagScoreClamped);
    }
    f.bias_score = s;
  } else {
    f.bias_score = 0.5;
    report.flags.emplace_back(kFlagScoreMissing);
  }

  if (raw.description) {
    f.description = *raw.description;
  } else {
    report.flags.emplace_back(kFlagDescriptionMissing);
  }

  report.finding = std::move(f);
  return report;
}

}  // namespace biasharness
