#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biasharness {

// The nine canonical bias categories plus the two open-ended cases.
enum class BiasCategory {
  Linguistic,
  TextLevelContext,
  ReportingLevelContext,
  Cognitive,
  HateSpeech,
  FakeNews,
  Racial,
  Gender,
  Political,
  None,   // explicit "no bias" finding
  Other,  // model-invented label
};

inline constexpr std::array<BiasCategory, 9> kCanonicalCategories = {
    BiasCategory::Linguistic,  BiasCategory::TextLevelContext,
    BiasCategory::ReportingLevelContext, BiasCategory::Cognitive,
    BiasCategory::HateSpeech,  BiasCategory::FakeNews,
    BiasCategory::Racial,      BiasCategory::Gender,
    BiasCategory::Political,
};

// Bit-exact display name ("political bias", "none", ...). Empty for Other.
std::string_view category_display_name(BiasCategory c);

// Short identifier used for template file names ("political", "text-level-context").
std::string_view category_slug(BiasCategory c);

bool is_canonical(BiasCategory c);

// Inverse of category_slug, including "none" and "other".
std::optional<BiasCategory> category_from_slug(std::string_view slug);

class BiasType {
 public:
  BiasType() = default;
  explicit BiasType(BiasCategory category);

  // Other(label). `verbatim` is kept for the raw record; `label` is the
  // normalized comparison key and the display name.
  static BiasType other(std::string verbatim);

  BiasCategory category() const { return category_; }
  bool is_other() const { return category_ == BiasCategory::Other; }
  bool is_none() const { return category_ == BiasCategory::None; }
  bool is_canonical() const { return biasharness::is_canonical(category_); }

  const std::string& label() const { return label_; }
  const std::string& verbatim() const { return verbatim_; }

  std::string display_name() const;

  friend bool operator==(const BiasType& a, const BiasType& b) {
    return a.category_ == b.category_ && a.label_ == b.label_;
  }
  friend bool operator<(const BiasType& a, const BiasType& b) {
    if (a.category_ != b.category_) return a.category_ < b.category_;
    return a.label_ < b.label_;
  }

 private:
  BiasCategory category_ = BiasCategory::None;
  std::string label_;
  std::string verbatim_;
};

// Normalized-label → category map consulted after the canonical names.
class AliasTable {
 public:
  // Default table: {"sexism" → Gender}.
  static AliasTable defaults();
  // JSON object {"alias": "canonical display name or slug", ...}.
  static AliasTable from_json(std::string_view json_text);

  void add(std::string_view alias, BiasCategory category);
  std::optional<BiasCategory> lookup(std::string_view normalized) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, BiasCategory> entries_;
};

// trim, lowercase, collapse internal whitespace.
std::string normalize_label(std::string_view label);

// Throws ValidationError on an empty (or all-whitespace) label.
BiasType parse_bias_type(std::string_view label,
                         const AliasTable& aliases = AliasTable::defaults());

struct BiasFinding {
  std::string sentence_text;
  BiasType bias_type;
  double bias_score = 0.0;
  std::string description;

  friend bool operator==(const BiasFinding&, const BiasFinding&) = default;
};

enum class GoldLabel { Biased, NonBiased, Undecided };

// Blocks(size): sentences joined in groups per request. Individual: one
// sentence per request.
struct EvaluationMode {
  enum class Kind { Blocks, Individual };

  Kind kind = Kind::Blocks;
  std::size_t block_size = 10;

  static EvaluationMode blocks(std::size_t size = 10);
  static EvaluationMode individual() { return {Kind::Individual, 1}; }

  bool is_blocks() const { return kind == Kind::Blocks; }
  // Sentences per request: block_size in block mode, 1 otherwise.
  std::size_t unit_size() const { return is_blocks() ? block_size : 1; }
  std::string name() const { return is_blocks() ? "blocks" : "individual"; }

  friend bool operator==(const EvaluationMode&, const EvaluationMode&) = default;
};

std::string_view gold_label_name(GoldLabel g);

// A finding as it arrives from a model, before any checks.
struct RawFinding {
  std::optional<std::string> sentence_text;
  std::optional<std::string> bias_type;
  std::optional<double> bias_score;
  std::optional<std::string> description;
};

// Flag names recorded by validate_finding.
inline constexpr std::string_view kFlagScoreClamped = "score_clamped";
inline constexpr std::string_view kFlagScoreMissing = "score_missing";
inline constexpr std::string_view kFlagDescriptionMissing = "description_missing";
inline constexpr std::string_view kFlagTypeMissing = "type_missing";

struct ValidationReport {
  std::optional<BiasFinding> finding;  // absent when rejected
  std::vector<std::string> flags;
  std::string rejection;  // non-empty iff rejected

  bool accepted() const { return finding.has_value(); }
};

// Scores outside [0,1] clamp (flagged); a missing score becomes 0.5 and a
// missing type becomes Other("unspecified"), both flagged. Missing or empty
// sentence text rejects.
ValidationReport validate_finding(const RawFinding& raw,
                                  const AliasTable& aliases = AliasTable::defaults());

}  // namespace biasharness
