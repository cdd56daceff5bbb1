#include "biasharness/prompting.hpp"

#include <fstream>
#include <sstream>

#include "biasharness/error.hpp"
#include "biasharness/parsing.hpp"
#include "text_util.hpp"

namespace biasharness {

namespace {

constexpr std::string_view kDefinitionsSlot = "{{DEFINITIONS}}";
constexpr std::string_view kExampleSlot = "{{EXAMPLE}}";

bool is_context_category(BiasCategory c) {
  return c == BiasCategory::TextLevelContext || c == BiasCategory::ReportingLevelContext ||
         c == BiasCategory::Cognitive;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("missing prompt template file: " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string ensure_newline(std::string s) {
  if (!s.empty() && s.back() != '\n') s.push_back('\n');
  return s;
}

// Replaces the line holding `slot` with `content` (dropping the line when
// content is empty).
std::string fill_slot(const std::string& tmpl, std::string_view slot, const std::string& content) {
  auto pos = tmpl.find(slot);
  if (pos == std::string::npos) throw ConfigError("template lacks placeholder " + std::string(slot));
  auto end = pos + slot.size();
  if (end < tmpl.size() && tmpl[end] == '\n') ++end;
  return tmpl.substr(0, pos) + content + tmpl.substr(end);
}

PromptSpec base_spec() { return PromptSpec{}; }

std::vector<NamedVariant> make_catalog() {
  std::vector<NamedVariant> v;
  v.push_back({"base", "Base", base_spec()});

  auto s = base_spec();
  s.include_example = false;
  v.push_back({"no-example", "No Example in Prompt", s});

  s = base_spec();
  s.include_context_defs = false;
  v.push_back({"no-context-defs", "No Contextual/Cognitive", s});

  s = base_spec();
  s.restructured = true;
  v.push_back({"restructured", "Restructured Prompt", s});

  s = base_spec();
  s.score_threshold = 0.6;
  v.push_back({"threshold-0.6", "Bias Score Threshold", s});

  s = base_spec();
  s.include_definitions = false;
  s.include_context_defs = false;
  v.push_back({"no-definitions", "No Bias Definition", s});

  s = base_spec();
  s.use_system_message = false;
  v.push_back({"no-system", "No System Prompt", s});

  s = base_spec();
  s.temperature = 0.7;
  v.push_back({"temp-0.7", "High Temperature", s});
  return v;
}

}  // namespace

void PromptSpec::validate() const {
  if (include_context_defs && !include_definitions) {
    throw ConfigError("include_context_defs requires include_definitions");
  }
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (score_threshold && !(*score_threshold >= 0.0 && *score_threshold <= 1.0)) {
    throw ConfigError("score threshold must lie in [0,1]");
  }
}

const std::vector<NamedVariant>& list_variants() {
  static const std::vector<NamedVariant> catalog = make_catalog();
  return catalog;
}

std::string variant_catalog_string() {
  std::vector<std::string> ids;
  for (const auto& v : list_variants()) ids.push_back(v.id);
  return text::join(ids, ", ");
}

const NamedVariant& find_variant(std::string_view id) {
  for (const auto& v : list_variants()) {
    if (v.id == id) return v;
  }
  throw ConfigError("unknown variant '" + std::string(id) + "'; known variants: " +
                    variant_catalog_string());
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet t;
  t.base_system_ = read_file(dir / "base.system.txt");
  t.restructured_system_ = read_file(dir / "restructured.system.txt");
  t.base_user_ = read_file(dir / "base.user.txt");
  for (auto c : kCanonicalCategories) {
    auto file = dir / "definitions" / (std::string(category_slug(c)) + ".txt");
    t.definitions_[c] = ensure_newline(read_file(file));
  }
  t.example_json_ = read_file(dir / "example.json");

  const auto outcome = parse_findings(t.example_json_);
  if (outcome.kind != ParseKind::Parsed) {
    throw ConfigError("example.json is not a well-formed finding array");
  }
  for (const auto& raw : outcome.findings) {
    auto report = validate_finding(raw);
    if (!report.accepted() || !report.flags.empty()) {
      throw ConfigError("example.json contains an incomplete finding");
    }
    t.example_.push_back(*report.finding);
  }
  for (const auto* tmpl : {&t.base_system_, &t.restructured_system_}) {
    if (tmpl->find(kDefinitionsSlot) == std::string::npos || tmpl->find(kExampleSlot) == std::string::npos) {
      throw ConfigError("system template lacks a {{DEFINITIONS}} or {{EXAMPLE}} placeholder");
    }
  }
  return t;
}

const std::string& TemplateSet::definition(BiasCategory c) const {
  auto it = definitions_.find(c);
  if (it == definitions_.end()) throw ConfigError("no definition template for category");
  return it->second;
}

std::vector<BiasCategory> included_definitions(const PromptSpec& spec) {
  std::vector<BiasCategory> out;
  if (!spec.include_definitions) return out;
  for (auto c : kCanonicalCategories) {
    if (!spec.include_context_defs && is_context_category(c)) continue;
    out.push_back(c);
  }
  return out;
}

PromptBundle build_prompt(const PromptSpec& spec, const TemplateSet& templates) {
  spec.validate();

  const auto cats = included_definitions(spec);
  std::string definitions;
  if (!cats.empty()) {
    definitions = "\nUse these definitions of the bias types:\n";
    for (auto c : cats) definitions += templates.definition(c);
  }

  std::string example;
  if (spec.include_example) {
    example = "\nExample of a correct answer:\n" + serialize_findings(templates.example_findings()) + "\n";
  }

  auto instructions = fill_slot(templates.system_template(spec.restructured), kDefinitionsSlot, definitions);
  instructions = fill_slot(instructions, kExampleSlot, example);

  PromptBundle bundle;
  bundle.definition_count = cats.size();
  if (spec.include_example) bundle.example_output = templates.example_findings();
  if (spec.use_system_message) {
    bundle.system_text = std::move(instructions);
  } else {
    bundle.user_prefix = ensure_newline(instructions) + "\n" + ensure_newline(templates.user_lead_in());
  }
  return bundle;
}

std::vector<ChatMessage> render_messages(const PromptBundle& bundle, std::string_view content,
                                         const PromptSpec& spec) {
  if (content.empty()) throw ValidationError("cannot render a prompt for empty content");
  std::vector<ChatMessage> messages;
  if (spec.use_system_message) {
    if (!bundle.system_text) throw ConfigError("bundle has no system text for a system-message spec");
    messages.push_back({"system", *bundle.system_text});
    messages.push_back({"user", std::string(content)});
  } else {
    messages.push_back({"user", bundle.user_prefix + std::string(content)});
  }
  return messages;
}

}  // namespace biasharness
