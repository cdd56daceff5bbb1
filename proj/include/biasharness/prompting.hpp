#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasharness/core_types.hpp"

namespace biasharness {

struct PromptSpec {
  bool include_example = true;
  bool include_context_defs = true;  // text-level, reporting-level, cognitive
  bool include_definitions = true;   // all nine when context defs are on, six otherwise
  bool restructured = false;
  bool use_system_message = true;
  double temperature = 0.0;
  std::optional<double> score_threshold;

  // Throws ConfigError on an invariant violation.
  void validate() const;

  friend bool operator==(const PromptSpec&, const PromptSpec&) = default;
};

struct NamedVariant {
  std::string id;            // CLI value, e.g. "no-definitions"
  std::string display_name;  // report row label
  PromptSpec spec;
};

// The eight variants in catalog order: base, no-example, no-context-defs,
// restructured, threshold-0.6, no-definitions, no-system, temp-0.7.
const std::vector<NamedVariant>& list_variants();
// Throws ConfigError listing the catalog when `id` is unknown.
const NamedVariant& find_variant(std::string_view id);
std::string variant_catalog_string();

// On-disk prompt templates:
//   base.system.txt, base.user.txt, restructured.system.txt,
//   definitions/<slug>.txt (one per canonical category), example.json
// System templates carry {{DEFINITIONS}} and {{EXAMPLE}} placeholder lines.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir);

  const std::string& system_template(bool restructured) const {
    return restructured ? restructured_system_ : base_system_;
  }
  const std::string& user_lead_in() const { return base_user_; }
  const std::string& definition(BiasCategory c) const;
  const std::string& example_json() const { return example_json_; }
  const std::vector<BiasFinding>& example_findings() const { return example_; }

 private:
  std::string base_system_;
  std::string restructured_system_;
  std::string base_user_;
  std::map<BiasCategory, std::string> definitions_;
  std::string example_json_;
  std::vector<BiasFinding> example_;
};

struct PromptBundle {
  std::optional<std::string> system_text;  // absent when !use_system_message
  std::string user_prefix;                 // empty when the system message is used
  std::vector<BiasFinding> example_output;  // empty unless include_example
  std::size_t definition_count = 0;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

// Categories whose definitions the spec includes, in canonical order.
std::vector<BiasCategory> included_definitions(const PromptSpec& spec);

PromptBundle build_prompt(const PromptSpec& spec, const TemplateSet& templates);

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Throws ValidationError on empty content.
std::vector<ChatMessage> render_messages(const PromptBundle& bundle, std::string_view content,
                                         const PromptSpec& spec);

}  // namespace biasharness
