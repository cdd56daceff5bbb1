#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "biasharness/core_types.hpp"
#include "biasharness/dataset.hpp"
#include "biasharness/prompting.hpp"

namespace biasharness {

// What a model should have said about one gold-Biased sentence.
struct OracleFinding {
  BiasType bias_type;
  double bias_score = 0.5;
  std::string description;
};

using OracleMap = std::map<std::size_t, OracleFinding>;

// {"<sentence id>": {"bias_type": "...", "bias_score": 0.8, "bias_description": "..."}}
// bias_score is optional and defaults to 0.5.
OracleMap parse_oracle(std::string_view json_text, const AliasTable& aliases = AliasTable::defaults());
OracleMap load_oracle(const std::filesystem::path& path, const AliasTable& aliases = AliasTable::defaults());

struct FinetuneExample {
  std::vector<ChatMessage> messages;  // [system?], user, assistant
  std::vector<std::size_t> sentence_ids;

  const std::string& assistant() const { return messages.back().content; }
  friend bool operator==(const FinetuneExample&, const FinetuneExample&) = default;
};

struct FinetuneSet {
  std::vector<FinetuneExample> examples;
  Dataset remaining;
  std::vector<std::size_t> consumed_ids;  // sorted
  std::uint64_t seed = 0;
};

// Shuffles the units of `d` with `seed`, turns the first n into examples and
// returns the rest. Throws ConfigError when n exceeds the unit count and
// DataError listing every gold-Biased sentence without an oracle entry.
FinetuneSet build_finetune_set(const Dataset& d, std::size_t n, const EvaluationMode& mode, const PromptSpec& spec,
                               const TemplateSet& templates, const OracleMap& oracle, std::uint64_t seed);

// One {"messages":[...]} object per line, newline-terminated.
std::string to_jsonl(const std::vector<FinetuneExample>& examples);
void write_jsonl(const std::vector<FinetuneExample>& examples, const std::filesystem::path& path);
// sentence_ids are not stored in the JSONL and come back empty.
std::vector<FinetuneExample> parse_jsonl(std::string_view text);
std::vector<FinetuneExample> read_jsonl(const std::filesystem::path& path);

// seed, n, mode, source dataset, consumed ids, example count.
std::string finetune_manifest_json(const FinetuneSet& set, const EvaluationMode& mode, std::size_t n);

}  // namespace biasharness
