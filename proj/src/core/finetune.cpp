#include "biasharness/finetune.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

#include "biasharness/parsing.hpp"
#include "biasharness/pipeline.hpp"
#include "biasharness/random.hpp"
#include "json_io.hpp"
#include "text_util.hpp"

namespace biasharness {

using nlohmann::ordered_json;

OracleMap parse_oracle(std::string_view json_text, const AliasTable& aliases) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("oracle file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("oracle file must be a JSON object keyed by sentence id");

  OracleMap out;
  for (const auto& [key, value] : j.items()) {
    std::size_t id = 0;
    try {
      std::size_t used = 0;
      id = std::stoul(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw DataError("oracle key '" + key + "' is not a sentence id");
    }
    if (!value.is_object() || !value.contains("bias_type") || !value["bias_type"].is_string()) {
      throw DataError("oracle entry " + key + " needs a bias_type string");
    }
    OracleFinding f;
    f.bias_type = parse_bias_type(value["bias_type"].get<std::string>(), aliases);
    if (value.contains("bias_score") && !value["bias_score"].is_null()) {
      if (!value["bias_score"].is_number()) throw DataError("oracle entry " + key + ": bias_score must be a number");
      f.bias_score = std::clamp(value["bias_score"].get<double>(), 0.0, 1.0);
    }
    if (value.contains("bias_description") && value["bias_description"].is_string()) {
      f.description = value["bias_description"].get<std::string>();
    }
    out[id] = std::move(f);
  }
  return out;
}

OracleMap load_oracle(const std::filesystem::path& path, const AliasTable& aliases) {
  return parse_oracle(jsonio::read_text_file(path), aliases);
}

FinetuneSet build_finetune_set(const Dataset& d, std::size_t n, const EvaluationMode& mode, const PromptSpec& spec,
                               const TemplateSet& templates, const OracleMap& oracle, std::uint64_t seed) {
  spec.validate();
  const auto units = make_blocks(d, mode.unit_size());
  if (n > units.size()) {
    throw ConfigError("cannot take " + std::to_string(n) + " fine-tune examples from " +
                      std::to_string(units.size()) + " units");
  }
  const auto order = shuffled_indices(units.size(), seed);
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));

  std::vector<std::string> missing;
  for (auto u : chosen) {
    for (auto id : units[u].sentence_ids) {
      if (d.by_id(id).gold == GoldLabel::Biased && !oracle.count(id)) missing.push_back(std::to_string(id));
    }
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end(), [](const auto& a, const auto& b) { return std::stoul(a) < std::stoul(b); });
    throw DataError("oracle has no finding for biased sentence ids: " + text::join(missing, ", "));
  }

  const auto bundle = build_prompt(spec, templates);
  FinetuneSet set;
  set.seed = seed;
  std::set<std::size_t> consumed;
  for (auto u : chosen) {
    const auto& unit = units[u];
    std::vector<BiasFinding> findings;
    for (auto id : unit.sentence_ids) {
      const auto& s = d.by_id(id);
      consumed.insert(id);
      if (s.gold != GoldLabel::Biased) continue;
      const auto& o = oracle.at(id);
      findings.push_back({s.text, o.bias_type, o.bias_score, o.description});
    }
    FinetuneExample ex;
    ex.sentence_ids = unit.sentence_ids;
    ex.messages = render_messages(bundle, unit.text, spec);
    ex.messages.push_back({"assistant", serialize_findings(findings)});

    const auto check = parse_findings(ex.assistant());
    if (check.kind != ParseKind::Parsed || check.findings.size() != findings.size()) {
      throw DataError("generated assistant output for unit " + std::to_string(u) + " does not parse cleanly");
    }
    set.examples.push_back(std::move(ex));
  }

  set.consumed_ids.assign(consumed.begin(), consumed.end());
  set.remaining.provenance = d.provenance;
  set.remaining.cleaned = d.cleaned;
  for (const auto& s : d.sentences) {
    if (!consumed.count(s.id)) set.remaining.sentences.push_back(s);
  }
  return set;
}

std::string to_jsonl(const std::vector<FinetuneExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    ordered_json line;
    line["messages"] = ordered_json::array();
    for (const auto& m : ex.messages) line["messages"].push_back({{"role", m.role}, {"content", m.content}});
    out += line.dump() + "\n";
  }
  return out;
}

void write_jsonl(const std::vector<FinetuneExample>& examples, const std::filesystem::path& path) {
  jsonio::write_text_file(path, to_jsonl(examples));
}

std::vector<FinetuneExample> parse_jsonl(std::string_view text) {
  std::vector<FinetuneExample> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(text, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      FinetuneExample ex;
      for (const auto& m : j.at("messages")) {
        ex.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
      }
      if (ex.messages.empty() || ex.messages.back().role != "assistant") {
        throw DataError("line " + std::to_string(line_no) + ": last message must be the assistant's");
      }
      out.push_back(std::move(ex));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + " of fine-tune file: " + e.what());
    }
  }
  return out;
}

std::vector<FinetuneExample> read_jsonl(const std::filesystem::path& path) {
  return parse_jsonl(jsonio::read_text_file(path));
}

std::string finetune_manifest_json(const FinetuneSet& set, const EvaluationMode& mode, std::size_t n) {
  ordered_json j;
  j["seed"] = set.seed;
  j["n"] = n;
  j["mode"] = jsonio::mode_to_json(mode);
  j["dataset"] = {{"source_path", set.remaining.provenance.source_path},
                  {"content_hash", set.remaining.provenance.content_hash}};
  j["examples"] = set.examples.size();
  j["remaining_sentences"] = set.remaining.size();
  j["consumed_ids"] = set.consumed_ids;
  return j.dump(2) + "\n";
}

}  // namespace biasharness
