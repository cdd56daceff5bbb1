#include "json_io.hpp"

#include <fstream>
#include <sstream>

#include "biasharness/error.hpp"

namespace biasharness::jsonio {

ordered_json finding_to_json(const BiasFinding& f) {
  ordered_json j;
  j["sentence"] = f.sentence_text;
  j["bias_type"] = f.bias_type.display_name();
  j["bias_category"] = category_slug(f.bias_type.category());
  if (f.bias_type.is_other()) j["bias_type_verbatim"] = f.bias_type.verbatim();
  j["bias_score"] = f.bias_score;
  j["bias_description"] = f.description;
  return j;
}

BiasFinding finding_from_json(const ordered_json& j) {
  BiasFinding f;
  f.sentence_text = j.at("sentence").get<std::string>();
  const auto slug = j.at("bias_category").get<std::string>();
  const auto cat = category_from_slug(slug);
  if (!cat) throw DataError("unknown bias category '" + slug + "'");
  if (*cat == BiasCategory::Other) {
    f.bias_type = BiasType::other(j.value("bias_type_verbatim", j.at("bias_type").get<std::string>()));
  } else {
    f.bias_type = BiasType(*cat);
  }
  f.bias_score = j.at("bias_score").get<double>();
  f.description = j.at("bias_description").get<std::string>();
  return f;
}

ordered_json mode_to_json(const EvaluationMode& m) {
  ordered_json j;
  j["kind"] = m.name();
  j["block_size"] = m.unit_size();
  return j;
}

EvaluationMode mode_from_json(const ordered_json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "blocks") return EvaluationMode::blocks(j.at("block_size").get<std::size_t>());
  if (kind == "individual") return EvaluationMode::individual();
  throw DataError("unknown evaluation mode '" + kind + "'");
}

ordered_json spec_to_json(const PromptSpec& s) {
  ordered_json j;
  j["include_example"] = s.include_example;
  j["include_context_defs"] = s.include_context_defs;
  j["include_definitions"] = s.include_definitions;
  j["restructured"] = s.restructured;
  j["use_system_message"] = s.use_system_message;
  j["temperature"] = s.temperature;
  j["score_threshold"] = s.score_threshold ? ordered_json(*s.score_threshold) : ordered_json(nullptr);
  return j;
}

PromptSpec spec_from_json(const ordered_json& j) {
  PromptSpec s;
  s.include_example = j.at("include_example").get<bool>();
  s.include_context_defs = j.at("include_context_defs").get<bool>();
  s.include_definitions = j.at("include_definitions").get<bool>();
  s.restructured = j.at("restructured").get<bool>();
  s.use_system_message = j.at("use_system_message").get<bool>();
  s.temperature = j.at("temperature").get<double>();
  if (j.contains("score_threshold") && !j.at("score_threshold").is_null()) {
    s.score_threshold = j.at("score_threshold").get<double>();
  }
  return s;
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json read_json_file(const std::filesystem::path& p) {
  const auto text = read_text_file(p);
  try {
    return ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(p.string() + " is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& p, std::string_view text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + p.string());
}

void write_json_file(const std::filesystem::path& p, const ordered_json& j) {
  write_text_file(p, j.dump(2) + "\n");
}

}  // namespace biasharness::jsonio
