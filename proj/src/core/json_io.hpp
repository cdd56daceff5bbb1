#pragma once

// JSON conversions shared by the run record, reports and the C API.

#include <nlohmann/json.hpp>

#include <filesystem>

#include "biasharness/core_types.hpp"
#include "biasharness/prompting.hpp"

namespace biasharness::jsonio {

using nlohmann::ordered_json;

// {"sentence","bias_type","bias_category","bias_score","bias_description"},
// plus "bias_type_verbatim" for Other.
ordered_json finding_to_json(const BiasFinding& f);
BiasFinding finding_from_json(const nlohmann::ordered_json& j);

ordered_json mode_to_json(const EvaluationMode& m);
EvaluationMode mode_from_json(const ordered_json& j);

ordered_json spec_to_json(const PromptSpec& s);
PromptSpec spec_from_json(const ordered_json& j);

// Throws IoError when the file cannot be read, DataError when it is not JSON.
ordered_json read_json_file(const std::filesystem::path& p);
// Pretty-printed with a trailing newline. Throws IoError.
void write_json_file(const std::filesystem::path& p, const ordered_json& j);
void write_text_file(const std::filesystem::path& p, std::string_view text);
std::string read_text_file(const std::filesystem::path& p);

}  // namespace biasharness::jsonio
