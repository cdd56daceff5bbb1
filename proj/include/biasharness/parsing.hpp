#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "biasharness/core_types.hpp"

namespace biasharness {

enum class ParseKind { Parsed, Repaired, Failed };

std::string_view parse_kind_name(ParseKind k);

struct ParseOutcome {
  ParseKind kind = ParseKind::Failed;
  std::vector<RawFinding> findings;
  std::vector<std::string> repairs;  // pass names, in application order
  std::string reason;                // Failed only
  std::string raw_text;              // Failed only
};

// Repair pass names, in the order they are tried.
inline constexpr std::string_view kRepairStripFences = "strip_code_fences";
inline constexpr std::string_view kRepairExtractRegion = "extract_bracketed_region";
inline constexpr std::string_view kRepairSmartQuotes = "normalize_smart_quotes";
inline constexpr std::string_view kRepairTrailingCommas = "remove_trailing_commas";
inline constexpr std::string_view kRepairBalance = "balance_brackets";
// Applied to a syntactically valid document whose shape is a single finding
// object or an object wrapping the finding array.
inline constexpr std::string_view kRepairWrapObject = "wrap_single_object";
inline constexpr std::string_view kRepairUnwrapContainer = "unwrap_container";

// Strict parse first (well-formed arrays are never altered); on failure the
// repair passes apply cumulatively and a parse is attempted after each one
// that changed the text. Never throws.
ParseOutcome parse_findings(std::string_view raw);

// Canonical finding-array text: two-space indented JSON, fields in the order
// sentence, bias_type, bias_score, bias_description. parse_findings returns
// Parsed on it.
std::string serialize_findings(const std::vector<BiasFinding>& findings);

// Individual passes, exposed for tests. Each returns its input unchanged when
// it does not apply.
namespace repair {
std::string strip_code_fences(std::string_view text);
std::string extract_bracketed_region(std::string_view text);
std::string normalize_smart_quotes(std::string_view text);
std::string remove_trailing_commas(std::string_view text);
std::string balance_brackets(std::string_view text);
}  // namespace repair

}  // namespace biasharness
