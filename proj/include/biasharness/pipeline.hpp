#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasharness/backend.hpp"
#include "biasharness/core_types.hpp"
#include "biasharness/dataset.hpp"
#include "biasharness/parsing.hpp"
#include "biasharness/prompting.hpp"

namespace biasharness {

// One request's worth of sentences. In individual mode a block has exactly
// one member.
struct Block {
  std::vector<std::size_t> sentence_ids;
  std::string text;  // member texts joined by '\n'

  std::vector<std::string> sentence_texts() const;
};

std::vector<std::string> split_block_text(std::string_view text);

// Throws DataError when the dataset size is not a multiple of `size`.
std::vector<Block> make_blocks(const Dataset& d, std::size_t size);

// Drops explicit None findings and zero-score findings, keeping order.
std::vector<BiasFinding> filter_findings(std::vector<BiasFinding> findings);

// Keeps findings with bias_score >= threshold.
std::vector<BiasFinding> apply_threshold(std::vector<BiasFinding> findings, double threshold);

enum class MatchMethod { Exact, Normalized, Containment, Fuzzy };
std::string_view match_method_name(MatchMethod m);

struct AlignmentConfig {
  double containment_ratio = 0.6;  // shorter/longer normalized length
  double fuzzy_threshold = 0.9;    // normalized edit similarity
};

// Text used by the normalized rung: punctuation folded, lowercased,
// whitespace collapsed.
std::string normalize_for_match(std::string_view s);
// 1 - levenshtein / max length, over code points. Two empty strings → 1.
double edit_similarity(std::string_view a, std::string_view b);

struct AlignedFinding {
  std::size_t sentence_id = 0;
  std::size_t finding_index = 0;  // position in the aligned input list
  MatchMethod method = MatchMethod::Exact;
  BiasFinding finding;
};

struct UnmatchedFinding {
  std::size_t finding_index = 0;
  BiasFinding finding;
};

struct Alignment {
  std::vector<AlignedFinding> aligned;
  std::vector<UnmatchedFinding> unmatched;
};

// Matches each finding to at most one unit sentence via exact, normalized,
// containment, then fuzzy comparison. In individual mode only the first
// finding is considered; the rest are unmatched.
Alignment align_findings(const std::vector<BiasFinding>& findings, const Block& unit,
                         const EvaluationMode& mode, const AlignmentConfig& config = {});

struct UnitRecord {
  std::size_t index = 0;
  std::vector<std::size_t> sentence_ids;
  std::string input_text;
  std::optional<std::string> raw_output;  // absent when the backend failed
  bool from_cache = false;                // not persisted
  ParseKind parse_kind = ParseKind::Failed;
  std::vector<std::string> repairs;
  std::string parse_failure;
  std::vector<BiasFinding> validated;
  std::vector<std::vector<std::string>> validation_flags;  // parallel to validated
  std::vector<std::string> rejections;
  std::vector<AlignedFinding> aligned;
  std::vector<UnmatchedFinding> unmatched;
  std::vector<std::string> errors;

  // Backend answered and the answer parsed (possibly after repair).
  bool covered() const { return raw_output.has_value() && parse_kind != ParseKind::Failed; }
};

struct DetectionRun {
  Provenance dataset;
  EvaluationMode mode;
  std::string variant;
  PromptSpec spec;
  std::string model;
  AlignmentConfig alignment;
  std::vector<std::size_t> evaluated_ids;
  std::vector<UnitRecord> units;
  std::set<std::size_t> flagged;

  std::size_t covered_units() const;
  std::size_t parse_failures() const;
  std::size_t backend_errors() const;
  std::size_t cache_hits() const;
  // One finding per flagged sentence: the highest-scoring aligned one (ties
  // keep the earliest). Ordered by sentence id.
  std::vector<AlignedFinding> reporting_findings() const;
};

struct RunOptions {
  std::string variant = "base";
  PromptSpec spec;
  EvaluationMode mode;
  std::string model = "mock";
  std::size_t concurrency = 4;
  AlignmentConfig alignment;
  AliasTable aliases = AliasTable::defaults();
  LogSink log;
};

// Expects `d` already prepared for options.mode. Backend failures are
// recorded per unit; the run always completes.
DetectionRun run_detection(const Dataset& d, const RunOptions& options, const TemplateSet& templates,
                           ChatBackend& backend, const ResponseCache* cache);

// Directory layout: manifest.json, raw/unit_NNNNN.json, findings.json,
// flagged.json.
void save_run(const DetectionRun& run, const std::filesystem::path& dir);
DetectionRun load_run(const std::filesystem::path& dir);

}  // namespace biasharness
