#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "biasharness/core_types.hpp"
#include "biasharness/dataset.hpp"
#include "biasharness/pipeline.hpp"

namespace biasharness {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Some ratio had a zero denominator and was reported as 0.
  bool degenerate = false;
};

// Counts over `ids`; a sentence is positive when it is in `flagged`.
// Throws DataError for an unknown id or an Undecided gold label.
ConfusionMatrix count_confusion(const Dataset& d, const std::vector<std::size_t>& ids,
                                const std::set<std::size_t>& flagged);

// Throws DataError when the run was produced from a different dataset file.
ConfusionMatrix confusion(const DetectionRun& run, const Dataset& d);

Metrics metrics(const ConfusionMatrix& cm);

// Column order everywhere a row is displayed: F1, recall, precision.
enum MetricColumn { kF1 = 0, kRecall = 1, kPrecision = 2 };

struct ResultRow {
  std::string name;
  ConfusionMatrix cm;
  Metrics m;
  // +1 / -1 / 0 against the base row after 3-decimal rounding. Absent on the
  // base row and when there is nothing to compare against.
  std::optional<std::array<int, 3>> delta;
  std::array<bool, 3> best{};  // highest rounded value in its column
  std::optional<std::pair<std::size_t, std::size_t>> coverage;  // covered, total units
};

struct NamedRun {
  std::string name;
  const DetectionRun* run = nullptr;
};

// One row per run, in the given order. Runs must share dataset and mode;
// otherwise ConfigError.
std::vector<ResultRow> ablation_table(const std::vector<NamedRun>& runs, const Dataset& d,
                                      std::size_t base_index = 0);

// Fills delta and best on rows computed elsewhere.
void mark_comparisons(std::vector<ResultRow>& rows, std::size_t base_index);

enum class Verdict { Correct, Incorrect };

// Throws ConfigError on an even (or zero) number of verdicts.
Verdict silver_label(const std::vector<Verdict>& verdicts);

struct SubtypeJudgment {
  std::string sample_id;
  BiasType category;
  std::vector<Verdict> verdicts;

  Verdict silver() const { return silver_label(verdicts); }
};

struct SubtypeRow {
  std::string label;  // display name, "Sub-type violation (hallucination)" for the last row
  std::size_t correct = 0;
  std::size_t incorrect = 0;
  bool violation = false;  // correct and accuracy print as n/a

  std::size_t total() const { return correct + incorrect; }
  double accuracy() const { return total() ? static_cast<double>(correct) / total() : 0.0; }
};

struct SubtypeReport {
  std::vector<SubtypeRow> rows;  // canonical categories present, then the violation row if any
  std::size_t correct = 0;
  std::size_t total = 0;
  std::size_t violations = 0;

  double overall() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

// Non-canonical categories count as violations: always wrong, outside the
// per-category rows, inside the totals. Throws ValidationError on empty input.
SubtypeReport subtype_accuracy(const std::vector<SubtypeJudgment>& judgments);

// Header needs sample_id, category and judge1..judgeK (K odd); other columns
// are ignored. Verdicts are right|wrong, any case. Throws DataError citing
// the row on bad values.
std::vector<SubtypeJudgment> parse_judgments(std::string_view csv_text,
                                             const AliasTable& aliases = AliasTable::defaults());
std::vector<SubtypeJudgment> load_judgments(const std::filesystem::path& path,
                                            const AliasTable& aliases = AliasTable::defaults());

struct DistributionEntry {
  std::string label;  // display name, or the first verbatim spelling for Other
  std::size_t count = 0;
  double percent = 0.0;
};

// Over every aligned finding of the run. Sorted by count, then label.
// Throws ValidationError when the run has no aligned findings.
std::vector<DistributionEntry> type_distribution(const DetectionRun& run);

struct SampleItem {
  std::string sample_id;  // "s001", ...
  AlignedFinding finding;
};

// Seeded draw without replacement from the run's aligned findings. Throws
// ConfigError when n exceeds the number of findings.
std::vector<SampleItem> draw_subtype_sample(const DetectionRun& run, std::size_t n, std::uint64_t seed);

// Annotation sheet; loads back through parse_judgments once judges fill in
// their columns.
std::string sample_sheet_csv(const std::vector<SampleItem>& sample, std::size_t judges = 3);

}  // namespace biasharness
