#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "biasharness/evaluation.hpp"

namespace biasharness {

enum class ReportFormat { Markdown, Csv, Json };

// "markdown" | "md" | "csv" | "json"; ConfigError otherwise.
ReportFormat parse_report_format(std::string_view name);

// Columns: TP FP FN TN F1-Score Recall Precision, values half-up to three
// decimals. Markdown marks deltas with ↑/↓ and best values in bold; a
// degenerate row gets a trailing "(degenerate)" note in its name cell.
// Coverage is shown when any row carries it. No rows → header only.
std::string render_report(const std::vector<ResultRow>& rows, ReportFormat format);

// Reads the CSV form back. Counts, names, coverage and the degenerate flag
// survive exactly; metric columns are recomputed from the counts and checked
// against the printed values (DataError on disagreement).
std::vector<ResultRow> load_report_csv(std::string_view csv_text);

std::string render_subtype_report(const SubtypeReport& report, ReportFormat format);
std::string render_distribution(const std::vector<DistributionEntry>& entries, ReportFormat format);

// One line: "TP=.. FP=.. FN=.. TN=.. F1=0.790 Recall=0.948 Precision=0.677 coverage=155/155".
std::string summary_line(const ConfusionMatrix& cm, const Metrics& m, std::size_t covered, std::size_t units);

}  // namespace biasharness
