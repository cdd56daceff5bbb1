#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "biasharness/core_types.hpp"

namespace biasharness {

struct Sentence {
  std::size_t id = 0;  // 0-based data-row index in the source file
  std::string text;    // never contains '\n' or '\r'
  GoldLabel gold = GoldLabel::Undecided;
  std::string outlet;
  std::string topic;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Provenance {
  std::string source_path;
  std::string content_hash;  // sha256 of the raw file bytes

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
  std::vector<Sentence> sentences;
  Provenance provenance;
  bool cleaned = false;

  std::size_t size() const { return sentences.size(); }
  std::vector<std::size_t> ids() const;
  // Throws DataError when the id is not present.
  const Sentence& by_id(std::size_t id) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Which columns hold what, and how the gold label is spelled. Defaults follow
// the MBIC distribution (sentence / Label_bias / outlet / topic).
struct ColumnMap {
  std::string text_column = "sentence";
  std::string label_column = "Label_bias";
  std::string outlet_column = "outlet";  // optional in the file
  std::string topic_column = "topic";    // optional in the file
  std::string biased_label = "Biased";
  std::string non_biased_label = "Non-biased";
  std::string undecided_label = "No agreement";
  char delimiter = ',';

  // Keys as the field names above; missing keys keep defaults.
  static ColumnMap from_json(std::string_view json_text);
  std::string to_json() const;
};

struct LabelCounts {
  std::size_t biased = 0;
  std::size_t non_biased = 0;
  std::size_t undecided = 0;

  std::size_t total() const { return biased + non_biased + undecided; }
  friend bool operator==(const LabelCounts&, const LabelCounts&) = default;
};

// Delimiter-separated records with RFC-4180 quoting ("" escapes, quoted
// fields may span lines). Exposed for reuse by the report/judgment readers.
std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter = ',');
std::string quote_field(std::string_view field, char delimiter = ',');

// Missing text/label column → ConfigError. Unmappable labels → DataError
// naming every offending 1-based data row. Line breaks inside text are
// replaced by single spaces; one warning per affected row is appended.
Dataset load_dataset_text(std::string_view content, const ColumnMap& columns,
                          std::string source_path = "<memory>",
                          std::vector<std::string>* warnings = nullptr);
Dataset load_dataset(const std::filesystem::path& path, const ColumnMap& columns,
                     std::vector<std::string>* warnings = nullptr);

// Writes text/label/outlet/topic columns (names and spellings from `columns`)
// plus a trailing source_id column; reloads with the same map.
std::string dataset_to_csv(const Dataset& d, const ColumnMap& columns);

Dataset clean(const Dataset& d);

// Block mode drops the minimal suffix so the count divides the block size.
Dataset prepare_for_mode(const Dataset& d, const EvaluationMode& mode);

LabelCounts stats(const Dataset& d);

}  // namespace biasharness
