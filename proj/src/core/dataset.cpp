#include "biasharness/dataset.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include "biasharness/error.hpp"
#include "text_util.hpp"

namespace biasharness {

std::vector<std::size_t> Dataset::ids() const {
  std::vector<std::size_t> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.id);
  return out;
}

const Sentence& Dataset::by_id(std::size_t id) const {
  // Ids are strictly increasing in load order, so binary search works after
  // any order-preserving filter.
  auto it = std::lower_bound(sentences.begin(), sentences.end(), id,
                             [](const Sentence& s, std::size_t v) { return s.id < v; });
  if (it == sentences.end() || it->id != id) {
    throw DataError("sentence id " + std::to_string(id) + " not in dataset");
  }
  return *it;
}

ColumnMap ColumnMap::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("column map is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("column map must be a JSON object");
  ColumnMap m;
  auto take = [&](const char* key, std::string& field) {
    if (!doc.contains(key)) return;
    if (!doc[key].is_string()) throw ConfigError(std::string("column map field '") + key + "' must be a string");
    field = doc[key].get<std::string>();
  };
  take("text_column", m.text_column);
  take("label_column", m.label_column);
  take("outlet_column", m.outlet_column);
  take("topic_column", m.topic_column);
  take("biased_label", m.biased_label);
  take("non_biased_label", m.non_biased_label);
  take("undecided_label", m.undecided_label);
  if (doc.contains("delimiter")) {
    const auto& d = doc["delimiter"];
    if (!d.is_string() || d.get<std::string>().size() != 1) {
      throw ConfigError("column map delimiter must be a single character");
    }
    m.delimiter = d.get<std::string>()[0];
  }
  return m;
}

std::string ColumnMap::to_json() const {
  nlohmann::ordered_json doc = {
      {"text_column", text_column},         {"label_column", label_column},
      {"outlet_column", outlet_column},     {"topic_column", topic_column},
      {"biased_label", biased_label},       {"non_biased_label", non_biased_label},
      {"undecided_label", undecided_label}, {"delimiter", std::string(1, delimiter)},
  };
  return doc.dump();
}

std::vector<std::vector<std::string>> parse_delimited(std::string_view text, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  // Skip a UTF-8 byte order mark.
  if (text::starts_with(text, "\xEF\xBB\xBF")) text.remove_prefix(3);

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (field_started || !field.empty() || !row.empty()) end_row();

  // Blank lines carry no record.
  std::erase_if(rows, [](const auto& r) { return r.size() == 1 && r[0].empty(); });
  return rows;
}

std::string quote_field(std::string_view field, char delimiter) {
  const bool needs = field.find_first_of(std::string{'"', '\n', '\r', delimiter}) != std::string_view::npos;
  if (!needs) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

namespace {

std::optional<std::size_t> find_column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (text::trim(header[i]) == name) return i;
  }
  return std::nullopt;
}

std::optional<GoldLabel> map_label(std::string_view raw, const ColumnMap& m) {
  const auto v = text::to_lower_ascii(text::trim(raw));
  if (v == text::to_lower_ascii(m.biased_label)) return GoldLabel::Biased;
  if (v == text::to_lower_ascii(m.non_biased_label)) return GoldLabel::NonBiased;
  if (v == text::to_lower_ascii(m.undecided_label)) return GoldLabel::Undecided;
  return std::nullopt;
}

std::string strip_line_breaks(std::string_view s, bool& changed) {
  std::string out;
  out.reserve(s.size());
  changed = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r' || s[i] == '\n') {
      changed = true;
      if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      out.push_back(' ');
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

}  // namespace

Dataset load_dataset_text(std::string_view content, const ColumnMap& columns,
                          std::string source_path, std::vector<std::string>* warnings) {
  const auto rows = parse_delimited(content, columns.delimiter);
  if (rows.empty()) throw ConfigError("dataset has no header row: " + source_path);

  const auto& header = rows.front();
  const auto text_col = find_column(header, columns.text_column);
  const auto label_col = find_column(header, columns.label_column);
  if (!text_col) throw ConfigError("missing text column '" + columns.text_column + "' in " + source_path);
  if (!label_col) throw ConfigError("missing label column '" + columns.label_column + "' in " + source_path);
  const auto outlet_col = find_column(header, columns.outlet_column);
  const auto topic_col = find_column(header, columns.topic_column);

  Dataset d;
  d.provenance = {std::move(source_path), text::sha256_hex(content)};
  d.sentences.reserve(rows.size() - 1);

  std::vector<std::string> bad_rows;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](std::optional<std::size_t> col) -> std::string {
      if (!col || *col >= row.size()) return {};
      return row[*col];
    };
    const auto raw_label = cell(label_col);
    const auto gold = map_label(raw_label, columns);
    if (!gold) {
      bad_rows.push_back("row " + std::to_string(r) + ": unmappable label value '" + raw_label + "'");
      continue;
    }
    Sentence s;
    s.id = r - 1;
    bool changed = false;
    s.text = strip_line_breaks(cell(text_col), changed);
    if (changed && warnings) {
      warnings->push_back("row " + std::to_string(r) + ": line breaks in text replaced by spaces");
    }
    s.gold = *gold;
    s.outlet = cell(outlet_col);
    s.topic = cell(topic_col);
    d.sentences.push_back(std::move(s));
  }
  if (!bad_rows.empty()) {
    throw DataError(d.provenance.source_path + ": " + text::join(bad_rows, "; "));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const ColumnMap& columns,
                     std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_dataset_text(buf.str(), columns, path.string(), warnings);
}

std::string dataset_to_csv(const Dataset& d, const ColumnMap& columns) {
  const char sep = columns.delimiter;
  auto q = [sep](std::string_view f) { return quote_field(f, sep); };
  std::string out;
  out += q(columns.text_column) + sep + q(columns.label_column) + sep + q(columns.outlet_column) +
         sep + q(columns.topic_column) + sep + "source_id\n";
  for (const auto& s : d.sentences) {
    std::string_view label = s.gold == GoldLabel::Biased      ? columns.biased_label
                             : s.gold == GoldLabel::NonBiased ? columns.non_biased_label
                                                              : columns.undecided_label;
    out += q(s.text) + sep + q(label) + sep + q(s.outlet) + sep + q(s.topic) + sep +
           std::to_string(s.id) + "\n";
  }
  return out;
}

Dataset clean(const Dataset& d) {
  Dataset out;
  out.provenance = d.provenance;
  out.cleaned = true;
  out.sentences.reserve(d.sentences.size());
  for (const auto& s : d.sentences) {
    if (s.gold != GoldLabel::Undecided) out.sentences.push_back(s);
  }
  return out;
}

Dataset prepare_for_mode(const Dataset& d, const EvaluationMode& mode) {
  if (!d.cleaned) throw DataError("dataset must be cleaned before preparing it for a mode");
  Dataset out = d;
  if (mode.is_blocks()) {
    if (mode.block_size == 0) throw ConfigError("block size must be at least 1");
    out.sentences.resize(d.sentences.size() - d.sentences.size() % mode.block_size);
  }
  return out;
}

LabelCounts stats(const Dataset& d) {
  LabelCounts c;
  for (const auto& s : d.sentences) {
    switch (s.gold) {
      case GoldLabel::Biased: ++c.biased; break;
      case GoldLabel::NonBiased: ++c.non_biased; break;
      case GoldLabel::Undecided: ++c.undecided; break;
    }
  }
  return c;
}

}  // namespace biasharness
