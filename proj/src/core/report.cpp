#include "biasharness/report.hpp"

#include <nlohmann/json.hpp>

#include "text_util.hpp"

namespace biasharness {

using nlohmann::ordered_json;

namespace {

std::string fixed3(double v) { return text::format_fixed(v, 3); }

std::string percent2(double fraction) { return text::format_fixed(fraction * 100.0, 2) + "%"; }

const char* const kMetricHeaders[3] = {"F1-Score", "Recall", "Precision"};

std::array<double, 3> metric_values(const Metrics& m) { return {m.f1, m.recall, m.precision}; }

bool any_coverage(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows) {
    if (r.coverage) return true;
  }
  return false;
}

std::string markdown_cell(const ResultRow& r, int c) {
  std::string v = fixed3(metric_values(r.m)[c]);
  if (r.best[c]) v = "**" + v + "**";
  if (r.delta) {
    if ((*r.delta)[c] > 0) v += " ↑";
    if ((*r.delta)[c] < 0) v += " ↓";
  }
  return v;
}

std::string escape_md(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == '|') out += "\\|";
    else out.push_back(ch);
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  const auto n = text::to_lower_ascii(name);
  if (n == "markdown" || n == "md") return ReportFormat::Markdown;
  if (n == "csv") return ReportFormat::Csv;
  if (n == "json") return ReportFormat::Json;
  throw ConfigError("unknown report format '" + std::string(name) + "' (expected markdown, csv or json)");
}

std::string render_report(const std::vector<ResultRow>& rows, ReportFormat format) {
  const bool cov = any_coverage(rows);
  std::string out;
  switch (format) {
    case ReportFormat::Markdown: {
      out = "| Model | TP | FP | FN | TN | F1-Score | Recall | Precision |";
      out += cov ? " Coverage |\n" : "\n";
      out += "|---|---:|---:|---:|---:|---:|---:|---:|";
      out += cov ? "---:|\n" : "\n";
      for (const auto& r : rows) {
        out += "| " + escape_md(r.name) + (r.m.degenerate ? " (degenerate)" : "") + " | " + std::to_string(r.cm.tp) +
               " | " + std::to_string(r.cm.fp) + " | " + std::to_string(r.cm.fn) + " | " + std::to_string(r.cm.tn);
        for (int c = 0; c < 3; ++c) out += " | " + markdown_cell(r, c);
        out += " |";
        if (cov) {
          out += r.coverage ? " " + std::to_string(r.coverage->first) + "/" + std::to_string(r.coverage->second) + " |"
                            : " |";
        }
        out += "\n";
      }
      return out;
    }
    case ReportFormat::Csv: {
      out = "name,TP,FP,FN,TN,F1-Score,Recall,Precision,degenerate,covered_units,total_units\n";
      for (const auto& r : rows) {
        out += quote_field(r.name) + "," + std::to_string(r.cm.tp) + "," + std::to_string(r.cm.fp) + "," +
               std::to_string(r.cm.fn) + "," + std::to_string(r.cm.tn);
        for (double v : metric_values(r.m)) out += "," + fixed3(v);
        out += std::string(",") + (r.m.degenerate ? "true" : "false");
        if (r.coverage) {
          out += "," + std::to_string(r.coverage->first) + "," + std::to_string(r.coverage->second);
        } else {
          out += ",,";
        }
        out += "\n";
      }
      return out;
    }
    case ReportFormat::Json: {
      ordered_json arr = ordered_json::array();
      for (const auto& r : rows) {
        ordered_json j;
        j["name"] = r.name;
        j["TP"] = r.cm.tp;
        j["FP"] = r.cm.fp;
        j["FN"] = r.cm.fn;
        j["TN"] = r.cm.tn;
        const auto v = metric_values(r.m);
        for (int c = 0; c < 3; ++c) j[kMetricHeaders[c]] = text::round_half_up(v[c], 3);
        j["degenerate"] = r.m.degenerate;
        if (r.delta) {
          ordered_json d;
          for (int c = 0; c < 3; ++c) d[kMetricHeaders[c]] = (*r.delta)[c];
          j["delta"] = d;
        }
        ordered_json best = ordered_json::array();
        for (int c = 0; c < 3; ++c) {
          if (r.best[c]) best.push_back(kMetricHeaders[c]);
        }
        j["best"] = best;
        if (r.coverage) j["coverage"] = {{"covered", r.coverage->first}, {"total", r.coverage->second}};
        arr.push_back(std::move(j));
      }
      return arr.dump(2) + "\n";
    }
  }
  return out;
}

std::vector<ResultRow> load_report_csv(std::string_view csv_text) {
  const auto table = parse_delimited(csv_text, ',');
  if (table.empty()) throw DataError("report CSV is empty");
  const std::vector<std::string> expected = {"name", "TP", "FP", "FN", "TN", "F1-Score", "Recall", "Precision",
                                             "degenerate", "covered_units", "total_units"};
  if (table.front() != expected) throw DataError("report CSV header does not match the report layout");

  std::vector<ResultRow> rows;
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& f = table[i];
    const std::string where = "report CSV row " + std::to_string(i);
    if (f.size() != expected.size()) throw DataError(where + ": expected 11 fields");
    ResultRow r;
    r.name = f[0];
    try {
      r.cm = {std::stoul(f[1]), std::stoul(f[2]), std::stoul(f[3]), std::stoul(f[4])};
    } catch (const std::exception&) {
      throw DataError(where + ": counts must be non-negative integers");
    }
    r.m = metrics(r.cm);
    const auto v = metric_values(r.m);
    for (int c = 0; c < 3; ++c) {
      if (fixed3(v[c]) != f[5 + c]) {
        throw DataError(where + ": " + kMetricHeaders[c] + " " + f[5 + c] + " disagrees with the counts");
      }
    }
    if (f[8] != (r.m.degenerate ? "true" : "false")) throw DataError(where + ": degenerate flag disagrees with the counts");
    if (f[9].empty() != f[10].empty()) throw DataError(where + ": coverage needs both columns");
    if (!f[9].empty()) r.coverage = std::pair{std::stoul(f[9]), std::stoul(f[10])};
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_subtype_report(const SubtypeReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Markdown: {
      std::string out = "| Bias Sub-Type | Correct | Incorrect | Total | Accuracy |\n|---|---:|---:|---:|---:|\n";
      for (const auto& r : report.rows) {
        out += "| " + r.label + " | " + (r.violation ? "n/a" : std::to_string(r.correct)) + " | " +
               std::to_string(r.incorrect) + " | " + std::to_string(r.total()) + " | " +
               (r.violation ? "n/a" : percent2(r.accuracy())) + " |\n";
      }
      out += "| Total (all classes) | " + std::to_string(report.correct) + " | " +
             std::to_string(report.total - report.correct) + " | " + std::to_string(report.total) + " | " +
             percent2(report.overall()) + " |\n";
      return out;
    }
    case ReportFormat::Csv: {
      std::string out = "subtype,correct,incorrect,total,accuracy\n";
      for (const auto& r : report.rows) {
        out += quote_field(r.label) + "," + (r.violation ? "n/a" : std::to_string(r.correct)) + "," +
               std::to_string(r.incorrect) + "," + std::to_string(r.total()) + "," +
               (r.violation ? "n/a" : text::format_fixed(r.accuracy() * 100.0, 2)) + "\n";
      }
      out += "Total (all classes)," + std::to_string(report.correct) + "," +
             std::to_string(report.total - report.correct) + "," + std::to_string(report.total) + "," +
             text::format_fixed(report.overall() * 100.0, 2) + "\n";
      return out;
    }
    case ReportFormat::Json: {
      ordered_json j;
      j["rows"] = ordered_json::array();
      for (const auto& r : report.rows) {
        ordered_json row;
        row["subtype"] = r.label;
        row["correct"] = r.violation ? ordered_json(nullptr) : ordered_json(r.correct);
        row["incorrect"] = r.incorrect;
        row["total"] = r.total();
        row["accuracy_percent"] =
            r.violation ? ordered_json(nullptr) : ordered_json(text::round_half_up(r.accuracy() * 100.0, 2));
        j["rows"].push_back(std::move(row));
      }
      j["correct"] = report.correct;
      j["total"] = report.total;
      j["violations"] = report.violations;
      j["overall_percent"] = text::round_half_up(report.overall() * 100.0, 2);
      return j.dump(2) + "\n";
    }
  }
  return {};
}

std::string render_distribution(const std::vector<DistributionEntry>& entries, ReportFormat format) {
  switch (format) {
    case ReportFormat::Markdown: {
      std::string out = "| Bias type | Findings | Share |\n|---|---:|---:|\n";
      for (const auto& e : entries) {
        out += "| " + escape_md(e.label) + " | " + std::to_string(e.count) + " | " + text::format_fixed(e.percent, 1) +
               "% |\n";
      }
      return out;
    }
    case ReportFormat::Csv: {
      std::string out = "bias_type,findings,percent\n";
      for (const auto& e : entries) {
        out += quote_field(e.label) + "," + std::to_string(e.count) + "," + text::format_fixed(e.percent, 1) + "\n";
      }
      return out;
    }
    case ReportFormat::Json: {
      ordered_json arr = ordered_json::array();
      for (const auto& e : entries) {
        arr.push_back({{"bias_type", e.label}, {"findings", e.count}, {"percent", text::round_half_up(e.percent, 1)}});
      }
      return arr.dump(2) + "\n";
    }
  }
  return {};
}

std::string summary_line(const ConfusionMatrix& cm, const Metrics& m, std::size_t covered, std::size_t units) {
  std::string s = "TP=" + std::to_string(cm.tp) + " FP=" + std::to_string(cm.fp) + " FN=" + std::to_string(cm.fn) +
                  " TN=" + std::to_string(cm.tn) + " F1=" + fixed3(m.f1) + " Recall=" + fixed3(m.recall) +
                  " Precision=" + fixed3(m.precision) + " coverage=" + std::to_string(covered) + "/" +
                  std::to_string(units);
  if (m.degenerate) s += " (degenerate)";
  return s;
}

}  // namespace biasharness
