#include <doctest.h>

#include <nlohmann/json.hpp>

#include "biasharness/report.hpp"
#include "published_tables.hpp"

using namespace biasharness;

namespace {

std::vector<ResultRow> ablation_rows() {
  std::vector<ResultRow> rows;
  for (const auto& r : bhtest::printed_rows()) {
    if (std::string(r.table) != "ablation") continue;
    ResultRow row;
    row.name = r.name;
    row.cm = {r.tp, r.fp, r.fn, r.tn};
    row.m = metrics(row.cm);
    rows.push_back(row);
  }
  mark_comparisons(rows, 0);
  return rows;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < s.size()) {
    auto end = s.find('\n', start);
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("format names") {
  CHECK(parse_report_format("md") == ReportFormat::Markdown);
  CHECK(parse_report_format("Markdown") == ReportFormat::Markdown);
  CHECK(parse_report_format("CSV") == ReportFormat::Csv);
  CHECK(parse_report_format("json") == ReportFormat::Json);
  CHECK_THROWS_AS(parse_report_format("html"), ConfigError);
}

TEST_CASE("markdown ablation table with arrows and bold maxima") {
  auto md = render_report(ablation_rows(), ReportFormat::Markdown);
  auto l = lines(md);
  REQUIRE(l.size() == 10);
  CHECK(l[0] == "| Model | TP | FP | FN | TN | F1-Score | Recall | Precision |");
  CHECK(l[2] == "| Base Prompt | 965 | 460 | 53 | 72 | 0.790 | 0.948 | 0.677 |");
  CHECK(l[3] == "| No Example | 966 | 468 | 52 | 64 | 0.788 ↓ | 0.949 ↑ | 0.674 ↓ |");
  CHECK(l[6] == "| Bias Score Threshold | 632 | 241 | 273 | 110 | 0.711 ↓ | 0.698 ↓ | **0.724** ↑ |");
  CHECK(l[7] == "| No Bias Definition | 894 | 344 | 124 | 188 | **0.793** ↑ | 0.878 ↓ | 0.722 ↑ |");
  CHECK(l[8] == "| No System Prompt | 986 | 486 | 32 | 46 | 0.792 ↑ | **0.969** ↑ | 0.670 ↓ |");
}

TEST_CASE("coverage column and degenerate note") {
  std::vector<ResultRow> rows(1);
  rows[0].name = "empty | run";
  rows[0].cm = {0, 0, 3, 2};
  rows[0].m = metrics(rows[0].cm);
  rows[0].coverage = std::pair<std::size_t, std::size_t>{1, 2};
  auto l = lines(render_report(rows, ReportFormat::Markdown));
  CHECK(l[0].find("| Coverage |") != std::string::npos);
  CHECK(l[2] == "| empty \\| run (degenerate) | 0 | 0 | 3 | 2 | 0.000 | 0.000 | 0.000 | 1/2 |");
}

TEST_CASE("no rows gives just the header") {
  CHECK(lines(render_report({}, ReportFormat::Markdown)).size() == 2);
  CHECK(render_report({}, ReportFormat::Csv) ==
        "name,TP,FP,FN,TN,F1-Score,Recall,Precision,degenerate,covered_units,total_units\n");
  CHECK(render_report({}, ReportFormat::Json) == "[]\n");
}

TEST_CASE("CSV round trip keeps counts, names and coverage") {
  auto rows = ablation_rows();
  rows[2].coverage = std::pair<std::size_t, std::size_t>{150, 155};
  rows[3].name = "name, with \"quotes\"";
  auto csv = render_report(rows, ReportFormat::Csv);
  auto back = load_report_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].name == rows[i].name);
    CHECK(back[i].cm == rows[i].cm);
    CHECK(back[i].coverage == rows[i].coverage);
    CHECK(back[i].m.f1 == rows[i].m.f1);
  }
  CHECK(render_report(back, ReportFormat::Csv) == csv);
}

TEST_CASE("CSV with tampered metrics is rejected") {
  auto csv = render_report(ablation_rows(), ReportFormat::Csv);
  auto bad = csv;
  bad.replace(bad.find("0.790"), 5, "0.791");
  CHECK_THROWS_AS(load_report_csv(bad), DataError);
  CHECK_THROWS_AS(load_report_csv("a,b\n"), DataError);
  CHECK_THROWS_AS(load_report_csv(""), DataError);
}

TEST_CASE("JSON report carries deltas and best columns") {
  auto j = nlohmann::json::parse(render_report(ablation_rows(), ReportFormat::Json));
  REQUIRE(j.size() == 8);
  CHECK(j[0]["F1-Score"] == 0.79);
  CHECK_FALSE(j[0].contains("delta"));
  CHECK(j[1]["delta"]["Recall"] == 1);
  CHECK(j[6]["best"] == nlohmann::json::array({"Recall"}));
}

TEST_CASE("subtype report formats") {
  SubtypeReport r;
  r.rows = {{"political bias", 56, 7, false}, {"Sub-type violation (hallucination)", 0, 2, true}};
  r.correct = 56;
  r.total = 65;
  r.violations = 2;
  auto md = lines(render_subtype_report(r, ReportFormat::Markdown));
  CHECK(md[2] == "| political bias | 56 | 7 | 63 | 88.89% |");
  CHECK(md[3] == "| Sub-type violation (hallucination) | n/a | 2 | 2 | n/a |");
  CHECK(md[4] == "| Total (all classes) | 56 | 9 | 65 | 86.15% |");
  auto csv = lines(render_subtype_report(r, ReportFormat::Csv));
  CHECK(csv[1] == "political bias,56,7,63,88.89");
  auto j = nlohmann::json::parse(render_subtype_report(r, ReportFormat::Json));
  CHECK(j["rows"][1]["correct"].is_null());
  CHECK(j["violations"] == 2);
}

TEST_CASE("distribution formats") {
  std::vector<DistributionEntry> e = {{"political bias", 2, 200.0 / 3.0}, {"Spin", 1, 100.0 / 3.0}};
  CHECK(render_distribution(e, ReportFormat::Markdown) ==
        "| Bias type | Findings | Share |\n|---|---:|---:|\n| political bias | 2 | 66.7% |\n| Spin | 1 | 33.3% |\n");
  CHECK(render_distribution(e, ReportFormat::Csv) == "bias_type,findings,percent\npolitical bias,2,66.7\nSpin,1,33.3\n");
}

TEST_CASE("summary line") {
  auto cm = ConfusionMatrix{965, 460, 53, 72};
  CHECK(summary_line(cm, metrics(cm), 155, 155) ==
        "TP=965 FP=460 FN=53 TN=72 F1=0.790 Recall=0.948 Precision=0.677 coverage=155/155");
  auto empty = ConfusionMatrix{0, 0, 0, 4};
  CHECK(summary_line(empty, metrics(empty), 0, 1).ends_with(" (degenerate)"));
}
