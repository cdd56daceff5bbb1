// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   bh_acceptance [path/to/bh_property_tests]

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "biasharness/evaluation.hpp"
#include "biasharness/finetune.hpp"
#include "biasharness/parsing.hpp"
#include "biasharness/pipeline.hpp"
#include "fixtures.hpp"
#include "published_tables.hpp"

using namespace biasharness;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void fail(std::string why) {
    pass = false;
    notes.push_back(std::move(why));
  }
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

const TemplateSet& templates() {
  static const auto t = TemplateSet::load(bhtest::kTemplateDir);
  return t;
}

Outcome metrics_reproduction() {
  Outcome o;
  const auto start = Clock::now();
  for (const auto& r : bhtest::printed_rows()) {
    const auto m = metrics({r.tp, r.fp, r.fn, r.tn});
    const std::pair<const char*, std::pair<double, double>> cells[] = {
        {"F1", {m.f1, r.f1}}, {"Recall", {m.recall, r.recall}}, {"Precision", {m.precision, r.precision}}};
    for (const auto& [col, v] : cells) {
      if (std::abs(v.first - v.second) > 0.0005) {
        o.fail(std::string(r.table) + " " + r.name + " " + col + ": " +
               fmt("computed %.6f, printed %.3f", v.first, v.second));
      }
    }
  }
  if (seconds_since(start) >= 1.0) o.fail("took longer than 1 s");
  return o;
}

Outcome subtype_reproduction() {
  Outcome o;
  const auto report = subtype_accuracy(load_judgments(bhtest::kFixtureDir / "subtype_judgments.csv"));
  auto pct = [](double fraction) { return std::floor(fraction * 10000.0 + 0.5) / 100.0; };
  for (const auto& p : bhtest::printed_subtypes()) {
    const SubtypeRow* row = nullptr;
    for (const auto& r : report.rows) {
      if (r.label == p.category) row = &r;
    }
    if (!row) {
      o.fail(std::string("no row for ") + p.category);
      continue;
    }
    if (pct(row->accuracy()) != p.percent) o.fail(std::string(p.category) + fmt(": %.2f%% vs %.2f%%", pct(row->accuracy()), p.percent));
  }
  if (pct(report.overall()) != bhtest::kPrintedOverallPercent) {
    o.fail(fmt("overall %.2f%% vs %.2f%%", pct(report.overall()), bhtest::kPrintedOverallPercent));
  }
  if (report.violations != bhtest::kPrintedViolations) {
    o.fail("violations " + std::to_string(report.violations) + " vs " + std::to_string(bhtest::kPrintedViolations));
  }
  return o;
}

Outcome dataset_pipeline() {
  Outcome o;
  const auto raw = load_dataset_text(bhtest::mbic_csv({}), ColumnMap{}, "mbic.csv");
  if (raw.size() != 1700) o.fail("fixture has " + std::to_string(raw.size()) + " rows");
  const auto cleaned = clean(raw);
  const auto s = stats(cleaned);
  if (cleaned.size() != 1551 || s.biased != 1018 || s.non_biased != 533) {
    o.fail("cleaned " + std::to_string(cleaned.size()) + " (" + std::to_string(s.biased) + "/" +
           std::to_string(s.non_biased) + ")");
  }
  const auto prepared = prepare_for_mode(cleaned, EvaluationMode::blocks(10));
  const auto blocks = make_blocks(prepared, 10);
  if (prepared.size() != 1550 || blocks.size() != 155) {
    o.fail("prepared " + std::to_string(prepared.size()) + " in " + std::to_string(blocks.size()) + " blocks");
  }
  for (const auto& b : blocks) {
    if (b.sentence_ids.size() != 10) o.fail("a block does not hold 10 sentences");
  }
  return o;
}

// The mock answers each unit with findings for exactly the chosen sentences
// it contains, sometimes reworded or padded with noise the harness must drop.
Outcome oracle_run() {
  Outcome o;
  const auto start = Clock::now();
  bhtest::TestRng rng(2024);
  std::string csv = "sentence,Label_bias\n";
  std::vector<GoldLabel> gold;
  for (std::size_t i = 0; i < 30; ++i) {
    const bool biased = rng.coin();
    gold.push_back(biased ? GoldLabel::Biased : GoldLabel::NonBiased);
    csv += quote_field(bhtest::synthetic_sentence(i * 37)) + "," + (biased ? "Biased" : "Non-biased") + "\n";
  }
  const auto d = load_dataset_text(csv, ColumnMap{}, "oracle.csv");
  std::set<std::size_t> chosen;
  for (std::size_t i = 0; i < 30; ++i) {
    if (rng.below(3) == 0) chosen.insert(i);
  }

  for (const auto mode : {EvaluationMode::blocks(10), EvaluationMode::individual()}) {
    auto mock = MockBackend::keyed({});
    for (const auto& unit : make_blocks(d, mode.unit_size())) {
      std::vector<BiasFinding> fs;
      for (auto id : unit.sentence_ids) {
        const auto& text = d.by_id(id).text;
        if (chosen.count(id)) {
          // Every other chosen sentence comes back with different case.
          std::string said = text;
          if (id % 2) {
            for (auto& ch : said) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
          }
          fs.push_back({said, BiasType(BiasCategory::Political), 0.8, "chosen"});
        } else if (id % 7 == 0) {
          fs.push_back({text, BiasType(BiasCategory::None), 0.0, "explicitly unbiased"});
        }
      }
      if (mode.is_blocks()) fs.push_back({"A sentence nobody wrote.", BiasType(BiasCategory::Gender), 0.9, "invented"});
      mock.add_text_entry(unit.text, serialize_findings(fs));
    }
    RunOptions opt;
    opt.mode = mode;
    const auto run = run_detection(d, opt, templates(), mock, nullptr);
    const auto got = confusion(run, d);

    // Brute-force recount straight from the chosen set and the gold labels.
    ConfusionMatrix want;
    for (std::size_t i = 0; i < 30; ++i) {
      const bool flagged = chosen.count(i) > 0;
      if (gold[i] == GoldLabel::Biased) (flagged ? want.tp : want.fn)++;
      else (flagged ? want.fp : want.tn)++;
    }
    if (!(got == want)) {
      o.fail(mode.name() + ": harness TP/FP/FN/TN " + std::to_string(got.tp) + "/" + std::to_string(got.fp) + "/" +
             std::to_string(got.fn) + "/" + std::to_string(got.tn) + " vs recount " + std::to_string(want.tp) +
             "/" + std::to_string(want.fp) + "/" + std::to_string(want.fn) + "/" + std::to_string(want.tn));
    }
    if (run.covered_units() != run.units.size()) o.fail(mode.name() + ": incomplete coverage");
  }
  if (seconds_since(start) >= 10.0) o.fail("took longer than 10 s");
  return o;
}

Outcome parser_corpus() {
  Outcome o;
  std::vector<std::filesystem::path> inputs;
  for (const auto& e : std::filesystem::directory_iterator(bhtest::kFixtureDir / "parser")) {
    if (e.path().extension() == ".txt") inputs.push_back(e.path());
  }
  if (inputs.size() < 20) o.fail("only " + std::to_string(inputs.size()) + " fixtures");
  const auto opt_str = [](const json& j) { return j.is_null() ? std::nullopt : std::optional(j.get<std::string>()); };
  const auto opt_num = [](const json& j) { return j.is_null() ? std::nullopt : std::optional(j.get<double>()); };
  for (const auto& in : inputs) {
    const auto name = in.stem().string();
    auto expect_path = in;
    expect_path.replace_extension(".expect.json");
    const auto expect = json::parse(bhtest::read_file(expect_path));
    ParseOutcome out;
    try {
      out = parse_findings(bhtest::read_file(in));
    } catch (const std::exception& e) {
      o.fail(name + ": threw " + e.what());
      continue;
    }
    if (parse_kind_name(out.kind) != expect.at("kind").get<std::string>()) {
      o.fail(name + ": " + std::string(parse_kind_name(out.kind)) + " instead of " + expect.at("kind").get<std::string>());
      continue;
    }
    if (out.kind == ParseKind::Failed) continue;
    const auto& want = expect.at("findings");
    bool same = out.findings.size() == want.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) {
      same = out.findings[i].sentence_text == opt_str(want[i]["sentence"]) &&
             out.findings[i].bias_type == opt_str(want[i]["bias_type"]) &&
             out.findings[i].bias_score == opt_num(want[i]["bias_score"]) &&
             out.findings[i].description == opt_str(want[i]["bias_description"]);
    }
    if (!same) o.fail(name + ": findings differ from the hand-checked expectation");
  }
  return o;
}

Outcome property_suite(const char* binary) {
  Outcome o;
  if (!binary) {
    o.fail("property test binary not given");
    return o;
  }
  const std::string quoted = std::string("'") + binary + "'";
  // The suite itself fixes 500 generated cases per property.
  const std::vector<std::string> required = {
      "raising the threshold only removes findings",
      "threshold monotonicity holds for flagged sets of whole runs",
      "joining sentences into blocks and splitting them back is lossless",
      "F1 lies between precision and recall",
      "confusion counts sum to the number of evaluated sentences",
      "majority vote does not depend on judge order",
      "the cache calls the backend once per distinct request",
      "a warm-cache re-run reproduces the run exactly",
  };
  std::string listing;
  if (FILE* p = popen((quoted + " --list-test-cases --no-version 2>&1").c_str(), "r")) {
    char buf[512];
    while (std::fgets(buf, sizeof buf, p)) listing += buf;
    pclose(p);
  }
  for (const auto& name : required) {
    if (listing.find(name) == std::string::npos) o.fail("missing property: " + name);
  }
  const int rc = std::system((quoted + " --no-version > /dev/null 2>&1").c_str());
  if (rc != 0) o.fail("property suite reported failures (run it directly for details)");
  return o;
}

Outcome finetune_export() {
  Outcome o;
  const auto mode = EvaluationMode::blocks(10);
  const auto d = prepare_for_mode(clean(load_dataset_text(bhtest::mbic_csv({}), ColumnMap{}, "mbic.csv")), mode);
  OracleMap oracle;
  for (const auto& s : d.sentences) {
    if (s.gold == GoldLabel::Biased) oracle[s.id] = {BiasType(kCanonicalCategories[s.id % 9]), 0.75, "oracle"};
  }
  const auto set = build_finetune_set(d, 50, mode, PromptSpec{}, templates(), oracle, 0);

  bhtest::TempDir dir;
  write_jsonl(set.examples, dir / "finetune.jsonl");
  const auto text = bhtest::read_file(dir / "finetune.jsonl");
  std::size_t lines = 0;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    ++lines;
    const auto j = json::parse(line);
    const auto assistant = j.at("messages").back().at("content").get<std::string>();
    if (parse_findings(assistant).kind != ParseKind::Parsed) o.fail("line " + std::to_string(lines) + " not strictly parseable");
  }
  if (lines != 50) o.fail(std::to_string(lines) + " JSONL lines");
  if (set.remaining.size() != 1050) o.fail("remainder has " + std::to_string(set.remaining.size()) + " sentences");
  const std::set<std::size_t> consumed(set.consumed_ids.begin(), set.consumed_ids.end());
  for (const auto& s : set.remaining.sentences) {
    if (consumed.count(s.id)) {
      o.fail("sentence " + std::to_string(s.id) + " is both consumed and remaining");
      break;
    }
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const char* property_binary = argc > 1 ? argv[1] : nullptr;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 metrics reproduction", metrics_reproduction},
      {"2 subtype evaluation reproduction", subtype_reproduction},
      {"3 dataset pipeline", dataset_pipeline},
      {"4 end-to-end oracle run", oracle_run},
      {"5 parser robustness corpus", parser_corpus},
      {"6 property suite", [&] { return property_suite(property_binary); }},
      {"7 fine-tune export", finetune_export},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s  criterion %s\n", o.pass ? "PASS" : "FAIL", name.c_str());
    for (const auto& n : o.notes) std::printf("      %s\n", n.c_str());
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
