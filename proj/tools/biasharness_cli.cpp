// Command-line front end. Talks to the harness only through biasharness.h.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "biasharness/biasharness.h"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef BIASHARNESS_DEFAULT_TEMPLATE_DIR
#define BIASHARNESS_DEFAULT_TEMPLATE_DIR "templates"
#endif

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kBackend = 4, kPartial = 5 };

struct Failure {
  int code;
  std::string message;
};

int exit_code_for(bh_status s) {
  switch (s) {
    case BH_OK: return kOk;
    case BH_ERR_CONFIG:
    case BH_ERR_INVALID_ARGUMENT: return kConfig;
    case BH_ERR_DATA: return kData;
    case BH_ERR_BACKEND: return kBackend;
    case BH_ERR_PARTIAL: return kPartial;
    default: return kOther;
  }
}

void check(bh_status s) {
  if (s != BH_OK) throw Failure{exit_code_for(s), bh_last_error()};
}

// Owns a string handed out by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  bh_string_free(s);
  return out;
}

void log_to_stderr(const char* msg, void*) { std::fprintf(stderr, "biasharness: %s\n", msg); }

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
};

using DatasetHandle = Handle<bh_dataset, bh_dataset_free>;
using TemplatesHandle = Handle<bh_templates, bh_templates_free>;
using BackendHandle = Handle<bh_backend, bh_backend_free>;
using RunHandle = Handle<bh_run, bh_run_free>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kConfig, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw Failure{kOther, "cannot write " + path.string()};
  }
}

struct Globals {
  std::string dataset;
  std::string mode = "blocks";
  std::size_t block_size = 10;
  std::string variant = "base";
  std::string model;
  std::string endpoint;
  std::optional<double> temperature;
  std::optional<double> threshold;
  std::string cache_dir;
  std::string out;
  std::uint64_t seed = 0;
  std::size_t concurrency = 4;
  std::string templates = BIASHARNESS_DEFAULT_TEMPLATE_DIR;
  std::string columns;  // JSON file with a column map
  std::string aliases;  // JSON file with extra bias-type aliases
  std::string format = "markdown";
};

std::string columns_json(const Globals& g) { return g.columns.empty() ? std::string() : read_file(g.columns); }

void require_flag(const std::string& value, const char* flag) {
  if (value.empty()) throw Failure{kConfig, std::string(flag) + " is required for this command"};
}

std::vector<std::string> catalog_ids() {
  char* text = nullptr;
  check(bh_variant_catalog(&text));
  std::vector<std::string> ids;
  std::istringstream in(take(text));
  for (std::string line; std::getline(in, line);) ids.push_back(line.substr(0, line.find(' ')));
  return ids;
}

void check_variant(const std::string& id) {
  for (const auto& known : catalog_ids()) {
    if (known == id) return;
  }
  char* text = nullptr;
  check(bh_variant_catalog(&text));
  throw Failure{kConfig, "unknown variant '" + id + "'. Available variants:\n" + take(text)};
}

DatasetHandle load_prepared(const Globals& g, bool prepare) {
  require_flag(g.dataset, "--dataset");
  DatasetHandle d;
  const auto cols = columns_json(g);
  check(bh_dataset_load(g.dataset.c_str(), cols.empty() ? nullptr : cols.c_str(), log_to_stderr, nullptr, &d.p));
  check(bh_dataset_clean(d.p));
  if (prepare) {
    std::size_t before = 0, after = 0;
    check(bh_dataset_size(d.p, &before));
    check(bh_dataset_prepare(d.p, g.mode.c_str(), g.block_size));
    check(bh_dataset_size(d.p, &after));
    if (after != before) {
      std::fprintf(stderr, "biasharness: dropped %zu trailing sentence(s) to fill whole blocks\n", before - after);
    }
  }
  return d;
}

TemplatesHandle load_templates(const Globals& g) {
  TemplatesHandle t;
  check(bh_templates_load(g.templates.c_str(), &t.p));
  return t;
}

BackendHandle open_backend(const Globals& g) {
  std::string endpoint = g.endpoint;
  if (endpoint.empty()) {
    if (const char* env = std::getenv("BIASHARNESS_ENDPOINT")) endpoint = env;
  }
  if (endpoint.empty()) throw Failure{kConfig, "no endpoint: pass --endpoint or set BIASHARNESS_ENDPOINT"};

  BackendHandle b;
  if (endpoint.rfind("mock:", 0) == 0) {
    const auto script = read_file(endpoint.substr(5));
    check(bh_backend_open_mock(script.c_str(), &b.p));
  } else {
    json cfg = {{"base_url", endpoint}, {"model", g.model}};
    check(bh_backend_open_http(cfg.dump().c_str(), log_to_stderr, nullptr, &b.p));
  }
  return b;
}

json run_options(const Globals& g, const std::string& variant) {
  json o;
  o["variant"] = variant;
  o["mode"] = g.mode;
  o["block_size"] = g.block_size;
  o["model"] = g.model.empty() ? "mock" : g.model;
  o["concurrency"] = g.concurrency;
  if (g.temperature) o["temperature"] = *g.temperature;
  if (g.threshold) o["threshold"] = *g.threshold;
  if (!g.cache_dir.empty()) o["cache_dir"] = g.cache_dir;
  if (!g.aliases.empty()) o["aliases_path"] = g.aliases;
  return o;
}

struct RunResult {
  RunHandle run;
  json summary;
  bool partial = false;
};

RunResult execute_run(const Globals& g, const std::string& variant, bh_dataset* d, bh_templates* t, bh_backend* b,
                      const fs::path& dir) {
  RunResult res;
  const auto opts = run_options(g, variant).dump();
  check(bh_run_detect(d, t, b, opts.c_str(), log_to_stderr, nullptr, &res.run.p));
  check(bh_run_save(res.run.p, dir.string().c_str()));
  char* text = nullptr;
  check(bh_run_summary(res.run.p, d, &text));
  res.summary = json::parse(take(text));
  // Cache hits vary between otherwise identical invocations; keep them out
  // of the persisted record.
  json persisted = res.summary;
  persisted.erase("cache_hits");
  write_file(dir / "summary.json", persisted.dump(2) + "\n");
  res.partial = res.summary["covered_units"] != res.summary["units"];
  return res;
}

int cmd_ingest(const Globals& g) {
  require_flag(g.dataset, "--dataset");
  DatasetHandle d;
  const auto cols = columns_json(g);
  check(bh_dataset_load(g.dataset.c_str(), cols.empty() ? nullptr : cols.c_str(), log_to_stderr, nullptr, &d.p));
  char* raw_stats = nullptr;
  check(bh_dataset_stats(d.p, &raw_stats));
  const auto before = json::parse(take(raw_stats));
  check(bh_dataset_clean(d.p));
  char* clean_stats = nullptr;
  check(bh_dataset_stats(d.p, &clean_stats));
  const auto after = json::parse(take(clean_stats));

  std::printf("%zu sentences (%zu biased, %zu non-biased)\n", after["sentences"].get<std::size_t>(),
              after["biased"].get<std::size_t>(), after["non_biased"].get<std::size_t>());
  std::printf("removed %zu without annotator agreement from %zu rows\n", before["undecided"].get<std::size_t>(),
              before["sentences"].get<std::size_t>());

  check(bh_dataset_prepare(d.p, g.mode.c_str(), g.block_size));
  std::size_t prepared = 0;
  check(bh_dataset_size(d.p, &prepared));
  if (g.mode == "blocks") {
    std::printf("blocks mode: %zu sentences in %zu blocks of %zu\n", prepared, prepared / g.block_size, g.block_size);
  } else {
    std::printf("individual mode: %zu sentences\n", prepared);
  }
  if (!g.out.empty()) {
    fs::create_directories(g.out);
    const auto path = (fs::path(g.out) / "prepared.csv").string();
    check(bh_dataset_write_csv(d.p, cols.empty() ? nullptr : cols.c_str(), path.c_str()));
    json j = {{"raw", before}, {"cleaned", after}, {"mode", g.mode}, {"prepared", prepared}};
    write_file(fs::path(g.out) / "ingest.json", j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_run(const Globals& g) {
  check_variant(g.variant);
  require_flag(g.out, "--out");
  auto d = load_prepared(g, true);
  auto t = load_templates(g);
  auto b = open_backend(g);
  auto res = execute_run(g, g.variant, d.p, t.p, b.p, g.out);
  std::size_t calls = 0;
  check(bh_backend_call_count(b.p, &calls));

  std::printf("%s\n", res.summary["summary"].get<std::string>().c_str());
  std::fprintf(stderr, "biasharness: backend calls %zu, cache hits %zu, parse failures %zu, backend errors %zu\n",
               calls, res.summary["cache_hits"].get<std::size_t>(), res.summary["parse_failures"].get<std::size_t>(),
               res.summary["backend_errors"].get<std::size_t>());
  if (res.partial) {
    std::fprintf(stderr, "biasharness: partial coverage, %zu of %zu units answered; run saved to %s\n",
                 res.summary["covered_units"].get<std::size_t>(), res.summary["units"].get<std::size_t>(),
                 g.out.c_str());
    return kPartial;
  }
  return kOk;
}

int cmd_ablate(const Globals& g, std::vector<std::string> variants) {
  require_flag(g.out, "--out");
  const auto catalog = catalog_ids();
  if (variants.empty()) variants = catalog;
  for (const auto& v : variants) check_variant(v);
  // Catalog order, duplicates removed.
  std::vector<std::string> ordered;
  for (const auto& id : catalog) {
    if (std::find(variants.begin(), variants.end(), id) != variants.end()) ordered.push_back(id);
  }

  auto d = load_prepared(g, true);
  auto t = load_templates(g);
  auto b = open_backend(g);
  std::vector<RunResult> results;
  bool partial = false;
  for (const auto& v : ordered) {
    results.push_back(execute_run(g, v, d.p, t.p, b.p, fs::path(g.out) / v));
    partial = partial || results.back().partial;
  }
  std::vector<const bh_run*> runs;
  for (const auto& r : results) runs.push_back(r.run.p);
  std::string table;
  for (const char* fmt : {"markdown", "csv", "json"}) {
    char* text = nullptr;
    check(bh_ablation_report(runs.data(), runs.size(), d.p, fmt, &text));
    auto rendered = take(text);
    const std::string ext = fmt == std::string("markdown") ? "md" : fmt;
    write_file(fs::path(g.out) / ("ablation." + ext), rendered);
    if (g.format == fmt) table = std::move(rendered);
  }
  std::fputs(table.c_str(), stdout);
  if (partial) {
    std::fprintf(stderr, "biasharness: at least one variant has partial coverage; see Coverage column\n");
    return kPartial;
  }
  return kOk;
}

int cmd_subtype_eval(const Globals& g, const std::string& run_dir, std::size_t n, const std::string& judgments) {
  if (!judgments.empty()) {
    char* text = nullptr;
    check(bh_subtype_report(judgments.c_str(), g.aliases.empty() ? nullptr : g.aliases.c_str(), g.format.c_str(),
                            &text));
    const auto report = take(text);
    if (!g.out.empty()) write_file(g.out, report);
    std::fputs(report.c_str(), stdout);
    return kOk;
  }
  require_flag(run_dir, "--run");
  RunHandle r;
  check(bh_run_load(run_dir.c_str(), &r.p));
  char* csv = nullptr;
  check(bh_subtype_sample(r.p, n, g.seed, &csv));
  const auto sheet = take(csv);
  if (!g.out.empty()) {
    write_file(g.out, sheet);
    json manifest = {{"run", run_dir}, {"n", n}, {"seed", g.seed}};
    write_file(fs::path(g.out).string() + ".manifest.json", manifest.dump(2) + "\n");
    std::printf("wrote %zu samples to %s\n", n, g.out.c_str());
  } else {
    std::fputs(sheet.c_str(), stdout);
  }
  return kOk;
}

int cmd_export_finetune(const Globals& g, std::size_t n, const std::string& oracle) {
  check_variant(g.variant);
  require_flag(g.out, "--out");
  require_flag(oracle, "--oracle");
  auto d = load_prepared(g, true);
  auto t = load_templates(g);
  json o = {{"n", n}, {"mode", g.mode}, {"block_size", g.block_size}, {"variant", g.variant}, {"seed", g.seed}};
  if (!g.aliases.empty()) o["aliases_path"] = g.aliases;
  const auto cols = columns_json(g);
  char* text = nullptr;
  check(bh_finetune_export(d.p, t.p, oracle.c_str(), o.dump().c_str(), cols.empty() ? nullptr : cols.c_str(),
                           g.out.c_str(), &text));
  const auto summary = json::parse(take(text));
  std::printf("%zu examples written to %s; %zu sentences remain for evaluation\n",
              summary["examples"].get<std::size_t>(), (fs::path(g.out) / "finetune.jsonl").string().c_str(),
              summary["remaining"].get<std::size_t>());
  return kOk;
}

int cmd_report(const Globals& g, const std::vector<std::string>& run_dirs, bool distribution) {
  if (run_dirs.empty()) throw Failure{kConfig, "report needs at least one run directory"};
  std::vector<RunHandle> runs;
  for (const auto& dir : run_dirs) {
    RunHandle r;
    check(bh_run_load(dir.c_str(), &r.p));
    runs.push_back(std::move(r));
  }
  std::string out;
  if (distribution) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      char* text = nullptr;
      check(bh_type_distribution(runs[i].p, g.format.c_str(), &text));
      if (runs.size() > 1 && g.format == "markdown") out += "### " + run_dirs[i] + "\n\n";
      out += take(text);
      if (runs.size() > 1 && g.format == "markdown") out += "\n";
    }
  } else {
    // Runs record which sentences they evaluated, so the cleaned file is enough.
    auto d = load_prepared(g, false);
    std::vector<const bh_run*> ptrs;
    for (const auto& r : runs) ptrs.push_back(r.p);
    char* text = nullptr;
    check(bh_ablation_report(ptrs.data(), ptrs.size(), d.p, g.format.c_str(), &text));
    out = take(text);
  }
  if (!g.out.empty()) write_file(g.out, out);
  std::fputs(out.c_str(), stdout);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-level news bias detection harness for chat-completion models"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--dataset", g.dataset, "Labeled sentence file (CSV)");
  app.add_option("--mode", g.mode, "Evaluation mode")->check(CLI::IsMember({"blocks", "individual"}));
  app.add_option("--block-size", g.block_size, "Sentences per request in blocks mode")
      ->check(CLI::PositiveNumber);
  app.add_option("--variant", g.variant, "Prompt variant id");
  app.add_option("--model", g.model, "Model id sent to the endpoint");
  app.add_option("--endpoint", g.endpoint, "Chat-completions base URL, or mock:<script.json>");
  app.add_option("--temperature", g.temperature, "Override the variant's sampling temperature");
  app.add_option("--threshold", g.threshold, "Minimum bias_score for a finding to flag its sentence");
  app.add_option("--cache-dir", g.cache_dir, "Response cache directory");
  app.add_option("--out", g.out, "Output directory or file");
  app.add_option("--seed", g.seed, "Seed for every shuffle and sample");
  app.add_option("--concurrency", g.concurrency, "Parallel requests")->check(CLI::PositiveNumber);
  app.add_option("--templates", g.templates, "Prompt template directory");
  app.add_option("--columns", g.columns, "JSON column map for non-MBIC files");
  app.add_option("--aliases", g.aliases, "JSON map of extra bias-type spellings");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"markdown", "csv", "json"}));

  auto* ingest = app.add_subcommand("ingest", "Load, clean and summarize a dataset");
  auto* run = app.add_subcommand("run", "Run one prompt variant and score it");
  auto* ablate = app.add_subcommand("ablate", "Run several variants and compare them");
  std::vector<std::string> variants;
  ablate->add_option("--variants", variants, "Variant ids (default: the whole catalog)")->delimiter(',');
  auto* subtype = app.add_subcommand("subtype-eval", "Draw a judgment sample or score filled-in judgments");
  std::string run_dir, judgments;
  std::size_t sample_n = 100;
  subtype->add_option("--run", run_dir, "Run directory to sample from");
  subtype->add_option("-n,--samples", sample_n, "Sample size");
  subtype->add_option("--judgments", judgments, "Filled-in judgment CSV");
  auto* exportft = app.add_subcommand("export-finetune", "Write fine-tuning examples and the held-out remainder");
  std::size_t ft_n = 50;
  std::string oracle;
  exportft->add_option("-n,--examples", ft_n, "Number of units to turn into examples");
  exportft->add_option("--oracle", oracle, "JSON oracle findings keyed by sentence id");
  auto* report = app.add_subcommand("report", "Render saved runs as a table");
  std::vector<std::string> report_runs;
  bool distribution = false;
  report->add_option("runs", report_runs, "Run directories")->required();
  report->add_flag("--distribution", distribution, "Bias-type distribution instead of metrics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*ingest) return cmd_ingest(g);
    if (*run) return cmd_run(g);
    if (*ablate) return cmd_ablate(g, variants);
    if (*subtype) return cmd_subtype_eval(g, run_dir, sample_n, judgments);
    if (*exportft) return cmd_export_finetune(g, ft_n, oracle);
    if (*report) return cmd_report(g, report_runs, distribution);
  } catch (const Failure& f) {
    std::fprintf(stderr, "biasharness: error: %s\n", f.message.c_str());
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "biasharness: error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
