#include "biasharness/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json_io.hpp"
#include "text_util.hpp"

namespace biasharness {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<std::string> Block::sentence_texts() const { return split_block_text(text); }

std::vector<std::string> split_block_text(std::string_view text) { return text::split(text, '\n'); }

std::vector<Block> make_blocks(const Dataset& d, std::size_t size) {
  if (size == 0) throw ConfigError("block size must be at least 1");
  if (d.size() % size != 0) {
    throw DataError("dataset of " + std::to_string(d.size()) + " sentences cannot be split into blocks of " +
                    std::to_string(size) + "; prepare it for block mode first");
  }
  std::vector<Block> blocks;
  blocks.reserve(d.size() / size);
  for (std::size_t start = 0; start < d.size(); start += size) {
    Block b;
    for (std::size_t k = start; k < start + size; ++k) {
      const auto& s = d.sentences[k];
      if (s.text.find_first_of("\r\n") != std::string::npos) {
        throw DataError("sentence " + std::to_string(s.id) + " contains a line break");
      }
      if (k > start) b.text.push_back('\n');
      b.text += s.text;
      b.sentence_ids.push_back(s.id);
    }
    blocks.push_back(std::move(b));
  }
  return blocks;
}

std::vector<BiasFinding> filter_findings(std::vector<BiasFinding> findings) {
  std::erase_if(findings, [](const BiasFinding& f) { return f.bias_type.is_none() || f.bias_score == 0.0; });
  return findings;
}

std::vector<BiasFinding> apply_threshold(std::vector<BiasFinding> findings, double threshold) {
  std::erase_if(findings, [threshold](const BiasFinding& f) { return f.bias_score < threshold; });
  return findings;
}

std::string_view match_method_name(MatchMethod m) {
  switch (m) {
    case MatchMethod::Exact: return "exact";
    case MatchMethod::Normalized: return "normalized";
    case MatchMethod::Containment: return "containment";
    case MatchMethod::Fuzzy: return "fuzzy";
  }
  return "?";
}

std::string normalize_for_match(std::string_view s) {
  return text::collapse_whitespace(text::to_lower_ascii(text::fold_punctuation(s)));
}

double edit_similarity(std::string_view a, std::string_view b) {
  const auto x = text::utf8_decode(a);
  const auto y = text::utf8_decode(b);
  const std::size_t longest = std::max(x.size(), y.size());
  if (longest == 0) return 1.0;
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return 1.0 - static_cast<double>(prev[y.size()]) / static_cast<double>(longest);
}

namespace {

struct Candidate {
  std::size_t id;
  std::string text;
  std::string normalized;
};

std::optional<std::pair<std::size_t, MatchMethod>> match_one(const std::string& finding_text,
                                                             const std::vector<Candidate>& cands,
                                                             const AlignmentConfig& cfg) {
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (cands[k].text == finding_text) return std::pair{k, MatchMethod::Exact};
  }
  const auto norm = normalize_for_match(finding_text);
  if (norm.empty()) return std::nullopt;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (cands[k].normalized == norm) return std::pair{k, MatchMethod::Normalized};
  }

  // Containment: prefer the candidate with the highest length ratio.
  std::optional<std::size_t> best;
  double best_ratio = 0.0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const auto& c = cands[k].normalized;
    if (c.empty()) continue;
    const bool contains = c.find(norm) != std::string::npos || norm.find(c) != std::string::npos;
    if (!contains) continue;
    const double ratio = static_cast<double>(std::min(c.size(), norm.size())) /
                         static_cast<double>(std::max(c.size(), norm.size()));
    if (ratio >= cfg.containment_ratio && ratio > best_ratio) {
      best = k;
      best_ratio = ratio;
    }
  }
  if (best) return std::pair{*best, MatchMethod::Containment};

  double best_sim = 0.0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const auto& c = cands[k].normalized;
    // Length gap alone already bounds the similarity.
    const double gap = static_cast<double>(c.size() > norm.size() ? c.size() - norm.size() : norm.size() - c.size());
    if (1.0 - gap / static_cast<double>(std::max(c.size(), norm.size())) < cfg.fuzzy_threshold - 0.05) continue;
    const double sim = edit_similarity(c, norm);
    if (sim >= cfg.fuzzy_threshold && sim > best_sim) {
      best = k;
      best_sim = sim;
    }
  }
  if (best) return std::pair{*best, MatchMethod::Fuzzy};
  return std::nullopt;
}

}  // namespace

Alignment align_findings(const std::vector<BiasFinding>& findings, const Block& unit,
                         const EvaluationMode& mode, const AlignmentConfig& config) {
  std::vector<Candidate> cands;
  const auto texts = unit.sentence_texts();
  for (std::size_t k = 0; k < unit.sentence_ids.size() && k < texts.size(); ++k) {
    cands.push_back({unit.sentence_ids[k], texts[k], normalize_for_match(texts[k])});
  }
  if (!mode.is_blocks() && cands.size() > 1) cands.resize(1);

  Alignment out;
  for (std::size_t i = 0; i < findings.size(); ++i) {
    const auto& f = findings[i];
    if (!mode.is_blocks() && i > 0) {
      out.unmatched.push_back({i, f});
      continue;
    }
    if (auto m = match_one(f.sentence_text, cands, config)) {
      out.aligned.push_back({cands[m->first].id, i, m->second, f});
    } else {
      out.unmatched.push_back({i, f});
    }
  }
  return out;
}

std::size_t DetectionRun::covered_units() const {
  return static_cast<std::size_t>(std::count_if(units.begin(), units.end(), [](const auto& u) { return u.covered(); }));
}

std::size_t DetectionRun::parse_failures() const {
  return static_cast<std::size_t>(std::count_if(units.begin(), units.end(), [](const auto& u) {
    return u.raw_output.has_value() && u.parse_kind == ParseKind::Failed;
  }));
}

std::size_t DetectionRun::backend_errors() const {
  return static_cast<std::size_t>(
      std::count_if(units.begin(), units.end(), [](const auto& u) { return !u.raw_output.has_value(); }));
}

std::size_t DetectionRun::cache_hits() const {
  return static_cast<std::size_t>(
      std::count_if(units.begin(), units.end(), [](const auto& u) { return u.from_cache; }));
}

std::vector<AlignedFinding> DetectionRun::reporting_findings() const {
  std::map<std::size_t, AlignedFinding> best;
  for (const auto& u : units) {
    for (const auto& a : u.aligned) {
      auto it = best.find(a.sentence_id);
      if (it == best.end() || a.finding.bias_score > it->second.finding.bias_score) best[a.sentence_id] = a;
    }
  }
  std::vector<AlignedFinding> out;
  out.reserve(best.size());
  for (auto& [id, a] : best) out.push_back(std::move(a));
  return out;
}

namespace {

void process_unit(UnitRecord& rec, const Block& unit, const RunOptions& opt, const PromptBundle& bundle,
                  ChatBackend& backend, const ResponseCache* cache, const LogSink& log) {
  ChatRequest req;
  req.model = opt.model;
  req.temperature = opt.spec.temperature;
  req.messages = render_messages(bundle, unit.text, opt.spec);

  Completion completion;
  try {
    completion = cached_complete(req, backend, cache, log);
  } catch (const BackendError& e) {
    rec.errors.push_back(std::string("backend ") + std::string(backend_error_name(e.kind())) + ": " + e.what());
    return;
  }
  rec.raw_output = completion.text;
  rec.from_cache = completion.from_cache;
  if (completion.text.empty()) rec.errors.emplace_back("empty completion");

  auto outcome = parse_findings(completion.text);
  rec.parse_kind = outcome.kind;
  rec.repairs = outcome.repairs;
  if (outcome.kind == ParseKind::Failed) {
    rec.parse_failure = outcome.reason;
    return;
  }

  for (const auto& raw : outcome.findings) {
    auto report = validate_finding(raw, opt.aliases);
    if (!report.accepted()) {
      rec.rejections.push_back(report.rejection);
      continue;
    }
    rec.validated.push_back(*report.finding);
    rec.validation_flags.push_back(report.flags);
  }

  auto kept = filter_findings(rec.validated);
  if (opt.spec.score_threshold) kept = apply_threshold(std::move(kept), *opt.spec.score_threshold);

  auto alignment = align_findings(kept, unit, opt.mode, opt.alignment);
  rec.aligned = std::move(alignment.aligned);
  rec.unmatched = std::move(alignment.unmatched);
  if (log) {
    for (const auto& u : rec.unmatched) {
      log("unit " + std::to_string(rec.index) + ": unmatched finding \"" + u.finding.sentence_text + "\"");
    }
  }
}

}  // namespace

DetectionRun run_detection(const Dataset& d, const RunOptions& opt, const TemplateSet& templates,
                           ChatBackend& backend, const ResponseCache* cache) {
  opt.spec.validate();
  const auto blocks = make_blocks(d, opt.mode.unit_size());
  const auto bundle = build_prompt(opt.spec, templates);

  DetectionRun run;
  run.dataset = d.provenance;
  run.mode = opt.mode;
  run.variant = opt.variant;
  run.spec = opt.spec;
  run.model = opt.model;
  run.alignment = opt.alignment;
  run.evaluated_ids = d.ids();
  run.units.resize(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    run.units[i].index = i;
    run.units[i].sentence_ids = blocks[i].sentence_ids;
    run.units[i].input_text = blocks[i].text;
  }

  std::mutex log_mu;
  LogSink log;
  if (opt.log) {
    log = [&](std::string_view msg) {
      std::lock_guard lock(log_mu);
      opt.log(msg);
    };
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < blocks.size(); i = next++) {
      auto& rec = run.units[i];
      try {
        process_unit(rec, blocks[i], opt, bundle, backend, cache, log);
      } catch (const std::exception& e) {
        rec.errors.push_back(std::string("internal: ") + e.what());
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(opt.concurrency, 1, std::max<std::size_t>(1, blocks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& u : run.units) {
    for (const auto& a : u.aligned) run.flagged.insert(a.sentence_id);
  }
  return run;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

ordered_json aligned_to_json(const AlignedFinding& a) {
  ordered_json j;
  j["sentence_id"] = a.sentence_id;
  j["finding_index"] = a.finding_index;
  j["method"] = match_method_name(a.method);
  j["finding"] = jsonio::finding_to_json(a.finding);
  return j;
}

MatchMethod method_from_name(const std::string& s) {
  for (auto m : {MatchMethod::Exact, MatchMethod::Normalized, MatchMethod::Containment, MatchMethod::Fuzzy}) {
    if (match_method_name(m) == s) return m;
  }
  throw DataError("unknown match method '" + s + "' in run record");
}

ParseKind parse_kind_from_name(const std::string& s) {
  for (auto k : {ParseKind::Parsed, ParseKind::Repaired, ParseKind::Failed}) {
    if (parse_kind_name(k) == s) return k;
  }
  throw DataError("unknown parse outcome '" + s + "' in run record");
}

std::string unit_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "unit_%05zu.json", index);
  return buf;
}

}  // namespace

void save_run(const DetectionRun& run, const fs::path& dir) {
  fs::create_directories(dir / "raw");

  ordered_json manifest;
  manifest["format"] = "biasharness-run/1";
  manifest["dataset"] = {{"source_path", run.dataset.source_path}, {"content_hash", run.dataset.content_hash}};
  manifest["mode"] = jsonio::mode_to_json(run.mode);
  manifest["variant"] = run.variant;
  manifest["prompt_spec"] = jsonio::spec_to_json(run.spec);
  manifest["model"] = run.model;
  manifest["alignment"] = {{"containment_ratio", run.alignment.containment_ratio},
                           {"fuzzy_threshold", run.alignment.fuzzy_threshold}};
  manifest["evaluated_ids"] = run.evaluated_ids;
  manifest["units"] = run.units.size();
  manifest["covered_units"] = run.covered_units();
  manifest["parse_failures"] = run.parse_failures();
  manifest["backend_errors"] = run.backend_errors();
  jsonio::write_json_file(dir / "manifest.json", manifest);

  ordered_json findings = ordered_json::array();
  for (const auto& u : run.units) {
    ordered_json raw;
    raw["index"] = u.index;
    raw["sentence_ids"] = u.sentence_ids;
    raw["input_text"] = u.input_text;
    raw["raw_output"] = u.raw_output ? ordered_json(*u.raw_output) : ordered_json(nullptr);
    raw["errors"] = u.errors;
    jsonio::write_json_file(dir / "raw" / unit_file_name(u.index), raw);

    ordered_json f;
    f["index"] = u.index;
    f["parse"] = parse_kind_name(u.parse_kind);
    f["repairs"] = u.repairs;
    f["parse_failure"] = u.parse_failure;
    f["validated"] = ordered_json::array();
    for (std::size_t k = 0; k < u.validated.size(); ++k) {
      auto v = jsonio::finding_to_json(u.validated[k]);
      v["flags"] = k < u.validation_flags.size() ? u.validation_flags[k] : std::vector<std::string>{};
      f["validated"].push_back(std::move(v));
    }
    f["rejections"] = u.rejections;
    f["aligned"] = ordered_json::array();
    for (const auto& a : u.aligned) f["aligned"].push_back(aligned_to_json(a));
    f["unmatched"] = ordered_json::array();
    for (const auto& m : u.unmatched) {
      f["unmatched"].push_back({{"finding_index", m.finding_index}, {"finding", jsonio::finding_to_json(m.finding)}});
    }
    findings.push_back(std::move(f));
  }
  jsonio::write_json_file(dir / "findings.json", findings);
  jsonio::write_json_file(dir / "flagged.json", ordered_json(std::vector<std::size_t>(run.flagged.begin(), run.flagged.end())));
}

DetectionRun load_run(const fs::path& dir) {
  DetectionRun run;
  try {
    const auto manifest = jsonio::read_json_file(dir / "manifest.json");
    if (manifest.value("format", "") != "biasharness-run/1") {
      throw DataError(dir.string() + " is not a run directory (unknown manifest format)");
    }
    run.dataset.source_path = manifest.at("dataset").at("source_path").get<std::string>();
    run.dataset.content_hash = manifest.at("dataset").at("content_hash").get<std::string>();
    run.mode = jsonio::mode_from_json(manifest.at("mode"));
    run.variant = manifest.at("variant").get<std::string>();
    run.spec = jsonio::spec_from_json(manifest.at("prompt_spec"));
    run.model = manifest.at("model").get<std::string>();
    run.alignment.containment_ratio = manifest.at("alignment").at("containment_ratio").get<double>();
    run.alignment.fuzzy_threshold = manifest.at("alignment").at("fuzzy_threshold").get<double>();
    run.evaluated_ids = manifest.at("evaluated_ids").get<std::vector<std::size_t>>();

    const auto findings = jsonio::read_json_file(dir / "findings.json");
    const auto n = manifest.at("units").get<std::size_t>();
    if (findings.size() != n) throw DataError("findings.json unit count does not match manifest");
    run.units.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& u = run.units[i];
      const auto raw = jsonio::read_json_file(dir / "raw" / unit_file_name(i));
      u.index = raw.at("index").get<std::size_t>();
      u.sentence_ids = raw.at("sentence_ids").get<std::vector<std::size_t>>();
      u.input_text = raw.at("input_text").get<std::string>();
      if (!raw.at("raw_output").is_null()) u.raw_output = raw.at("raw_output").get<std::string>();
      u.errors = raw.at("errors").get<std::vector<std::string>>();

      const auto& f = findings.at(i);
      u.parse_kind = parse_kind_from_name(f.at("parse").get<std::string>());
      u.repairs = f.at("repairs").get<std::vector<std::string>>();
      u.parse_failure = f.at("parse_failure").get<std::string>();
      for (const auto& v : f.at("validated")) {
        u.validated.push_back(jsonio::finding_from_json(v));
        u.validation_flags.push_back(v.at("flags").get<std::vector<std::string>>());
      }
      u.rejections = f.at("rejections").get<std::vector<std::string>>();
      for (const auto& a : f.at("aligned")) {
        u.aligned.push_back({a.at("sentence_id").get<std::size_t>(), a.at("finding_index").get<std::size_t>(),
                             method_from_name(a.at("method").get<std::string>()),
                             jsonio::finding_from_json(a.at("finding"))});
      }
      for (const auto& m : f.at("unmatched")) {
        u.unmatched.push_back({m.at("finding_index").get<std::size_t>(), jsonio::finding_from_json(m.at("finding"))});
      }
    }
    for (auto id : jsonio::read_json_file(dir / "flagged.json").get<std::vector<std::size_t>>()) {
      run.flagged.insert(id);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed run record in " + dir.string() + ": " + e.what());
  }
  return run;
}

}  // namespace biasharness
