#include "biasharness/biasharness.h"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include "biasharness/backend.hpp"
#include "biasharness/dataset.hpp"
#include "biasharness/evaluation.hpp"
#include "biasharness/finetune.hpp"
#include "biasharness/pipeline.hpp"
#include "biasharness/prompting.hpp"
#include "biasharness/report.hpp"

using namespace biasharness;
using nlohmann::json;
using nlohmann::ordered_json;

struct bh_dataset {
  Dataset d;
};
struct bh_templates {
  TemplateSet t;
};
struct bh_backend {
  std::unique_ptr<ChatBackend> impl;
};
struct bh_run {
  DetectionRun r;
};

namespace {

thread_local std::string g_last_error;

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

template <typename F>
bh_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return BH_OK;
  } catch (const InvalidArgument& e) {
    g_last_error = e.what();
    return BH_ERR_INVALID_ARGUMENT;
  } catch (const ConfigError& e) {
    g_last_error = e.what();
    return BH_ERR_CONFIG;
  } catch (const DataError& e) {
    g_last_error = e.what();
    return BH_ERR_DATA;
  } catch (const ValidationError& e) {
    g_last_error = e.what();
    return BH_ERR_DATA;
  } catch (const BackendError& e) {
    g_last_error = std::string(backend_error_name(e.kind())) + ": " + e.what();
    return BH_ERR_BACKEND;
  } catch (const IoError& e) {
    g_last_error = e.what();
    return BH_ERR_IO;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return BH_ERR_IO;
  } catch (const json::exception& e) {
    g_last_error = std::string("bad JSON argument: ") + e.what();
    return BH_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BH_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return BH_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

json parse_options(const char* text) {
  if (!text || !*text) return json::object();
  auto j = json::parse(text);
  if (!j.is_object()) throw ConfigError("options must be a JSON object");
  return j;
}

LogSink make_sink(bh_log_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](std::string_view msg) {
    const std::string s(msg);
    fn(s.c_str(), user);
  };
}

EvaluationMode mode_from(const std::string& name, std::size_t block_size) {
  if (name == "blocks") return EvaluationMode::blocks(block_size);
  if (name == "individual") return EvaluationMode::individual();
  throw ConfigError("unknown mode '" + name + "' (expected blocks or individual)");
}

EvaluationMode mode_from_options(const json& o) {
  return mode_from(o.value("mode", std::string("blocks")), o.value("block_size", std::size_t{10}));
}

AliasTable aliases_from(const std::string& path) {
  if (path.empty()) return AliasTable::defaults();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read alias file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return AliasTable::from_json(text);
}

ColumnMap columns_from(const char* columns_json) {
  return columns_json && *columns_json ? ColumnMap::from_json(columns_json) : ColumnMap{};
}

std::string variant_display(const std::string& id) {
  for (const auto& v : list_variants()) {
    if (v.id == id) return v.display_name;
  }
  return id;
}

}  // namespace

extern "C" {

const char* bh_version(void) { return "0.1.0"; }

const char* bh_last_error(void) { return g_last_error.c_str(); }

void bh_string_free(char* s) { std::free(s); }

bh_status bh_variant_catalog(char** out_text) {
  return guarded([&] {
    require(out_text, "out_text");
    std::string s;
    for (const auto& v : list_variants()) s += v.id + "  " + v.display_name + "\n";
    *out_text = dup_string(s);
  });
}

bh_status bh_dataset_load(const char* path, const char* columns_json, bh_log_fn log, void* user, bh_dataset** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::vector<std::string> warnings;
    auto d = std::make_unique<bh_dataset>();
    d->d = load_dataset(path, columns_from(columns_json), &warnings);
    if (log) {
      for (const auto& w : warnings) log(w.c_str(), user);
    }
    *out = d.release();
  });
}

void bh_dataset_free(bh_dataset* d) { delete d; }

bh_status bh_dataset_clean(bh_dataset* d) {
  return guarded([&] {
    require(d, "dataset");
    d->d = clean(d->d);
  });
}

bh_status bh_dataset_prepare(bh_dataset* d, const char* mode, size_t block_size) {
  return guarded([&] {
    require(d, "dataset");
    require(mode, "mode");
    d->d = prepare_for_mode(d->d, mode_from(mode, block_size));
  });
}

bh_status bh_dataset_size(const bh_dataset* d, size_t* out) {
  return guarded([&] {
    require(d, "dataset");
    require(out, "out");
    *out = d->d.size();
  });
}

bh_status bh_dataset_stats(const bh_dataset* d, char** out_json) {
  return guarded([&] {
    require(d, "dataset");
    require(out_json, "out_json");
    const auto s = stats(d->d);
    ordered_json j;
    j["sentences"] = d->d.size();
    j["biased"] = s.biased;
    j["non_biased"] = s.non_biased;
    j["undecided"] = s.undecided;
    j["content_hash"] = d->d.provenance.content_hash;
    *out_json = dup_string(j.dump());
  });
}

bh_status bh_dataset_write_csv(const bh_dataset* d, const char* columns_json, const char* path) {
  return guarded([&] {
    require(d, "dataset");
    require(path, "path");
    const auto text = dataset_to_csv(d->d, columns_from(columns_json));
    if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty()) {
      std::filesystem::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
      throw IoError(std::string("cannot write ") + path);
    }
  });
}

bh_status bh_templates_load(const char* dir, bh_templates** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    auto t = std::make_unique<bh_templates>();
    t->t = TemplateSet::load(dir);
    *out = t.release();
  });
}

void bh_templates_free(bh_templates* t) { delete t; }

bh_status bh_prompt_preview(const bh_templates* t, const char* variant, char** out_json) {
  return guarded([&] {
    require(t, "templates");
    require(variant, "variant");
    require(out_json, "out_json");
    const auto& v = find_variant(variant);
    const auto bundle = build_prompt(v.spec, t->t);
    ordered_json j;
    j["system"] = bundle.system_text ? ordered_json(*bundle.system_text) : ordered_json(nullptr);
    j["user_prefix"] = bundle.user_prefix;
    j["definitions"] = bundle.definition_count;
    *out_json = dup_string(j.dump());
  });
}

bh_status bh_backend_open_http(const char* config_json, bh_log_fn log, void* user, bh_backend** out) {
  return guarded([&] {
    require(config_json, "config_json");
    require(out, "out");
    const auto o = parse_options(config_json);
    EndpointConfig cfg;
    cfg.base_url = o.at("base_url").get<std::string>();
    cfg.model = o.value("model", std::string());
    cfg.api_key_env = o.value("api_key_env", cfg.api_key_env);
    cfg.timeout = std::chrono::milliseconds(o.value("timeout_ms", static_cast<long>(cfg.timeout.count())));
    cfg.retry.max_attempts = o.value("max_attempts", cfg.retry.max_attempts);
    cfg.retry.base_delay = std::chrono::milliseconds(o.value("base_delay_ms", static_cast<long>(cfg.retry.base_delay.count())));
    if (cfg.retry.max_attempts < 1) throw ConfigError("max_attempts must be at least 1");
    auto b = std::make_unique<bh_backend>();
    b->impl = std::make_unique<HttpBackend>(cfg, make_sink(log, user));
    *out = b.release();
  });
}

bh_status bh_backend_open_mock(const char* script_json, bh_backend** out) {
  return guarded([&] {
    require(script_json, "script_json");
    require(out, "out");
    auto b = std::make_unique<bh_backend>();
    b->impl = std::make_unique<MockBackend>(MockBackend::from_json(script_json));
    *out = b.release();
  });
}

void bh_backend_free(bh_backend* b) { delete b; }

bh_status bh_backend_call_count(const bh_backend* b, size_t* out) {
  return guarded([&] {
    require(b, "backend");
    require(out, "out");
    *out = b->impl->call_count();
  });
}

bh_status bh_run_detect(const bh_dataset* d, const bh_templates* t, bh_backend* b, const char* options_json,
                        bh_log_fn log, void* user, bh_run** out) {
  return guarded([&] {
    require(d, "dataset");
    require(t, "templates");
    require(b, "backend");
    require(out, "out");
    const auto o = parse_options(options_json);

    RunOptions opt;
    opt.variant = o.value("variant", std::string("base"));
    opt.spec = find_variant(opt.variant).spec;
    if (o.contains("temperature") && !o["temperature"].is_null()) opt.spec.temperature = o["temperature"].get<double>();
    if (o.contains("threshold") && !o["threshold"].is_null()) opt.spec.score_threshold = o["threshold"].get<double>();
    opt.spec.validate();
    opt.mode = mode_from_options(o);
    opt.model = o.value("model", std::string("mock"));
    opt.concurrency = o.value("concurrency", std::size_t{4});
    if (opt.concurrency == 0) throw ConfigError("concurrency must be at least 1");
    opt.aliases = aliases_from(o.value("aliases_path", std::string()));
    opt.log = make_sink(log, user);

    std::optional<ResponseCache> cache;
    const auto cache_dir = o.value("cache_dir", std::string());
    if (!cache_dir.empty()) cache.emplace(cache_dir);

    auto r = std::make_unique<bh_run>();
    r->r = run_detection(d->d, opt, t->t, *b->impl, cache ? &*cache : nullptr);
    *out = r.release();
  });
}

void bh_run_free(bh_run* r) { delete r; }

bh_status bh_run_save(const bh_run* r, const char* dir) {
  return guarded([&] {
    require(r, "run");
    require(dir, "dir");
    save_run(r->r, dir);
  });
}

bh_status bh_run_load(const char* dir, bh_run** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    auto r = std::make_unique<bh_run>();
    r->r = load_run(dir);
    *out = r.release();
  });
}

bh_status bh_run_coverage(const bh_run* r, size_t* covered, size_t* units) {
  return guarded([&] {
    require(r, "run");
    require(covered, "covered");
    require(units, "units");
    *covered = r->r.covered_units();
    *units = r->r.units.size();
  });
}

bh_status bh_run_summary(const bh_run* r, const bh_dataset* d, char** out_json) {
  return guarded([&] {
    require(r, "run");
    require(d, "dataset");
    require(out_json, "out_json");
    const auto cm = confusion(r->r, d->d);
    const auto m = metrics(cm);
    ordered_json j;
    j["variant"] = r->r.variant;
    j["mode"] = r->r.mode.name();
    j["tp"] = cm.tp;
    j["fp"] = cm.fp;
    j["fn"] = cm.fn;
    j["tn"] = cm.tn;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["degenerate"] = m.degenerate;
    j["covered_units"] = r->r.covered_units();
    j["units"] = r->r.units.size();
    j["parse_failures"] = r->r.parse_failures();
    j["backend_errors"] = r->r.backend_errors();
    j["cache_hits"] = r->r.cache_hits();
    j["summary"] = summary_line(cm, m, r->r.covered_units(), r->r.units.size());
    *out_json = dup_string(j.dump());
  });
}

bh_status bh_ablation_report(const bh_run* const* runs, size_t count, const bh_dataset* d, const char* format,
                             char** out_text) {
  return guarded([&] {
    require(d, "dataset");
    require(format, "format");
    require(out_text, "out_text");
    if (count > 0) require(runs, "runs");
    const auto fmt = parse_report_format(format);
    std::vector<NamedRun> named;
    std::size_t base = 0;
    for (std::size_t i = 0; i < count; ++i) {
      require(runs[i], "runs[i]");
      named.push_back({variant_display(runs[i]->r.variant), &runs[i]->r});
    }
    for (std::size_t i = 0; i < count; ++i) {
      if (runs[i]->r.variant == "base") {
        base = i;
        break;
      }
    }
    *out_text = dup_string(render_report(named.empty() ? std::vector<ResultRow>{} : ablation_table(named, d->d, base), fmt));
  });
}

bh_status bh_type_distribution(const bh_run* r, const char* format, char** out_text) {
  return guarded([&] {
    require(r, "run");
    require(format, "format");
    require(out_text, "out_text");
    *out_text = dup_string(render_distribution(type_distribution(r->r), parse_report_format(format)));
  });
}

bh_status bh_subtype_sample(const bh_run* r, size_t n, uint64_t seed, char** out_csv) {
  return guarded([&] {
    require(r, "run");
    require(out_csv, "out_csv");
    *out_csv = dup_string(sample_sheet_csv(draw_subtype_sample(r->r, n, seed)));
  });
}

bh_status bh_subtype_report(const char* judgments_path, const char* aliases_path, const char* format,
                            char** out_text) {
  return guarded([&] {
    require(judgments_path, "judgments_path");
    require(format, "format");
    require(out_text, "out_text");
    const auto aliases = aliases_from(aliases_path ? aliases_path : "");
    const auto report = subtype_accuracy(load_judgments(judgments_path, aliases));
    *out_text = dup_string(render_subtype_report(report, parse_report_format(format)));
  });
}

bh_status bh_finetune_export(const bh_dataset* d, const bh_templates* t, const char* oracle_path,
                             const char* options_json, const char* columns_json, const char* out_dir,
                             char** out_json) {
  return guarded([&] {
    require(d, "dataset");
    require(t, "templates");
    require(oracle_path, "oracle_path");
    require(out_dir, "out_dir");
    require(out_json, "out_json");
    const auto o = parse_options(options_json);
    const auto mode = mode_from_options(o);
    const auto n = o.value("n", std::size_t{50});
    const auto seed = o.value("seed", std::uint64_t{0});
    const auto& variant = find_variant(o.value("variant", std::string("base")));
    const auto aliases = aliases_from(o.value("aliases_path", std::string()));

    const auto set = build_finetune_set(d->d, n, mode, variant.spec, t->t, load_oracle(oracle_path, aliases), seed);
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_jsonl(set.examples, dir / "finetune.jsonl");
    {
      const auto csv = dataset_to_csv(set.remaining, columns_from(columns_json));
      std::ofstream f(dir / "remaining.csv", std::ios::binary | std::ios::trunc);
      if (!f || !f.write(csv.data(), static_cast<std::streamsize>(csv.size()))) {
        throw IoError("cannot write " + (dir / "remaining.csv").string());
      }
    }
    {
      const auto manifest = finetune_manifest_json(set, mode, n);
      std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
      if (!f || !f.write(manifest.data(), static_cast<std::streamsize>(manifest.size()))) {
        throw IoError("cannot write " + (dir / "manifest.json").string());
      }
    }
    ordered_json j;
    j["examples"] = set.examples.size();
    j["remaining"] = set.remaining.size();
    j["consumed"] = set.consumed_ids.size();
    *out_json = dup_string(j.dump());
  });
}

}  // extern "C"
