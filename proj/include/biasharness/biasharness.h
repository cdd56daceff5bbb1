#ifndef BIASHARNESS_H
#define BIASHARNESS_H

/*
 * C interface to the bias-detection harness.
 *
 * Every function returns a bh_status. On failure the message is available
 * from bh_last_error() on the same thread until the next call. Strings
 * returned through char** out-parameters are heap allocated and must be
 * released with bh_string_free(). Handles are released with their _free
 * function; passing NULL to any _free function is allowed.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define BH_API __attribute__((visibility("default")))
#else
#define BH_API
#endif

typedef enum bh_status {
  BH_OK = 0,
  BH_ERR_INTERNAL = 1,
  BH_ERR_CONFIG = 2,  /* bad option, unknown variant, missing column */
  BH_ERR_DATA = 3,    /* malformed input file, unmappable label, dataset mismatch */
  BH_ERR_BACKEND = 4, /* endpoint failure outside a run */
  BH_ERR_PARTIAL = 5, /* reserved for callers reporting incomplete coverage */
  BH_ERR_IO = 6,
  BH_ERR_INVALID_ARGUMENT = 7
} bh_status;

typedef struct bh_dataset bh_dataset;
typedef struct bh_templates bh_templates;
typedef struct bh_backend bh_backend;
typedef struct bh_run bh_run;

typedef void (*bh_log_fn)(const char* message, void* user);

BH_API const char* bh_version(void);
BH_API const char* bh_last_error(void);
BH_API void bh_string_free(char* s);

/* One "id  display name" line per prompt variant. */
BH_API bh_status bh_variant_catalog(char** out_text);

/* ---- datasets ---------------------------------------------------------- */

/* columns_json may be NULL for the MBIC defaults. Warnings (rewritten line
 * breaks) go to log when given. */
BH_API bh_status bh_dataset_load(const char* path, const char* columns_json, bh_log_fn log, void* user,
                                 bh_dataset** out);
BH_API void bh_dataset_free(bh_dataset* d);
/* Drops sentences without a gold decision. */
BH_API bh_status bh_dataset_clean(bh_dataset* d);
/* mode is "blocks" or "individual"; block_size is ignored for individual. */
BH_API bh_status bh_dataset_prepare(bh_dataset* d, const char* mode, size_t block_size);
BH_API bh_status bh_dataset_size(const bh_dataset* d, size_t* out);
/* {"sentences":N,"biased":B,"non_biased":NB,"undecided":U,"content_hash":"..."} */
BH_API bh_status bh_dataset_stats(const bh_dataset* d, char** out_json);
BH_API bh_status bh_dataset_write_csv(const bh_dataset* d, const char* columns_json, const char* path);

/* ---- prompts ----------------------------------------------------------- */

BH_API bh_status bh_templates_load(const char* dir, bh_templates** out);
BH_API void bh_templates_free(bh_templates* t);
/* {"system": "..." | null, "user_prefix": "...", "definitions": N} */
BH_API bh_status bh_prompt_preview(const bh_templates* t, const char* variant, char** out_json);

/* ---- backends ---------------------------------------------------------- */

/* {"base_url": "...", "model": "...", "api_key_env": "...", "timeout_ms": N,
 *  "max_attempts": N, "base_delay_ms": N}. Retries are reported to log. */
BH_API bh_status bh_backend_open_http(const char* config_json, bh_log_fn log, void* user, bh_backend** out);
/* Script format: {"ordered": [...]} or {"keyed": [...], "default": "..."}. */
BH_API bh_status bh_backend_open_mock(const char* script_json, bh_backend** out);
BH_API void bh_backend_free(bh_backend* b);
BH_API bh_status bh_backend_call_count(const bh_backend* b, size_t* out);

/* ---- runs -------------------------------------------------------------- */

/* options_json keys, all optional: variant, mode, block_size, model,
 * temperature, threshold, concurrency, cache_dir, aliases_path.
 * The dataset must already be cleaned and prepared for the mode. Backend
 * failures are recorded per unit and do not fail the call; check
 * bh_run_coverage afterwards. */
BH_API bh_status bh_run_detect(const bh_dataset* d, const bh_templates* t, bh_backend* b, const char* options_json,
                               bh_log_fn log, void* user, bh_run** out);
BH_API void bh_run_free(bh_run* r);
BH_API bh_status bh_run_save(const bh_run* r, const char* dir);
BH_API bh_status bh_run_load(const char* dir, bh_run** out);
BH_API bh_status bh_run_coverage(const bh_run* r, size_t* covered, size_t* units);
/* {"variant","mode","tp","fp","fn","tn","precision","recall","f1",
 *  "degenerate","covered_units","units","parse_failures","backend_errors",
 *  "cache_hits","summary"} */
BH_API bh_status bh_run_summary(const bh_run* r, const bh_dataset* d, char** out_json);

/* ---- evaluation -------------------------------------------------------- */

/* format is "markdown", "csv" or "json" throughout this section.
 *
 * One row per run, named by the run's variant display name. The run whose
 * variant is "base" is the comparison row, else the first run. */
BH_API bh_status bh_ablation_report(const bh_run* const* runs, size_t count, const bh_dataset* d,
                                    const char* format, char** out_text);
BH_API bh_status bh_type_distribution(const bh_run* r, const char* format, char** out_text);
BH_API bh_status bh_subtype_sample(const bh_run* r, size_t n, uint64_t seed, char** out_csv);
BH_API bh_status bh_subtype_report(const char* judgments_path, const char* aliases_path, const char* format,
                                   char** out_text);

/* ---- fine-tune export -------------------------------------------------- */

/* options_json: {"n": 50, "mode": "blocks", "block_size": 10,
 * "variant": "base", "seed": 0, "aliases_path": "..."}. Writes
 * finetune.jsonl, remaining.csv and manifest.json into out_dir and returns
 * {"examples": N, "remaining": M, "consumed": K}. */
BH_API bh_status bh_finetune_export(const bh_dataset* d, const bh_templates* t, const char* oracle_path,
                                    const char* options_json, const char* columns_json, const char* out_dir,
                                    char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* BIASHARNESS_H */
