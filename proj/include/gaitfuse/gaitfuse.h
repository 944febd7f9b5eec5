#ifndef GAITFUSE_GAITFUSE_H
#define GAITFUSE_GAITFUSE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(GAITFUSE_BUILDING)
#define GF_API __attribute__((visibility("default")))
#else
#define GF_API
#endif

typedef enum gf_status {
  GF_OK = 0,
  GF_E_INVALID_ARGUMENT = 1,
  GF_E_SHAPE_MISMATCH = 2,
  GF_E_NUMERIC_DIVERGENCE = 3,
  GF_E_IO = 4,
  GF_E_PARSE = 5,
  GF_E_NON_MONOTONE_TIME = 6,
  GF_E_MISSING_COLUMNS = 7,
  GF_E_EMPTY_INPUT = 8,
  GF_E_CHECKPOINT_MAGIC = 9,
  GF_E_CHECKPOINT_VERSION = 10,
  GF_E_CHECKPOINT_TRUNCATED = 11,
  GF_E_CHECKPOINT_FORMAT = 12,
  GF_E_CONFIG = 13,
  GF_E_STRUCTURE_MISMATCH = 14,
  GF_E_INTERNAL = 99
} gf_status;

typedef struct gf_config gf_config;
typedef struct gf_model gf_model;

// Message of the last failed call on this thread ("" if none).
GF_API const char* gf_last_error(void);
GF_API const char* gf_status_name(gf_status s);
GF_API const char* gf_version(void);

// Progress lines from long-running commands; NULL silences them.
typedef void (*gf_log_fn)(const char* line, void* user);
GF_API void gf_set_log(gf_log_fn fn, void* user);

// Configuration ---------------------------------------------------------

GF_API gf_status gf_config_default(gf_config** out);
GF_API gf_status gf_config_load(const char* path, gf_config** out);
GF_API gf_status gf_config_parse(const char* json_text, gf_config** out);
// Overrides every seed in the config (dataset, model, train, transfer, fusion,
// drift, threat).
GF_API gf_status gf_config_set_seed(gf_config* cfg, uint64_t seed);
// Canonical JSON; release with gf_string_free.
GF_API gf_status gf_config_to_json(const gf_config* cfg, char** out);
GF_API void gf_config_free(gf_config* cfg);
GF_API void gf_string_free(char* s);

// Commands (outputs land in out_dir) ---------------------------------------

GF_API gf_status gf_cmd_synth(const gf_config* cfg, const char* out_dir);
GF_API gf_status gf_cmd_train(const gf_config* cfg, const char* out_dir);
GF_API gf_status gf_cmd_eval(const gf_config* cfg, const char* checkpoint, const char* out_dir);
// source_checkpoint NULL or "": the config's transfer.source, else
// <out_dir>/model.gfck.
GF_API gf_status gf_cmd_transfer(const gf_config* cfg, const char* source_checkpoint,
                                 const char* out_dir);
GF_API gf_status gf_cmd_fuse(const gf_config* cfg, const char* checkpoint, const char* out_dir);
GF_API gf_status gf_cmd_attack(const gf_config* cfg, const char* undefended_checkpoint,
                               const char* defended_checkpoint, const char* out_dir);
GF_API gf_status gf_cmd_profile(const gf_config* cfg, const char* out_dir);

// Models ------------------------------------------------------------------

GF_API gf_status gf_model_load(const char* checkpoint, gf_model** out);
GF_API void gf_model_free(gf_model* m);
GF_API gf_status gf_model_param_count(const gf_model* m, size_t* out);
GF_API gf_status gf_model_embedding_dim(const gf_model* m, size_t* out);
// pixels: one 33x42 spectrogram, row-major. out receives embedding_dim values.
GF_API gf_status gf_model_embed(const gf_model* m, const double* pixels, size_t n_pixels,
                                double* out, size_t out_len);
// Euclidean distance between two embeddings of length n.
GF_API double gf_distance(const double* a, const double* b, size_t n);

#ifdef __cplusplus
}
#endif

#endif
