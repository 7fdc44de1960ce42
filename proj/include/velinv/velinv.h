/*
 * velinv C API.
 *
 * All objects are opaque handles created and destroyed through this header.
 * Every fallible call returns a velinv_status; on failure the message is
 * available from velinv_last_error() on the calling thread.
 */
#ifndef VELINV_VELINV_H
#define VELINV_VELINV_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(VELINV_BUILDING_LIBRARY)
#    define VELINV_API __declspec(dllexport)
#  else
#    define VELINV_API __declspec(dllimport)
#  endif
#elif defined(__GNUC__) && __GNUC__ >= 4
#  define VELINV_API __attribute__((visibility("default")))
#else
#  define VELINV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes of the command-line tool. */
typedef enum velinv_status {
  VELINV_OK = 0,
  VELINV_ERR_INTERNAL = 1,
  VELINV_ERR_CONFIG = 2,
  VELINV_ERR_DATA = 3,
  VELINV_ERR_NUMERICAL = 4
} velinv_status;

typedef struct velinv_config velinv_config;
typedef struct velinv_text velinv_text;  /* owned UTF-8 string, usually JSON */
typedef struct velinv_model velinv_model;
typedef struct velinv_record velinv_record;

VELINV_API const char* velinv_version(void);
/* Message of the last failed call on this thread; empty if none. */
VELINV_API const char* velinv_last_error(void);
/* "config", "data", "numerical", "internal" or "ok". */
VELINV_API const char* velinv_status_name(velinv_status status);
VELINV_API void velinv_set_verbosity(int level);

VELINV_API const char* velinv_text_get(const velinv_text* text);
VELINV_API void velinv_text_destroy(velinv_text* text);

/* ---- configuration ---- */
VELINV_API velinv_status velinv_config_create(const char* preset, velinv_config** out);
VELINV_API void velinv_config_destroy(velinv_config* cfg);
VELINV_API velinv_status velinv_config_load_file(velinv_config* cfg, const char* path);
VELINV_API velinv_status velinv_config_set(velinv_config* cfg, const char* key, const char* value);
VELINV_API velinv_status velinv_config_validate(const velinv_config* cfg);
VELINV_API velinv_status velinv_config_dump(const velinv_config* cfg, velinv_text** out);
/* Newline-separated list of every settable key. */
VELINV_API velinv_status velinv_config_keys(velinv_text** out);
/* Preset named on a file's top-level `preset = ...` line; empty text if none. */
VELINV_API velinv_status velinv_config_file_preset(const char* path, velinv_text** out);

/* ---- data handles ---- */
VELINV_API velinv_status velinv_model_load(const char* path, velinv_model** out);
VELINV_API void velinv_model_destroy(velinv_model* model);
VELINV_API void velinv_model_shape(const velinv_model* model, int* nx, int* ny, double* dx, double* dy);
/* Copies nx*ny speeds (row-major, depth rows) into buffer of `capacity` floats. */
VELINV_API velinv_status velinv_model_copy(const velinv_model* model, float* buffer, size_t capacity);

VELINV_API velinv_status velinv_record_load(const char* path, velinv_record** out);
VELINV_API velinv_status velinv_simulate_model(const velinv_config* cfg, const velinv_model* model,
                                               velinv_record** out);
VELINV_API void velinv_record_destroy(velinv_record* record);
VELINV_API void velinv_record_shape(const velinv_record* record, int* shots, int* receivers, int* samples);
/* Copies one shot (receivers x samples, row-major). */
VELINV_API velinv_status velinv_record_copy_shot(const velinv_record* record, int shot, float* buffer,
                                                 size_t capacity);

/* ---- commands; each returns a JSON summary ---- */
VELINV_API velinv_status velinv_gen(const velinv_config* cfg, velinv_text** out);
VELINV_API velinv_status velinv_simulate(const velinv_config* cfg, const char* model_path, const char* output_path,
                                         int snapshots, int snapshot_shot, velinv_text** out);
VELINV_API velinv_status velinv_train(const velinv_config* cfg, const char* checkpoint_path, int untrained,
                                      velinv_text** out);
VELINV_API velinv_status velinv_eval(const velinv_config* cfg, const char* checkpoint_path, const char* split,
                                     const char* output_path, velinv_text** out);
VELINV_API velinv_status velinv_ablate(const velinv_config* cfg, velinv_text** out);
/* Any pointer may be NULL and any count 0 when that input is not wanted. */
VELINV_API velinv_status velinv_render(const velinv_config* cfg, const char* out_dir, const char* const* models,
                                       size_t n_models, const char* sample, const char* const* checkpoints,
                                       size_t n_checkpoints, const char* snapshots, const char* summary,
                                       int profiles, velinv_text** out);

#ifdef __cplusplus
}
#endif

#endif /* VELINV_VELINV_H */
