/* C interface to the correlated-feature selection library.
 *
 * Every call returns a tf_status. On failure the message for the calling
 * thread is available from tf_last_error() until the next call on that
 * thread. Objects are opaque and owned by the caller; release them with the
 * matching *_destroy function. Strings returned through const char** stay
 * valid for the lifetime of the object they came from. */
#ifndef TANGLED_TANGLED_H
#define TANGLED_TANGLED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TANGLED_BUILDING)
#    define TF_API __declspec(dllexport)
#  else
#    define TF_API __declspec(dllimport)
#  endif
#else
#  define TF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tf_status {
  TF_OK = 0,
  TF_ERR_CONFIG = 1,
  TF_ERR_DATA = 2,
  TF_ERR_INTERNAL = 3
} tf_status;

typedef struct tf_config tf_config;
typedef struct tf_dataset tf_dataset;
typedef struct tf_result tf_result;

TF_API const char* tf_version(void);
TF_API const char* tf_last_error(void);

/* Configuration: flat key=value settings (see tf_config_keys). */
TF_API tf_status tf_config_create(tf_config** out);
TF_API void tf_config_destroy(tf_config* config);
TF_API tf_status tf_config_set(tf_config* config, const char* key, const char* value);
TF_API tf_status tf_config_load_file(tf_config* config, const char* path);
/* Resolved settings as JSON; valid until the next call on this config. */
TF_API tf_status tf_config_json(tf_config* config, const char** json);
/* Newline-separated list of accepted keys. */
TF_API const char* tf_config_keys(void);

/* Datasets. */
TF_API tf_status tf_dataset_load(const tf_config* config, tf_dataset** out);
TF_API tf_status tf_dataset_from_arrays(const double* values, size_t rows, size_t cols,
                                        const char* const* names, const double* phi,
                                        const double* psi, tf_dataset** out);
TF_API void tf_dataset_destroy(tf_dataset* dataset);
TF_API size_t tf_dataset_rows(const tf_dataset* dataset);
TF_API size_t tf_dataset_cols(const tf_dataset* dataset);

/* Commands. Each produces a result holding named text artifacts (file name
 * plus contents) and a human-readable summary. */
TF_API tf_status tf_select(const tf_config* config, const tf_dataset* dataset, tf_result** out);
TF_API tf_status tf_stability(const tf_config* config, const tf_dataset* dataset,
                              tf_result** out);
TF_API tf_status tf_evaluate(const tf_config* config, const tf_dataset* dataset,
                             const char* selection_json, tf_result** out);
TF_API tf_status tf_synth(const tf_config* config, tf_result** out);

TF_API void tf_result_destroy(tf_result* result);
TF_API size_t tf_result_artifact_count(const tf_result* result);
TF_API tf_status tf_result_artifact(const tf_result* result, size_t index, const char** name,
                                    const char** content, size_t* length);
TF_API const char* tf_result_summary(const tf_result* result);
/* Selected feature indices for one angle of a select result: writes up to
 * capacity indices and stores the full count in *count. */
TF_API tf_status tf_result_selected(const tf_result* result, size_t angle_index, size_t* indices,
                                    size_t capacity, size_t* count);

#ifdef __cplusplus
}
#endif

#endif
