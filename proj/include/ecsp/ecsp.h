/*
 * Copyright 2026 The ECSP Authors
 * SPDX-License-Identifier: Apache-2.0
 */

/*
 * C interface to the ECSP engine: pseudo-label retrieval, prompt rendering,
 * TTA planning, late-fusion ensembling and scoring.
 *
 * Every function returns an ecsp_status. On failure, ecsp_last_error() holds a
 * one-line message for the calling thread until its next failing call.
 * Handles are opaque and must be released with their matching _free function.
 * Strings returned through char** are owned by the caller (ecsp_string_free).
 */

#ifndef ECSP_ECSP_H
#define ECSP_ECSP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(ECSP_BUILDING_LIBRARY)
#    define ECSP_API __declspec(dllexport)
#  else
#    define ECSP_API __declspec(dllimport)
#  endif
#else
#  define ECSP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ecsp_status {
    ECSP_OK = 0,
    ECSP_ERR_INVALID_ARGUMENT = 1,
    ECSP_ERR_IO = 2,
    ECSP_ERR_PARSE = 3,
    ECSP_ERR_VALIDATION = 4,
    ECSP_ERR_DUPLICATE_ID = 5,
    ECSP_ERR_UNKNOWN_EMOTION = 6,
    ECSP_ERR_DIMENSION_MISMATCH = 7,
    ECSP_ERR_ZERO_VECTOR = 8,
    ECSP_ERR_CORRUPT_FILE = 9,
    ECSP_ERR_UNLABELED_POOL_RECORD = 10,
    ECSP_ERR_EMPTY_POOL = 11,
    ECSP_ERR_MISSING_LANGUAGE_INDEX = 12,
    ECSP_ERR_EMPTY_AFTER_EXCLUSION = 13,
    ECSP_ERR_ID_MISMATCH = 14,
    ECSP_ERR_INVALID_SIZE = 15,
    ECSP_ERR_SHAPE_MISMATCH = 16,
    ECSP_ERR_CROP_OUT_OF_BOUNDS = 17,
    ECSP_ERR_MIXED_SAMPLE = 18,
    ECSP_ERR_DUPLICATE_VARIANT = 19,
    ECSP_ERR_MISSING_BACKEND = 20,
    ECSP_ERR_INVALID_VECTOR = 21,
    ECSP_ERR_EMPTY_INPUT = 22,
    ECSP_ERR_BAD_ROW = 23,
    ECSP_ERR_NOT_ON_SIMPLEX = 24,
    ECSP_ERR_TIMEOUT = 25,
    ECSP_ERR_PROTOCOL = 26,
    ECSP_ERR_INTERNAL = 99
} ecsp_status;

typedef enum ecsp_annotation_format {
    ECSP_FORMAT_AUTO = 0, /* by file extension: .csv is CSV, anything else JSONL */
    ECSP_FORMAT_JSONL = 1,
    ECSP_FORMAT_CSV = 2
} ecsp_annotation_format;

typedef struct ecsp_dataset ecsp_dataset;
typedef struct ecsp_embeddings ecsp_embeddings;
typedef struct ecsp_index ecsp_index;

ECSP_API const char* ecsp_version(void);
ECSP_API const char* ecsp_status_name(ecsp_status status);
ECSP_API const char* ecsp_last_error(void);
ECSP_API void ecsp_string_free(char* s);

/* ---- emotion vocabulary ------------------------------------------------ */

ECSP_API size_t ecsp_emotion_count(void);
/* NULL for an out-of-range index. */
ECSP_API const char* ecsp_emotion_name(size_t index);
ECSP_API ecsp_status ecsp_emotion_from_name(const char* name, size_t* index);

ECSP_API ecsp_status ecsp_cosine_similarity(const double* a, const double* b, size_t dim, double* out);

/* ---- datasets and embeddings ------------------------------------------- */

ECSP_API ecsp_status ecsp_dataset_load(const char* path, ecsp_annotation_format format, ecsp_dataset** out);
ECSP_API void ecsp_dataset_free(ecsp_dataset* dataset);
ECSP_API size_t ecsp_dataset_size(const ecsp_dataset* dataset);
ECSP_API ecsp_status ecsp_dataset_write_jsonl(const ecsp_dataset* dataset, const char* path);

/* Text (JSONL) or packed binary; the format is detected from the file. */
ECSP_API ecsp_status ecsp_embeddings_load(const char* path, ecsp_embeddings** out);
ECSP_API void ecsp_embeddings_free(ecsp_embeddings* embeddings);
ECSP_API size_t ecsp_embeddings_count(const ecsp_embeddings* embeddings);
ECSP_API ecsp_status ecsp_embeddings_dims(const ecsp_embeddings* embeddings, size_t* image_dim, size_t* text_dim);
ECSP_API ecsp_status ecsp_embeddings_write_binary(const ecsp_embeddings* embeddings, const char* path, uint64_t* bytes);
ECSP_API ecsp_status ecsp_embeddings_write_jsonl(const ecsp_embeddings* embeddings, const char* path);

/* Cross-checks embedding ids and dimensions against the dataset. */
ECSP_API ecsp_status ecsp_validate(const ecsp_dataset* dataset, const ecsp_embeddings* embeddings);

/* ---- retrieval index --------------------------------------------------- */

/* Builds one index per language from the train split. */
ECSP_API ecsp_status ecsp_index_build(const ecsp_dataset* dataset, const ecsp_embeddings* embeddings,
                                      int normalize_parts, ecsp_index** out);
ECSP_API ecsp_status ecsp_index_load(const char* path, ecsp_index** out);
ECSP_API ecsp_status ecsp_index_save(const ecsp_index* index, const char* path);
ECSP_API void ecsp_index_free(ecsp_index* index);
ECSP_API size_t ecsp_index_language_count(const ecsp_index* index);
/* `name` stays valid for the lifetime of the index. */
ECSP_API ecsp_status ecsp_index_language(const ecsp_index* index, size_t i, const char** name, size_t* size);

/* Single query. `exclude_id` may be NULL. Writes one retrieval-outcome JSON line. */
ECSP_API ecsp_status ecsp_retrieve_one(const ecsp_index* index, const char* query_id, const char* language,
                                       const float* joint, size_t dim, size_t k, double eta, const char* exclude_id,
                                       char** outcome_json);

/* ---- pipeline stages --------------------------------------------------- */

typedef struct ecsp_retrieve_options {
    size_t k;          /* default 1 */
    double eta;        /* default 0.75 */
    int exclude_self;  /* default 1: a query never retrieves its own id */
    const char* split; /* "train" | "val" | "test" | "all"; default "all" */
} ecsp_retrieve_options;

ECSP_API void ecsp_retrieve_options_init(ecsp_retrieve_options* options);
ECSP_API ecsp_status ecsp_retrieve_to_file(const ecsp_index* index, const ecsp_dataset* dataset,
                                           const ecsp_embeddings* embeddings, const ecsp_retrieve_options* options,
                                           const char* out_path, size_t* written);

typedef struct ecsp_prompt_options {
    const char* variant;     /* "sp" | "pl" | "ecsp" | "raw"; default "ecsp" */
    size_t max_tokens;       /* 0 disables truncation (default) */
    int duplicate_utterance; /* default 0 */
    const char* split;       /* default "all" */
} ecsp_prompt_options;

ECSP_API void ecsp_prompt_options_init(ecsp_prompt_options* options);
/* `retrieval_path` may be NULL for the sp and raw variants. */
ECSP_API ecsp_status ecsp_prompts_to_file(const ecsp_dataset* dataset, const char* retrieval_path,
                                          const ecsp_prompt_options* options, const char* out_path, size_t* written);

typedef struct ecsp_tta_options {
    double crop_fraction;   /* default 0.875 */
    uint64_t seed;          /* default 0 */
    uint32_t target_width;  /* default 768 */
    uint32_t target_height; /* default 768 */
    const char* split;      /* default "all" */
} ecsp_tta_options;

ECSP_API void ecsp_tta_options_init(ecsp_tta_options* options);
ECSP_API ecsp_status ecsp_tta_plans_to_file(const ecsp_dataset* dataset, const ecsp_tta_options* options,
                                            const char* out_path, size_t* written);

/* `ensemble_config_path` may be NULL for equal weights over the backends found. */
ECSP_API ecsp_status ecsp_fuse_files(const char* const* probability_paths, size_t count,
                                     const char* ensemble_config_path, int tta, const char* out_path, size_t* written);

typedef struct ecsp_score_options {
    const char* average;          /* "macro" | "micro" | "weighted"; default "macro" */
    int by_language;              /* default 0 */
    const char* method;           /* row label; default "ensemble" */
    const char* scores_json_path; /* optional scores JSON output */
} ecsp_score_options;

ECSP_API void ecsp_score_options_init(ecsp_score_options* options);
ECSP_API ecsp_status ecsp_score_file(const char* predictions_path, const ecsp_dataset* dataset,
                                     const ecsp_score_options* options, char** table);

/* ---- full pipeline ----------------------------------------------------- */

/* Extra `key = value` settings applied after the config file, in order. */
typedef struct ecsp_setting {
    const char* key;
    const char* value;
} ecsp_setting;

/* `summary` (optional) receives the score table, or an empty string when unscored. */
ECSP_API ecsp_status ecsp_run(const char* config_path, const ecsp_setting* overrides, size_t override_count,
                              char** summary);

#ifdef __cplusplus
}
#endif

#endif /* ECSP_ECSP_H */
