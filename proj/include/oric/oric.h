/* SPDX-License-Identifier: Apache-2.0 */
#ifndef ORIC_ORIC_H
#define ORIC_ORIC_H

#include <stddef.h>
#include <stdint.h>

#if defined(ORIC_BUILDING_LIBRARY)
#define ORIC_API __attribute__((visibility("default")))
#else
#define ORIC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status. On failure the message is available
 * from oric_last_error() on the same thread until the next failing call. */
typedef enum oric_status {
  ORIC_OK = 0,
  ORIC_ERR_INVALID_ARGUMENT = 1,
  ORIC_ERR_VALIDATION = 2,
  ORIC_ERR_PARSE = 3,
  ORIC_ERR_IO = 4,
  ORIC_ERR_UNDEFINED_METRIC = 5,
  ORIC_ERR_TRAINING = 6,
  ORIC_ERR_INTERNAL = 7
} oric_status;

typedef struct oric_dataset oric_dataset;
typedef struct oric_reward_set oric_reward_set;
typedef struct oric_model oric_model;

typedef enum oric_detector { ORIC_WEAK = 0, ORIC_STRONG = 1 } oric_detector;

typedef struct oric_reward {
  int64_t image_id;
  double ori;
  double oric;
  double moric;
  double estimate;
  int has_estimate;
  double oric_unscaled;
  int no_ground_truth;
} oric_reward;

ORIC_API const char* oric_version(void);
ORIC_API const char* oric_last_error(void);
ORIC_API const char* oric_status_name(oric_status status);
/* Frees strings returned through char** out-parameters. */
ORIC_API void oric_string_free(char* str);

/* ---- datasets ---- */

/* strong_path may be NULL or empty; the strong detections are then empty. */
ORIC_API oric_status oric_dataset_load(const char* gt_path, const char* weak_path, const char* strong_path,
                                       oric_dataset** out);
ORIC_API oric_status oric_dataset_parse(const char* gt_json, const char* weak_json, const char* strong_json,
                                        oric_dataset** out);
/* warnings_json (optional) receives a JSON array of profile warnings. */
ORIC_API oric_status oric_dataset_synth(const char* spec_json, oric_dataset** out, char** warnings_json);
ORIC_API oric_status oric_dataset_save(const oric_dataset* dataset, const char* gt_path, const char* weak_path,
                                       const char* strong_path);
ORIC_API void oric_dataset_free(oric_dataset* dataset);
ORIC_API size_t oric_dataset_size(const oric_dataset* dataset);
ORIC_API size_t oric_dataset_num_classes(const oric_dataset* dataset);
ORIC_API oric_status oric_dataset_image_id(const oric_dataset* dataset, size_t index, int64_t* out);

/* JSON report: {"map": number|null, "classes": [{"class_id", "category_id",
 * "name", "num_ground_truth", "num_detections", "ap": number|null}]}. */
ORIC_API oric_status oric_evaluate(const oric_dataset* dataset, oric_detector detector, double iou_threshold,
                                   char** report_json);

/* ---- rewards ---- */

ORIC_API oric_status oric_rewards_compute(const oric_dataset* dataset, size_t context_size, uint64_t context_seed,
                                          unsigned threads, oric_reward_set** out);
ORIC_API oric_status oric_rewards_load(const char* path, oric_reward_set** out);
ORIC_API oric_status oric_rewards_save(const oric_reward_set* rewards, const char* path);
/* The reward file contents (NDJSON) as a string. */
ORIC_API oric_status oric_rewards_to_ndjson(const oric_reward_set* rewards, char** ndjson);
ORIC_API void oric_rewards_free(oric_reward_set* rewards);
ORIC_API size_t oric_rewards_size(const oric_reward_set* rewards);
ORIC_API oric_status oric_rewards_get(const oric_reward_set* rewards, size_t index, oric_reward* out);
/* Attaches estimates, one per record, in record order. */
ORIC_API oric_status oric_rewards_set_estimates(oric_reward_set* rewards, const double* estimates, size_t count);

/* ---- estimator ---- */

/* Trains on every image of the dataset. rewards must hold one record per
 * image (matched by image id). train_config_json may be NULL for defaults. */
ORIC_API oric_status oric_model_train(const oric_dataset* dataset, const oric_reward_set* rewards,
                                      const char* train_config_json, oric_model** out);
ORIC_API oric_status oric_model_load(const char* path, oric_model** out);
ORIC_API oric_status oric_model_save(const oric_model* model, const char* path);
ORIC_API void oric_model_free(oric_model* model);
/* Writes one estimate per dataset image into out[0..count). */
ORIC_API oric_status oric_model_predict(const oric_model* model, const oric_dataset* dataset, double* out,
                                        size_t count);

/* K-fold cross-validation. out receives whole-dataset oracle rewards with the
 * out-of-fold estimates attached; report_json (optional) receives
 * {"folds", "spearman", "fold_sizes": [...]}. */
ORIC_API oric_status oric_cross_validate(const oric_dataset* dataset, size_t context_size, uint64_t context_seed,
                                         const char* train_config_json, size_t folds, unsigned threads,
                                         oric_reward_set** out, char** report_json);

/* ---- experiments ---- */

/* Reads and validates an experiment config file. config_json receives the
 * normalized config with dataset paths resolved against the file's directory.
 * The dataset section may be absent; the experiment calls check it. */
ORIC_API oric_status oric_config_load(const char* path, char** config_json);

/* Runs the policy sweep described by an experiment config. When dataset is
 * NULL the config's dataset files or synth spec are used. Outputs are written
 * to the config's output_dir when it is non-empty. sweep_csv (optional)
 * receives the results table. */
ORIC_API oric_status oric_sweep(const char* config_json, const oric_dataset* dataset, char** sweep_csv);

/* Error breakdown CSV (detector_config, category, map_reduction) for the
 * weak and strong detectors and both oracle plans. */
ORIC_API oric_status oric_error_report(const char* config_json, const oric_dataset* dataset, char** csv);

/* Same breakdown for one explicit plan, named `name`. */
ORIC_API oric_status oric_error_report_plan(const oric_dataset* dataset, const int64_t* offloaded_ids, size_t count,
                                            const char* name, char** csv);

ORIC_API oric_status oric_grid_search(const char* config_json, const oric_dataset* dataset, char** grid_csv);

#ifdef __cplusplus
}
#endif

#endif /* ORIC_ORIC_H */
