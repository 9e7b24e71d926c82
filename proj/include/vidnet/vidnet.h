// Copyright 2026 The VIDNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* C interface to the VIDNet video inpainting detector.
 *
 * Functions return a vidnet_status; on failure vidnet_last_error() describes
 * the problem (per thread, valid until the next call on that thread).
 * Strings returned through char** out-parameters are owned by the caller and
 * released with vidnet_string_free().
 *
 * config_json arguments hold a run configuration document with optional
 * "synth", "model", "train" and "eval" sections; NULL means all defaults.
 * Relative output directories are placed under $VIDNET_OUTPUT_ROOT when set.
 */

#ifndef VIDNET_VIDNET_H_
#define VIDNET_VIDNET_H_

#include <stddef.h>

#if defined(_WIN32)
#define VIDNET_API __declspec(dllexport)
#else
#define VIDNET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vidnet_status {
  VIDNET_OK = 0,
  VIDNET_ERR_ARGUMENT = 1,
  VIDNET_ERR_CONFIG = 2,
  VIDNET_ERR_IO = 3,
  VIDNET_ERR_UNDEFINED_METRIC = 4,
  VIDNET_ERR_DIVERGED = 5,
  VIDNET_ERR_INTERNAL = 6
} vidnet_status;

typedef struct vidnet_model vidnet_model;

VIDNET_API const char* vidnet_version(void);
VIDNET_API const char* vidnet_last_error(void);
VIDNET_API const char* vidnet_status_name(vidnet_status status);
VIDNET_API void vidnet_string_free(char* s);

/* Writes the synthetic dataset (video directories plus manifest.json) and
 * resolved_config.json into out_dir. */
VIDNET_API vidnet_status vidnet_synth(const char* config_json, const char* out_dir);

/* One ELA PNG per frame of video_dir, same file names. */
VIDNET_API vidnet_status vidnet_ela_video(const char* video_dir, const char* out_dir,
                                          int quality, int* frames_written);

VIDNET_API vidnet_status vidnet_model_create(const char* config_json,
                                             vidnet_model** out);
/* A stub that returns each video's ground-truth masks as its prediction. */
VIDNET_API vidnet_status vidnet_model_create_gt_echo(vidnet_model** out);
/* checkpoint is the path without the .bin / .json suffix. */
VIDNET_API vidnet_status vidnet_model_load(const char* checkpoint, vidnet_model** out);
VIDNET_API vidnet_status vidnet_model_save(const vidnet_model* model,
                                           const char* checkpoint);
VIDNET_API vidnet_status vidnet_model_param_count(const vidnet_model* model,
                                                  size_t* count);
VIDNET_API void vidnet_model_free(vidnet_model* model);

/* Trains on data_dir. Writes out_dir/checkpoint.{bin,json},
 * out_dir/train_log.jsonl and out_dir/resolved_config.json. resume may be
 * NULL or a checkpoint path to continue from. summary_json (optional)
 * receives the epoch history. */
VIDNET_API vidnet_status vidnet_train(const char* config_json, const char* data_dir,
                                      const char* out_dir, const char* resume,
                                      char** summary_json);

/* Evaluates on data_dir; pristine videos listed in its manifest become AUC
 * negatives. Writes out_dir/metrics.json when out_dir is not NULL. */
VIDNET_API vidnet_status vidnet_evaluate(vidnet_model* model, const char* config_json,
                                         const char* data_dir, const char* out_dir,
                                         char** report_json);

/* kinds is a comma-separated list such as "jpeg90,jpeg70,snr30,snr20"; NULL
 * uses eval.perturbations from the config. Writes one
 * out_dir/perturb_<kind>.json per kind. */
VIDNET_API vidnet_status vidnet_perturb(vidnet_model* model, const char* config_json,
                                        const char* data_dir, const char* kinds,
                                        const char* out_dir, char** reports_json);

/* Writes out_dir/prob/<frame>.png (probability x 255) and
 * out_dir/overlay/<frame>.png for every frame of video_dir. */
VIDNET_API vidnet_status vidnet_predict(vidnet_model* model, const char* config_json,
                                        const char* video_dir, const char* out_dir,
                                        int* frames_written);

#ifdef __cplusplus
}
#endif

#endif  /* VIDNET_VIDNET_H_ */
