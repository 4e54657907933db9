#ifndef RWRESNET_H
#define RWRESNET_H

/* C interface to the raw-waveform anti-spoofing pipeline: run configuration,
 * the five subcommand bodies (train / score / eval / gradcheck / synth-data)
 * and direct model handles for embedding the scorer.
 *
 * Every fallible call returns an rwr_status; on failure rwr_last_error()
 * holds a one-line message until the next call on the same thread. Progress
 * logging goes to stderr, machine-readable results to stdout or to the
 * configured output files, which are always written atomically. */

#include <stddef.h>
#include <stdint.h>

/* The shared library is built with hidden visibility; this marks the
 * exported surface. */
#if defined(__GNUC__)
#define RWR_API __attribute__((visibility("default")))
#else
#define RWR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rwr_status {
  RWR_OK = 0,
  RWR_ERR_CONFIG = 1,  /* bad flag/key/value or impossible combination */
  RWR_ERR_DATA = 2,    /* malformed or missing input data */
  RWR_ERR_NUMERIC = 3, /* non-finite loss, failed gradient verification */
  RWR_ERR_INTERNAL = 4 /* unexpected failure inside the library */
} rwr_status;

/* Message of the most recent failure on this thread ("" if none). The
 * pointer stays valid until the next library call on the thread. */
RWR_API const char* rwr_last_error(void);

RWR_API const char* rwr_version(void);

/* ------------------------------------------------------------------ */
/* Run configuration: a flat key=value bag with built-in defaults.     */

typedef struct rwr_config rwr_config;

RWR_API rwr_config* rwr_config_new(void);
RWR_API void rwr_config_free(rwr_config* cfg);

/* Sets one key (e.g. "preset", "cg", "epochs", "train_protocol").
 * Unknown keys and unparsable values are config errors. */
RWR_API rwr_status rwr_config_set(rwr_config* cfg, const char* key, const char* value);

/* Overlays a key=value file ('#' comments) onto the current values. */
RWR_API rwr_status rwr_config_load_file(rwr_config* cfg, const char* path);

/* Cross-field validation (variant name, channel plan, cg | c3, input_len
 * granularity, schedule sanity). */
RWR_API rwr_status rwr_config_validate(const rwr_config* cfg);

/* Full dump, one key=value per line, suitable for echoing or re-loading.
 * Free with rwr_string_free. */
RWR_API char* rwr_config_dump(const rwr_config* cfg);
RWR_API void rwr_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Subcommand bodies.                                                  */

/* Trains per the config (train_protocol+dev_protocol pooled, or synth > 0
 * for generated audio); writes per-epoch checkpoints, best.ckpt and
 * history.csv under checkpoint_dir. */
RWR_API rwr_status rwr_train(const rwr_config* cfg);

/* Scores every trial of eval_protocol with `checkpoint` and writes
 * score_output ("utt_id score" lines, order preserved). */
RWR_API rwr_status rwr_score(const rwr_config* cfg);

/* Joins score_file to eval_protocol labels, computes EER and min t-DCF with
 * the cost_file operating point, prints the CSV report to stdout and writes
 * it to report_output. Output pointers may be NULL. */
RWR_API rwr_status rwr_eval(const rwr_config* cfg, double* eer, double* min_tdcf);

/* Finite-difference verification of every layer's backward pass; prints one
 * line per layer to stdout. fault_inject != 0 deliberately perturbs one
 * analytic gradient (test hook proving the check can fail). */
RWR_API rwr_status rwr_gradcheck(int seeds_per_layer, double fault_inject);

/* Writes synth (per class) WAV files of synth_len samples plus protocol.txt
 * into out_dir. */
RWR_API rwr_status rwr_synth_data(const rwr_config* cfg);

/* ------------------------------------------------------------------ */
/* Model handles.                                                      */

typedef struct rwr_model rwr_model;

/* NULL on failure (see rwr_last_error). */
RWR_API rwr_model* rwr_model_load(const char* path);

/* Fresh model from the config's architecture keys, Kaiming-initialized. */
RWR_API rwr_model* rwr_model_create(const rwr_config* cfg, uint64_t seed);

RWR_API void rwr_model_free(rwr_model* model);

RWR_API rwr_status rwr_model_save(rwr_model* model, const char* path);

RWR_API int64_t rwr_model_param_count(const rwr_model* model);
RWR_API int64_t rwr_model_input_len(const rwr_model* model);

/* Detection score of one utterance (samples in [-1, 1]; shorter input is
 * tiled, longer is cut). Higher means more bonafide. */
RWR_API rwr_status rwr_model_score(rwr_model* model, const float* samples,
                           int64_t n_samples, double* score);

#ifdef __cplusplus
}
#endif

#endif /* RWRESNET_H */
