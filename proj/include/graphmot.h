#ifndef GRAPHMOT_H
#define GRAPHMOT_H

/* C interface to the graphmot engine. All functions return a gmot_status;
 * on failure gmot_last_error() holds a message for the calling thread.
 * Handles are not thread-safe; use one per thread or lock externally. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gmot_status {
  GMOT_OK = 0,
  GMOT_ERROR_INVALID_ARGUMENT = 1,
  GMOT_ERROR_PARSE = 2,
  GMOT_ERROR_IO = 3,
  GMOT_ERROR_NUMERIC = 4,
  GMOT_ERROR_UNKNOWN = 5
} gmot_status;

/* Semantic version of the library. */
const char* gmot_version(void);

/* Message of this thread's most recent failing call; empty after success. */
const char* gmot_last_error(void);

/* ---- configuration ------------------------------------------------- */

/* Key-value settings; see the config reference for the registered keys. */
typedef struct gmot_config gmot_config;

/* Defaults for every key; NULL only on allocation failure. */
gmot_config* gmot_config_create(void);
void gmot_config_destroy(gmot_config* cfg);

/* Overlays a "key = value" file on top of the current settings. */
gmot_status gmot_config_load_file(gmot_config* cfg, const char* path);

/* Sets one registered key. Unknown keys are errors. */
gmot_status gmot_config_set(gmot_config* cfg, const char* key,
                            const char* value);

/* Copies the value into buffer (NUL terminated). Fails when the key is
 * unknown or the buffer is too small. */
gmot_status gmot_config_get(const gmot_config* cfg, const char* key,
                            char* buffer, size_t buffer_size);

/* ---- batch runs ----------------------------------------------------- */
/* Each run writes its artifacts plus manifest.txt under output_dir. */

/* Generates the configured synthetic scenario (label/ det/ calib/ feat/). */
gmot_status gmot_run_synth(const gmot_config* cfg, const char* output_dir);

/* Trains on the sequences under data_dir; writes checkpoint.gnnw and
 * train_log.txt. init_checkpoint may be NULL to start fresh. final_loss
 * (nullable) receives the last epoch's mean loss. */
gmot_status gmot_run_train(const gmot_config* cfg, const char* data_dir,
                           const char* init_checkpoint, const char* output_dir,
                           double* final_loss);

/* Tracks every sequence under data_dir; writes results/ID.txt files.
 * checkpoint may be NULL for the non-learned matchers. */
gmot_status gmot_run_track(const gmot_config* cfg, const char* data_dir,
                           const char* checkpoint, const char* output_dir);

typedef struct gmot_metrics {
  double samota, amota, amotp; /* ratios in [0, 1] */
  double mota, motp;
  long long ids, frag, fp, fn, gt;
} gmot_metrics;

/* Scores result files against ground truth; writes report.txt/report.kv.
 * gt_dir may be a label directory or a root with label/; result_dir may be
 * a results directory or a run output with results/. metrics is nullable. */
gmot_status gmot_run_eval(const gmot_config* cfg, const char* gt_dir,
                          const char* result_dir, const char* output_dir,
                          gmot_metrics* metrics);

/* Compares the full model's analytic gradients against central finite
 * differences on a seeded problem. Returns GMOT_ERROR_NUMERIC when the
 * worst relative error exceeds tolerance. max_rel_error is nullable. */
gmot_status gmot_run_gradcheck(const gmot_config* cfg, const char* output_dir,
                               double tolerance, double* max_rel_error);

typedef struct gmot_bench_stats {
  double iou3d_per_sec;
  double assignments_per_sec;
  double forwards_per_sec;
} gmot_bench_stats;

/* Times the three hot kernels; writes bench.txt. stats is nullable. */
gmot_status gmot_run_bench(const gmot_config* cfg, const char* output_dir,
                           gmot_bench_stats* stats);

/* ---- streaming tracker ---------------------------------------------- */

typedef struct gmot_tracker gmot_tracker;

typedef struct gmot_detection {
  /* 3D box in camera coordinates: x right, y down, z forward; (x, y, z) is
   * the bottom-face center, yaw rotates about the vertical axis. */
  double x, y, z;
  double h, w, l;
  double yaw;
  /* 2D image box; pass all zeros when unknown. */
  double left, top, right, bottom;
  double score;
  /* Appearance embeddings; NULL means absent (requires feat.provider=zeros
   * or the matching use flag off). */
  const float* app2d;
  size_t app2d_len;
  const float* app3d;
  size_t app3d_len;
} gmot_detection;

typedef struct gmot_track {
  int track_id;
  double x, y, z;
  double h, w, l;
  double yaw;
  double left, top, right, bottom;
  double score;
} gmot_track;

/* Fresh tracker state for one sequence. checkpoint may be NULL for the
 * non-learned matchers. */
gmot_status gmot_tracker_create(const gmot_config* cfg, const char* checkpoint,
                                gmot_tracker** out);
void gmot_tracker_destroy(gmot_tracker* tracker);

/* Advances one frame (frames must be fed in increasing order) and returns
 * the confirmed tracks of that frame. *tracks points into the handle and
 * stays valid until the next call on it. */
gmot_status gmot_tracker_step(gmot_tracker* tracker, int frame,
                              const gmot_detection* detections, size_t count,
                              const gmot_track** tracks, size_t* track_count);

/* ---- stateless helpers ----------------------------------------------- */

/* Boxes as (left, top, right, bottom); empty or inverted boxes overlap 0. */
double gmot_iou2d(const double a[4], const double b[4]);

/* Overlap of the two oriented 3D boxes (uses the box fields only). */
double gmot_iou3d(const gmot_detection* a, const gmot_detection* b);

/* Minimal-cost assignment of a row-major rows x cols matrix. row_to_col
 * must hold rows entries; unassigned rows get -1. */
gmot_status gmot_solve_assignment(const double* cost, int rows, int cols,
                                  int* row_to_col);

#ifdef __cplusplus
}
#endif

#endif /* GRAPHMOT_H */
