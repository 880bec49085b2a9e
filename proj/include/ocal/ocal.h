#ifndef OCAL_OCAL_H
#define OCAL_OCAL_H

#include <stddef.h>
#include <stdint.h>

#if defined(OCAL_BUILDING_LIBRARY)
#define OCAL_API __attribute__((visibility("default")))
#else
#define OCAL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ocal_status {
  OCAL_OK = 0,
  OCAL_ERR_INVALID_ARGUMENT = 1,
  OCAL_ERR_IO = 2,
  OCAL_ERR_PARSE = 3,
  OCAL_ERR_INFEASIBLE = 4,
  OCAL_ERR_SOLVER = 5,
  OCAL_ERR_UNSUPPORTED = 6,
  OCAL_ERR_INTERNAL = 7
} ocal_status;

/* Label status codes used by fit. */
enum { OCAL_UNLABELED = 0, OCAL_LABELED_INLIER = 1, OCAL_LABELED_OUTLIER = 2 };

/* Flags for ocal_grid_run. */
enum { OCAL_RUN_AUDIT = 1, OCAL_RUN_TIMING = 2 };

typedef struct ocal_dataset ocal_dataset;
typedef struct ocal_model ocal_model;
typedef struct ocal_grid ocal_grid;

/* Message of the last failed call on this thread; empty after success. */
OCAL_API const char* ocal_last_error(void);
OCAL_API const char* ocal_version(void);
OCAL_API const char* ocal_status_name(ocal_status s);

/* Strings returned through char** are owned by the caller. */
OCAL_API void ocal_string_free(char* s);

/* ---- datasets ---- */

/* CSV with header; last column is the label (inlier/outlier or 0/1). Rows are
 * min-max normalized and deduplicated. */
OCAL_API ocal_status ocal_dataset_load_csv(const char* path, ocal_dataset** out);
/* Row-major n x m values; labels[i] is 1 for outlier, 0 for inlier. Used as given. */
OCAL_API ocal_status ocal_dataset_from_arrays(const double* values, const int* labels, size_t n, size_t m,
                                              ocal_dataset** out);
OCAL_API ocal_status ocal_dataset_blob(size_t inliers, size_t outliers, size_t dims, uint64_t seed,
                                       ocal_dataset** out);
OCAL_API ocal_status ocal_dataset_shape(const ocal_dataset* d, size_t* n, size_t* m);
/* Copies n*m values (row-major) and n labels. Either pointer may be NULL. */
OCAL_API ocal_status ocal_dataset_copy(const ocal_dataset* d, double* values, int* labels);
OCAL_API void ocal_dataset_free(ocal_dataset* d);

/* ---- models ---- */

typedef struct ocal_fit_options {
  const char* learner; /* "svdd", "svddneg", "ssad" */
  double gamma;        /* <= 0 selects Scott's rule */
  double c1;           /* <= 0 selects 1 / (n * outlier_fraction) */
  double c2;           /* <= 0 uses c1 */
  double kappa;
  double outlier_fraction;
  double tolerance;
  size_t max_steps;
} ocal_fit_options;

OCAL_API void ocal_fit_options_init(ocal_fit_options* o);

/* Fits on rows train_idx[0..n_train) of d. status may be NULL (all unlabeled);
 * otherwise it holds one OCAL_UNLABELED / OCAL_LABELED_* code per training row. */
OCAL_API ocal_status ocal_model_fit(const ocal_dataset* d, const size_t* train_idx, size_t n_train,
                                    const int* status, const ocal_fit_options* opts, ocal_model** out);
/* f(x) = distance to center minus radius; positive means outlier. */
OCAL_API ocal_status ocal_model_decision(const ocal_model* m, const double* x, size_t dims, double* f);
OCAL_API ocal_status ocal_model_info(const ocal_model* m, double* radius_sq, double* gamma, double* kkt_residual);
/* JSON dump of duals, signs, radius, costs and solver diagnostics. */
OCAL_API ocal_status ocal_model_dump(const ocal_model* m, char** json);
OCAL_API void ocal_model_free(ocal_model* m);

/* ---- experiment grids ---- */

typedef struct ocal_run_summary {
  size_t cells;
  size_t failed;
  size_t truncated;
  size_t excluded;
} ocal_run_summary;

OCAL_API ocal_status ocal_grid_load(const char* path, ocal_grid** out);
/* base_dir resolves relative dataset paths; may be NULL. */
OCAL_API ocal_status ocal_grid_parse(const char* json_text, const char* base_dir, ocal_grid** out);
/* JSON report listing feasible cells and exclusions with reasons. */
OCAL_API ocal_status ocal_grid_validate(const ocal_grid* g, char** report);
/* workers == 0 picks a default; OCAL_WORKERS overrides either way. */
OCAL_API ocal_status ocal_grid_run(const ocal_grid* g, const char* out_dir, size_t workers, int flags,
                                   ocal_run_summary* summary);
OCAL_API void ocal_grid_free(ocal_grid* g);

/* Tab-separated summary table. group_by and summaries are comma separated;
 * statistic is "median" or "mean"; metric NULL means "mcc". */
OCAL_API ocal_status ocal_summarize(const char* results_dir, const char* group_by, const char* statistic,
                                    const char* summaries, const char* metric, char** table);
/* summaries may be NULL for the defaults. */
OCAL_API ocal_status ocal_emit_curves(const char* results_dir, const char* out_dir, const char* summaries,
                                      size_t* files_written);

/* Newline separated registry names. */
OCAL_API ocal_status ocal_list_strategies(char** out);
OCAL_API ocal_status ocal_list_learners(char** out);

#ifdef __cplusplus
}
#endif

#endif
