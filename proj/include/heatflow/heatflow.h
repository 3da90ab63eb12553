/* heatflow: label-free learning of steady-state 2-D heat flow.
 *
 * C89-compatible interface to the heatflow shared library. All objects are
 * opaque handles created and destroyed through these functions; every
 * fallible call returns an hf_status, with a thread-local description
 * available from hf_last_error() after a failure.
 */
#ifndef HEATFLOW_H
#define HEATFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HF_API __declspec(dllexport)
#else
#define HF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hf_status {
  HF_OK = 0,
  HF_ERR_INVALID_ARGUMENT = 1,
  HF_ERR_DIMENSION_MISMATCH = 2,
  HF_ERR_IO = 3,
  HF_ERR_PARSE = 4,
  HF_ERR_FORMAT = 5,
  HF_ERR_NO_CONVERGENCE = 6,
  HF_ERR_NAN = 7,
  HF_ERR_INTERNAL = 8
} hf_status;

typedef enum hf_method {
  HF_METHOD_JACOBI = 0,
  HF_METHOD_GAUSS_SEIDEL = 1
} hf_method;

typedef enum hf_constraint {
  HF_CONSTRAINT_UNIT_NORM = 0,
  HF_CONSTRAINT_FIXED_CENTER = 1,
  HF_CONSTRAINT_NONE = 2
} hf_constraint;

/* Dense 2-D temperature grid (row-major doubles). */
typedef struct hf_field hf_field;
/* Deterministic random stream. */
typedef struct hf_rng hf_rng;
/* Trained network loaded from a checkpoint. */
typedef struct hf_model hf_model;

typedef struct hf_error_report {
  double mean_percent;
  double std_percent;
  double max_percent;
  int64_t n_pixels;
} hf_error_report;

typedef struct hf_solve_stats {
  int64_t sweeps_used;
  int converged;
  double final_residual; /* max nodal change on the last sweep */
} hf_solve_stats;

HF_API const char* hf_version(void);
HF_API const char* hf_status_name(hf_status status);
/* Description of the most recent failure on this thread ("" if none). */
HF_API const char* hf_last_error(void);
/* Caps internal parallelism; 1 guarantees bitwise-reproducible runs. */
HF_API void hf_set_threads(int n);
HF_API int hf_threads(void);

/* ---- fields ---------------------------------------------------------- */

HF_API hf_status hf_field_create(int height, int width, double fill,
                                 hf_field** out);
HF_API void hf_field_free(hf_field* field);
HF_API int hf_field_height(const hf_field* field);
HF_API int hf_field_width(const hf_field* field);
/* Row-major storage, valid until the field is freed. */
HF_API const double* hf_field_data(const hf_field* field);
HF_API hf_status hf_field_get(const hf_field* field, int row, int col,
                              double* out);
HF_API hf_status hf_field_set(hf_field* field, int row, int col, double value);
/* Formats by extension: .csv (exact) or .pgm (P2, maxval 10000). */
HF_API hf_status hf_field_read(const char* path, hf_field** out);
HF_API hf_status hf_field_write(const hf_field* field, const char* path);
HF_API hf_status hf_per_pixel_error(const hf_field* predicted,
                                    const hf_field* truth,
                                    hf_error_report* out);

/* ---- problem generation ---------------------------------------------- */

HF_API hf_status hf_rng_create(uint64_t seed, hf_rng** out);
HF_API void hf_rng_free(hf_rng* rng);
/* Draws top, bottom, left, right uniformly from [0, 100]. */
HF_API hf_status hf_boundary_sample(hf_rng* rng, int size,
                                    double edges_out[4]);
/* Builds the initial condition for edges = {top, bottom, left, right}. */
HF_API hf_status hf_problem_create(int size, const double edges[4],
                                   hf_field** out);

/* ---- finite-difference solver ---------------------------------------- */

/* Iterates the five-point nodal average with the border held fixed until the
 * max nodal change per sweep drops to tolerance. Writes the per-sweep
 * residual history as CSV when trace_csv_path is non-NULL. */
HF_API hf_status hf_fd_solve(const hf_field* initial, hf_method method,
                             double tolerance, int64_t max_sweeps,
                             const char* trace_csv_path, hf_field** solution,
                             hf_solve_stats* stats);
HF_API hf_status hf_constant_init(const hf_field* problem, hf_field** out);
/* Gauss-Seidel at tolerance 1e-8, memoized under cache_dir (NULL or ""
 * disables caching). */
HF_API hf_status hf_ground_truth(const hf_field* problem,
                                 const char* cache_dir, hf_field** out);
/* Mean squared response of the five-point kernel (valid mode). */
HF_API hf_status hf_physics_loss(const hf_field* field, double* out);

/* ---- model ------------------------------------------------------------ */

HF_API hf_status hf_model_load(const char* checkpoint_path, hf_model** out);
HF_API void hf_model_free(hf_model* model);
HF_API int hf_model_input_size(const hf_model* model);
/* Degrees in, degrees out; the border of the output equals the problem's. */
HF_API hf_status hf_model_predict(const hf_model* model,
                                  const hf_field* problem, hf_field** out);

/* ---- training ---------------------------------------------------------- */

typedef struct hf_train_options {
  int input_size;
  int epochs;
  int problems_per_epoch;
  int batch_size;
  double learning_rate;
  uint64_t seed;
  int eval_every;
  int eval_set_size;
  int curriculum;      /* 0 pins the loss on the finest level throughout */
  int verbose;         /* nonzero: one progress line per epoch on stderr */
  const char* out_dir; /* receives checkpoint.lfck and trainlog.csv */
  const char* cache_dir;
} hf_train_options;

typedef struct hf_train_summary {
  hf_error_report final_eval;
  double final_multiscale_loss;
  double wall_seconds;
} hf_train_summary;

HF_API void hf_train_defaults(hf_train_options* options);
HF_API hf_status hf_train(const hf_train_options* options,
                          hf_train_summary* out);

/* Aggregated per-pixel error over all pixels of n held-out problems
 * (fresh draws from seed), ground truth from the solver oracle. Writes one
 * CSV row per problem when per_problem_csv_path is non-NULL. */
HF_API hf_status hf_evaluate(const hf_model* model, int n_problems,
                             uint64_t seed, const char* cache_dir,
                             const char* per_problem_csv_path,
                             hf_error_report* out);

/* ---- kernel recovery --------------------------------------------------- */

typedef struct hf_kernel_learn_options {
  int grid_size;
  int n_samples;
  int steps;
  double learning_rate;
  hf_constraint constraint;
  uint64_t seed;
} hf_kernel_learn_options;

HF_API void hf_kernel_learn_defaults(hf_kernel_learn_options* options);
/* Learns a 3x3 kernel (row-major stencil_out) from converged fields only.
 * Writes per-step objective/norm history as CSV when history_csv_path is
 * non-NULL. */
HF_API hf_status hf_learn_kernel(const hf_kernel_learn_options* options,
                                 const char* history_csv_path,
                                 double stencil_out[9],
                                 double* final_objective);
/* Unit Frobenius norm, sign fixed so the center weight is positive. */
HF_API hf_status hf_normalize_stencil(const double stencil_in[9],
                                      double stencil_out[9]);

/* ---- warm-start benchmark ---------------------------------------------- */

typedef struct hf_bench_options {
  int n_problems;
  uint64_t seed;
  hf_method method;
  const double* thresholds; /* descending per-pixel error percentages */
  int n_thresholds;
  double tolerance;
  int64_t max_sweeps;
  int sample_every;
  const char* cache_dir;
} hf_bench_options;

#define HF_BENCH_MAX_THRESHOLDS 16

typedef struct hf_bench_summary {
  int n_thresholds;
  double thresholds[HF_BENCH_MAX_THRESHOLDS];
  double median_ratio[HF_BENCH_MAX_THRESHOLDS]; /* constant / warm sweeps */
  double warm_win_fraction[HF_BENCH_MAX_THRESHOLDS];
} hf_bench_summary;

HF_API void hf_bench_defaults(hf_bench_options* options);
/* Compares solver convergence from the model's prediction vs the
 * constant-border-average start. Writes per-sweep error curves (CSV) and a
 * per-threshold summary (JSON) when the paths are non-NULL. */
HF_API hf_status hf_warmstart_bench(const hf_model* model,
                                    const hf_bench_options* options,
                                    const char* curves_csv_path,
                                    const char* summary_json_path,
                                    hf_bench_summary* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HEATFLOW_H */
