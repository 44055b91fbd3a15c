/*
 * projmon — sequential monitoring of projected second moments.
 *
 * C interface of the shared library. All handles are opaque; functions
 * return PROJMON_OK (0) on success and a nonzero error code otherwise, with
 * a human-readable message available from projmon_last_error() on the same
 * thread. Strings returned through char** out-parameters are owned by the
 * caller and must be released with projmon_free_string().
 *
 * Structured inputs and outputs are JSON documents; observation streams
 * move as CSV files (header y1,...,yd plus an optional trailing z column)
 * or in-memory row-major buffers.
 */
#ifndef PROJMON_H
#define PROJMON_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PROJMON_API __declspec(dllexport)
#elif defined(__GNUC__)
#define PROJMON_API __attribute__((visibility("default")))
#else
#define PROJMON_API
#endif

#define PROJMON_OK 0
#define PROJMON_ERR_INVALID 1 /* bad arguments or malformed config */
#define PROJMON_ERR_DOMAIN 2  /* computation infeasible on this input */
#define PROJMON_ERR_IO 3      /* file or parse failure */
#define PROJMON_ERR_INTERNAL 4

typedef struct projmon_stream projmon_stream;
typedef struct projmon_monitor projmon_monitor;

PROJMON_API const char* projmon_version(void);

/* Message for the most recent failing call on this thread. */
PROJMON_API const char* projmon_last_error(void);

PROJMON_API void projmon_free_string(char* s);

/* ------------------------------------------------------------------ */
/* Observation streams                                                 */

PROJMON_API int projmon_stream_from_csv(const char* path, projmon_stream** out);

/* data: rows x dim row-major; response may be NULL. */
PROJMON_API int projmon_stream_from_buffer(const double* data, size_t rows, size_t dim,
                                           const double* response, projmon_stream** out);

/* spec_json: {"kind":"vectorma"|"locally-stationary"|"covbreak"|"regression63",
 *             "n":..., "seed":..., ...kind-specific fields}. */
PROJMON_API int projmon_stream_generate(const char* spec_json, projmon_stream** out);

PROJMON_API int projmon_stream_info(const projmon_stream* s, size_t* rows, size_t* dim,
                                    int* has_response);

/* Zero-copy views into the stream storage; valid while the handle lives.
 * *response is NULL when the stream has no response column. */
PROJMON_API int projmon_stream_data(const projmon_stream* s, const double** data,
                                    const double** response);

PROJMON_API int projmon_stream_to_csv(const projmon_stream* s, const char* path);

/* Report-only validation: {"ok":..., "issues":[{t,j,what}...], "notes":[...]}. */
PROJMON_API int projmon_stream_validate(const projmon_stream* s, char** report_json);

PROJMON_API void projmon_stream_free(projmon_stream* s);

/* ------------------------------------------------------------------ */
/* Critical values                                                     */

/* request_json: {"gamma":..., "delta":..., "horizon":"open-end"|T,
 *                "alpha":..., "reps":..., "grid":..., "seed":...,
 *                "weighting":"paper"|"flat"}.
 * Looks the entry up in the JSON table at table_path (when non-NULL),
 * simulates on a miss and rewrites the table. result_json carries the
 * entry: {gamma, delta, horizon, alpha, c, R, N, seed, weighting}. */
PROJMON_API int projmon_critval(const char* request_json, const char* table_path,
                                char** result_json);

/* Raw supremum sample for the requested limit law; out must hold `reps`
 * doubles as passed in request_json. */
PROJMON_API int projmon_critval_sample(const char* request_json, double* out, size_t len);

/* ------------------------------------------------------------------ */
/* Covariance estimation and portfolios                                */

/* request_json: {"m":rows-to-use (0 = all),
 *                "threshold":{"kind":"hard"|"lasso"|"scad","t":value} or
 *                            {"kind":...,"C_th":...,"q":...},
 *                "scad_a":..., "exempt_diagonal":bool}.
 * result_json: {"d","m","mu":[...],"sigma":{d,triu},"second_moment":{d,triu},
 *               "sigma_thresholded":{d,triu}?, "threshold":t?}. */
PROJMON_API int projmon_covest(const char* request_json, const projmon_stream* s,
                               char** result_json);

/* request_json: {"kind":"minvar"|"target","mu0":...,"m":...,"eps0":...,
 *                "threshold":{...} as above}.
 * result_json: {"weights":[...],"kind","gross_exposure",
 *               "constraints_residuals":{budget,return}}. */
PROJMON_API int projmon_portfolio(const char* request_json, const projmon_stream* s,
                                  char** result_json);

/* ------------------------------------------------------------------ */
/* Monitors                                                            */

/* config_json:
 *   {"m":..., "gamma":..., "delta":..., "horizon":"open-end"|T,
 *    "weighting":"paper"|"flat", "kind":"projection"|"residual",
 *    "alpha":... or "c":...,
 *    "v":[...] | {"estimator":"minvar"|"target"|"precision-mean",
 *                 "mu0":..., "eps0":..., "threshold":{...}},
 *    "lrv":{"rho":...,"b":...},
 *    "sim":{"reps":...,"grid":...,"seed":...},   (critical-value MC)
 *    "table":"path"}                              (optional cache)
 * Training consumes rows 1..m of the stream and freezes the monitor. */
PROJMON_API int projmon_monitor_create(const char* config_json, const projmon_stream* training,
                                       projmon_monitor** out);

/* Serialized MonitorState checkpoint (JSON, field-exact round trip). */
PROJMON_API int projmon_monitor_state(const projmon_monitor* mon, char** state_json);
PROJMON_API int projmon_monitor_restore(const char* state_json, projmon_monitor** out);

/* Feeds one observation. event_json receives a JSON record when something
 * happened ({"signal":true,...} or {"terminal":true} or {"frozen":true})
 * and NULL otherwise. response carries z for residual monitors (pass NULL
 * for projection monitors). */
PROJMON_API int projmon_monitor_step(projmon_monitor* mon, const double* y, size_t dim,
                                     const double* response, char** event_json);

/* Replays the monitoring window of a stream starting after row
 * m + current k. report_jsonl: one {"k","stat","bound"} record per
 * evaluated step plus a flagged signal record. summary_json:
 * {"signal_time":...|null, "c", "sigma0_hat", "m", "truncated", "terminal"}. */
PROJMON_API int projmon_monitor_run(projmon_monitor* mon, const projmon_stream* s,
                                    char** report_jsonl, char** summary_json);

PROJMON_API void projmon_monitor_free(projmon_monitor* mon);

/* ------------------------------------------------------------------ */
/* Deep-learning drift monitoring                                      */

/* config_json: {"m":..., "gamma":..., "delta":..., "alpha":..., "c":...,
 *               "hidden":[4,2], "epochs":..., "batch":..., "val_split":...,
 *               "seed":..., "retrain":bool, "lrv":{...}, "sim":{...},
 *               "table":"path"}.
 * Runs the train/monitor/retrain protocol on a stream with a response
 * column. episodes_jsonl: one record per training episode. trajectory_csv:
 * t,k,episode,d_proj,b_proj,d_res,b_res rows. */
PROJMON_API int projmon_rollover_run(const char* config_json, const projmon_stream* s,
                                     char** episodes_jsonl, char** trajectory_csv);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PROJMON_H */
