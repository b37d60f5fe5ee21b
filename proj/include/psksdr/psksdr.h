/* C interface to the psksdr library. All strings returned through char**
 * out-parameters are heap-allocated JSON or CSV text and must be released
 * with psk_string_free. On failure the functions return a non-zero status
 * and psk_last_error() describes it (per thread). */
#ifndef PSKSDR_PSKSDR_H
#define PSKSDR_PSKSDR_H

#include <stdint.h>

#if defined(PSKSDR_BUILDING_LIBRARY)
#define PSK_API __attribute__((visibility("default")))
#else
#define PSK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum psk_status {
  PSK_OK = 0,
  PSK_ERR_INVALID_ARGUMENT = 1,
  PSK_ERR_DIMENSION = 2,
  PSK_ERR_NUMERICAL = 3,
  PSK_ERR_INFEASIBLE = 4,
  PSK_ERR_CONSTRUCTION = 5,
  PSK_ERR_SIZE_GUARD = 6,
  PSK_ERR_IO = 7,
  PSK_ERR_INTERNAL = 8
} psk_status;

typedef struct psk_instance psk_instance;

typedef enum psk_precision {
  PSK_PRECISION_AUTO = 0,     /* double, long double retry when not converged */
  PSK_PRECISION_STANDARD = 1, /* double only */
  PSK_PRECISION_EXTENDED = 2  /* long double only */
} psk_precision;

typedef struct psk_solve_options {
  double tol;
  int max_iter;
  int precision; /* psk_precision */
  int drop_redundant;
} psk_solve_options;

PSK_API const char* psk_version(void);
PSK_API const char* psk_last_error(void);
PSK_API const char* psk_status_name(psk_status status);
PSK_API void psk_string_free(char* text);

PSK_API void psk_solve_options_default(psk_solve_options* options);

/* Instances. snr_db may be +INFINITY for a noiseless instance. */
PSK_API psk_status psk_instance_generate(int m, int n, int M, double snr_db, uint64_t seed, psk_instance** out);
PSK_API psk_status psk_instance_from_json(const char* json, psk_instance** out);
PSK_API psk_status psk_instance_load(const char* path, psk_instance** out);
PSK_API psk_status psk_instance_save(const psk_instance* instance, const char* path);
PSK_API psk_status psk_instance_to_json(const psk_instance* instance, char** out_json);
PSK_API psk_status psk_instance_dims(const psk_instance* instance, int* m, int* n, int* M);
PSK_API void psk_instance_free(psk_instance* instance);

/* Solves "rsdr", "ersdr1" or "ersdr2". options may be NULL for defaults.
 * dump_path, when not NULL, receives the assembled conic program. */
PSK_API psk_status psk_solve(const psk_instance* instance, const char* model, const psk_solve_options* options,
                             const char* dump_path, char** out_json);

/* mode: "independent" solves both relaxations and compares the optima;
 * "construct" solves ersdr1 and builds T from it; "lift" solves ersdr2 and
 * maps it to (y, Y, t). The verdict covers both points' feasibility, the
 * connection residuals and the objective gap; construction diagnostics are
 * reported alongside. verdict receives 1 on pass, 0 on fail. */
PSK_API psk_status psk_verify_equivalence(const psk_instance* instance, const char* mode, double tol,
                                          const psk_solve_options* options, char** out_json, int* verdict);

PSK_API psk_status psk_tightness(const psk_instance* instance, char** out_json, int* holds);

PSK_API psk_status psk_ml(const psk_instance* instance, uint64_t max_enum, char** out_json);

/* Called once per finished trial with the trial record as JSON. */
typedef void (*psk_progress_fn)(const char* record_json, void* user);

/* config_json mirrors the sweep configuration; NULL or "" for defaults.
 * Any of the paths and progress may be NULL. out_json receives the per-SNR
 * summary and the failure log. */
PSK_API psk_status psk_sweep(const char* config_json, const char* csv_path, const char* timing_path,
                             const char* plotdata_path, psk_progress_fn progress, void* user, char** out_json);

#ifdef __cplusplus
}
#endif

#endif
