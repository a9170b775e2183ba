#ifndef MOMTUNNEL_H
#define MOMTUNNEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every call.
 */
typedef enum MtStatus {
  MT_STATUS_OK = 0,
  MT_STATUS_NULL_POINTER = 1,
  MT_STATUS_INVALID_ARGUMENT = 2,
  MT_STATUS_CONFIG = 3,
  MT_STATUS_INTEGRATION = 4,
  MT_STATUS_OUT_OF_RANGE = 5,
  MT_STATUS_BUFFER_TOO_SMALL = 6,
  MT_STATUS_ALGEBRA_MISMATCH = 7,
  MT_STATUS_PANIC = 8,
} MtStatus;

typedef enum MtTag {
  MT_TAG_REFLECTED = 0,
  MT_TAG_TUNNELED = 1,
  MT_TAG_TRAPPED = 2,
  MT_TAG_UNDETERMINED = 3,
} MtTag;

typedef enum MtTermination {
  MT_TERMINATION_REACHED_TMAX = 0,
  MT_TERMINATION_ESCAPED = 1,
  MT_TERMINATION_CONSTRAINT_VIOLATED = 2,
  MT_TERMINATION_STEP_FAILURE = 3,
} MtTermination;

/*
 Model parameters and truncation order.
 */
typedef struct MtModel MtModel;

/*
 An integrated and classified run.
 */
typedef struct MtRun MtRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Length in bytes of the last error message, excluding the terminator.
 */
size_t mt_last_error_length(void);

/*
 Copies the last error message of this thread into `buf` as a
 NUL-terminated string.

 # Safety
 `buf` must point to `len` writable bytes.
 */
enum MtStatus mt_last_error_message(char *buf, size_t len);

/*
 Creates a model. `order` is 0, 2 or 3.

 # Safety
 `out` must be a valid pointer; on success it receives a handle owned by
 the caller.
 */
enum MtStatus mt_model_new(double mass,
                           double hbar,
                           double alpha,
                           double width,
                           uint32_t exponent,
                           uint32_t order,
                           struct MtModel **out);

/*
 Releases a model handle. Null is ignored.

 # Safety
 `model` must come from [`mt_model_new`] and not be used afterwards.
 */
void mt_model_free(struct MtModel *model);

/*
 Number of packed state entries: 2, 5 or 9.

 # Safety
 Pointers must be valid.
 */
enum MtStatus mt_model_dim(const struct MtModel *model, size_t *out);

/*
 Time derivative of the packed state `[q, p, G20, G11, G02, ...]`.

 # Safety
 `y` and `dy` must each hold `len` doubles.
 */
enum MtStatus mt_model_rhs(const struct MtModel *model, const double *y, double *dy, size_t len);

/*
 Effective Hamiltonian of a packed state.

 # Safety
 `y` must hold `len` doubles; `out` must be valid.
 */
enum MtStatus mt_model_hamiltonian(const struct MtModel *model,
                                   const double *y,
                                   size_t len,
                                   double *out);

/*
 Effective potential at `q` with the moments of `y` held fixed.

 # Safety
 `y` must hold `len` doubles; `out` must be valid.
 */
enum MtStatus mt_model_effective_potential(const struct MtModel *model,
                                           double q,
                                           const double *y,
                                           size_t len,
                                           double *out);

/*
 `k`-th derivative of the barrier at `q`, `k <= 8`.

 # Safety
 `out` must be valid.
 */
enum MtStatus mt_model_potential_derivative(const struct MtModel *model,
                                            double q,
                                            uint32_t k,
                                            double *out);

/*
 Runs and classifies the simulation described by a TOML configuration.

 # Safety
 `config` must be a NUL-terminated UTF-8 string; `out` must be valid.
 */
enum MtStatus mt_run_from_toml(const char *config, struct MtRun **out);

/*
 Releases a run handle. Null is ignored.

 # Safety
 `run` must come from [`mt_run_from_toml`] and not be used afterwards.
 */
void mt_run_free(struct MtRun *run);

/*
 Number of stored samples.

 # Safety
 Pointers must be valid.
 */
enum MtStatus mt_run_len(const struct MtRun *run, size_t *out);

/*
 Number of packed state entries per sample.

 # Safety
 Pointers must be valid.
 */
enum MtStatus mt_run_dim(const struct MtRun *run, size_t *out);

/*
 Copies sample `index`: its time into `t` and its packed state into `y`.

 # Safety
 `y` must hold `len` doubles, at least the run's dimension.
 */
enum MtStatus mt_run_sample(const struct MtRun *run,
                            size_t index,
                            double *t,
                            double *y,
                            size_t len);

/*
 Classification of the run.

 # Safety
 Pointers must be valid.
 */
enum MtStatus mt_run_tag(const struct MtRun *run, enum MtTag *out);

/*
 Why integration stopped.

 # Safety
 Pointers must be valid.
 */
enum MtStatus mt_run_termination(const struct MtRun *run, enum MtTermination *out);

/*
 Largest relative deviation of the effective Hamiltonian from its start value.

 # Safety
 Pointers must be valid.
 */
enum MtStatus mt_run_energy_drift(const struct MtRun *run, double *out);

/*
 Checks the built-in equation tables against the moment algebra.
 Returns `MT_STATUS_ALGEBRA_MISMATCH` on an unrecorded difference.
 */
enum MtStatus mt_check_algebra(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOMTUNNEL_H */
