#ifndef DEA_SELECT_H
#define DEA_SELECT_H

/* Generated by cbindgen from dea-select-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status code returned by every fallible entry point.
 */
typedef enum DeaStatus {
  DEA_STATUS_OK = 0,
  DEA_STATUS_NULL_ARGUMENT = 1,
  DEA_STATUS_INVALID_UTF8 = 2,
  DEA_STATUS_IO_ERROR = 3,
  DEA_STATUS_DATA_ERROR = 4,
  DEA_STATUS_INVALID_ARGUMENT = 5,
  DEA_STATUS_INFEASIBLE = 6,
  DEA_STATUS_SOLVER_ERROR = 7,
  DEA_STATUS_BUFFER_TOO_SMALL = 8,
  DEA_STATUS_PANIC = 9,
} DeaStatus;

/*
 Opaque selection-configuration handle.
 */
typedef struct DeaConfig DeaConfig;

/*
 Opaque dataset handle.
 */
typedef struct DeaDataset DeaDataset;

/*
 Opaque solution handle.
 */
typedef struct DeaSolution DeaSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Most recent error message on this thread; empty string when none.
 The pointer stays valid until the next failing call on the thread.
 */
const char *dea_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *dea_version(void);

/*
 Parse a dataset from CSV text (header: id, in:..., out:...).

 # Safety
 `text` must be a valid NUL-terminated string and `out` a valid pointer.
 On `Ok` the caller owns the handle and must free it with
 [`dea_dataset_free`].
 */
enum DeaStatus dea_dataset_parse_csv(const char *text, struct DeaDataset **out);

/*
 Load a dataset from a CSV file on disk.

 # Safety
 As [`dea_dataset_parse_csv`]; `path` must name a readable file.
 */
enum DeaStatus dea_dataset_load_csv(const char *path, struct DeaDataset **out);

/*
 Range-normalize the outputs into a new dataset handle.

 # Safety
 `ds` must be a live handle from this library; `out` a valid pointer.
 */
enum DeaStatus dea_dataset_normalize_outputs(const struct DeaDataset *ds, struct DeaDataset **out);

/*
 Fetch the dataset shape. Null count pointers are skipped.

 # Safety
 `ds` must be a live handle from this library.
 */
enum DeaStatus dea_dataset_counts(const struct DeaDataset *ds,
                                  uintptr_t *dmus,
                                  uintptr_t *inputs,
                                  uintptr_t *outputs);

/*
 # Safety
 `ds` must be a handle from this library, not yet freed, or null.
 */
void dea_dataset_free(struct DeaDataset *ds);

/*
 Parse a selection configuration from its key=value text form.

 # Safety
 `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DeaStatus dea_config_parse(const char *text, struct DeaConfig **out);

/*
 # Safety
 `cfg` must be a handle from this library, not yet freed, or null.
 */
void dea_config_free(struct DeaConfig *cfg);

/*
 Efficiency scores for all DMUs. `outputs` lists 1-based output indices
 (`n_outputs` of them); pass `n_outputs = 0` to use every output.
 `values` must hold one f64 per DMU.

 # Safety
 `ds` must be a live handle; `outputs` must point to `n_outputs` entries
 when nonzero; `values` must have room for K doubles.
 */
enum DeaStatus dea_efficiencies(const struct DeaDataset *ds,
                                const uint32_t *outputs,
                                uintptr_t n_outputs,
                                double *values,
                                uintptr_t values_len);

/*
 Solve the joint selection problem.

 # Safety
 `ds` and `cfg` must be live handles; `out` a valid pointer. On `Ok` the
 caller owns the solution handle.
 */
enum DeaStatus dea_solve_joint(const struct DeaDataset *ds,
                               const struct DeaConfig *cfg,
                               struct DeaSolution **out);

/*
 Solve the individual selection problem for a DMU (1-based index).

 # Safety
 As [`dea_solve_joint`].
 */
enum DeaStatus dea_solve_individual(const struct DeaDataset *ds,
                                    const struct DeaConfig *cfg,
                                    uint32_t dmu,
                                    struct DeaSolution **out);

/*
 Objective value of a solution (NaN for a null handle).

 # Safety
 `sol` must be a live handle or null.
 */
double dea_solution_objective(const struct DeaSolution *sol);

/*
 Relative optimality gap reported by the solver.

 # Safety
 `sol` must be a live handle or null.
 */
double dea_solution_gap(const struct DeaSolution *sol);

/*
 Number of selected outputs.

 # Safety
 `sol` must be a live handle or null.
 */
uintptr_t dea_solution_num_selected(const struct DeaSolution *sol);

/*
 Copy the selected outputs as 1-based indices.

 # Safety
 `sol` must be a live handle; `buf` must have room for `buf_len` entries.
 */
enum DeaStatus dea_solution_selected_outputs(const struct DeaSolution *sol,
                                             uint32_t *buf,
                                             uintptr_t buf_len);

/*
 Copy the per-DMU efficiencies under the realized selection.

 # Safety
 `sol` must be a live handle; `buf` must have room for `buf_len` entries.
 */
enum DeaStatus dea_solution_efficiencies(const struct DeaSolution *sol,
                                         double *buf,
                                         uintptr_t buf_len);

/*
 # Safety
 `sol` must be a handle from this library, not yet freed, or null.
 */
void dea_solution_free(struct DeaSolution *sol);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEA_SELECT_H */
