#ifndef DICKESIM_H
#define DICKESIM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_INVALID_ARGUMENT = 2,
  DS_STATUS_TRUNCATION = 3,
  DS_STATUS_SPACE = 4,
  DS_STATUS_SPEC = 5,
  DS_STATUS_DATA = 6,
  DS_STATUS_FIT = 7,
  DS_STATUS_IO = 8,
  DS_STATUS_PANIC = 9,
} DsStatus;

/**
 * Opaque circuit description.
 */
typedef struct DsCircuit DsCircuit;

/**
 * Opaque post-selected state.
 */
typedef struct DsResult DsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library; valid until the next call on the same thread.
 */
const char *ds_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ds_version(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ds_string_free(char *s);

/**
 * Named network: `bell2`, `dicke4` or `dicke8`.
 *
 * # Safety
 * `name` must be a valid C string and `out` writable.
 */
DsStatus ds_circuit_preset(const char *name, DsCircuit **out);

/**
 * Circuit from its JSON description.
 *
 * # Safety
 * `json` must be a valid C string and `out` writable.
 */
DsStatus ds_circuit_from_json(const char *json, DsCircuit **out);

/**
 * # Safety
 * `c` must be null or a live handle from this library.
 */
void ds_circuit_free(DsCircuit *c);

/**
 * # Safety
 * `c` must be a live handle and `ports`, `modes` writable.
 */
DsStatus ds_circuit_size(const DsCircuit *c, size_t *ports, size_t *modes);

/**
 * Ideal source at phase `phi` through `c`, post-selected on one photon
 * per port.
 *
 * # Safety
 * `c` must be a live handle and `out` writable.
 */
DsStatus ds_run_ideal(const DsCircuit *c, double phi, DsResult **out);

/**
 * # Safety
 * `r` must be null or a live handle from this library.
 */
void ds_result_free(DsResult *r);

/**
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
DsStatus ds_result_probability(const DsResult *r, double *out);

/**
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
DsStatus ds_result_qubits(const DsResult *r, size_t *out);

/**
 * Fidelity with a named reference state such as `D4m2` or `psi4:0.3`.
 *
 * # Safety
 * `r` must be a live handle, `reference` a valid C string, `out` writable.
 */
DsStatus ds_result_fidelity(const DsResult *r, const char *reference, double *out);

/**
 * Outcome probabilities with every qubit measured in `basis` (`Z`, `X`,
 * `Y` or `R(theta)`). `buf` must hold `2^qubits` doubles.
 *
 * # Safety
 * `r` must be a live handle, `basis` a valid C string and `buf` valid
 * for `len` writes.
 */
DsStatus ds_result_probabilities(const DsResult *r, const char *basis, double *buf, size_t len);

/**
 * JSON rendering of the result; release with [`ds_string_free`].
 *
 * # Safety
 * `r` must be a live handle and `out` writable.
 */
DsStatus ds_result_json(const DsResult *r, char **out);

/**
 * Spectral purity of the dual-pump source at signal/pump Q ratio
 * `q_ratio` on an `n` x `n` grid.
 *
 * # Safety
 * `out` must be writable.
 */
DsStatus ds_jsi_purity(double q_ratio, size_t n, double *out);

/**
 * `1 + purity`
 */
double ds_accidental_ratio(double purity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DICKESIM_H */
