#ifndef SBPT_H
#define SBPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define SBPT_METHOD_UC 1

#define SBPT_METHOD_SC 2

#define SBPT_METHOD_EN 4

// Result codes.
typedef enum SbptStatus {
  SBPT_STATUS_OK = 0,
  SBPT_STATUS_NULL_POINTER = 1,
  SBPT_STATUS_INVALID_STRING = 2,
  SBPT_STATUS_PARSE = 3,
  SBPT_STATUS_RANGE = 4,
  SBPT_STATUS_IO = 5,
  SBPT_STATUS_USAGE = 6,
  SBPT_STATUS_CONVERGENCE = 7,
  SBPT_STATUS_CAPACITY = 8,
  SBPT_STATUS_EMPTY_SECTOR = 9,
  SBPT_STATUS_PARTITION_INTEGRITY = 10,
  SBPT_STATUS_INTRUDER = 11,
  SBPT_STATUS_SYMMETRY_VIOLATION = 12,
  SBPT_STATUS_INTERNAL = 13,
  SBPT_STATUS_PANIC = 14,
} SbptStatus;

// Opaque grouping description.
typedef struct SbptGrouping SbptGrouping;

// Opaque integral set.
typedef struct SbptIntegrals SbptIntegrals;

// Energies in hartree; corrections that were not requested are NaN.
typedef struct SbptEnergies {
  double e0;
  double e1;
  double e2_uc;
  double e2_sc;
  double e2_en;
  uintptr_t n_det_ref;
  uintptr_t n_irreps;
} SbptEnergies;

typedef struct SbptResources {
  uintptr_t n_orbitals;
  uintptr_t n_qubits;
  uintptr_t n_det;
} SbptResources;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null. Valid until the next failing call.
const char *sbpt_last_error_message(void);

// Reads an FCIDUMP file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SbptStatus sbpt_integrals_load(const char *path, struct SbptIntegrals **out);

// Folds the listed spatial orbitals (0-based) into the core; writes a new handle.
//
// # Safety
// `ints` must come from this library, `core` must point to `n_core` values (or be null when zero).
enum SbptStatus sbpt_integrals_freeze_core(const struct SbptIntegrals *ints,
                                           const uintptr_t *core,
                                           uintptr_t n_core,
                                           struct SbptIntegrals **out);

// Spatial orbital count, or 0 for a null handle.
//
// # Safety
// `ints` must be null or come from this library.
uintptr_t sbpt_integrals_n_orbitals(const struct SbptIntegrals *ints);

// Electron count, or 0 for a null handle.
//
// # Safety
// `ints` must be null or come from this library.
uintptr_t sbpt_integrals_n_electrons(const struct SbptIntegrals *ints);

// # Safety
// `ints` must be null or a handle from this library that is not used afterwards.
void sbpt_integrals_free(struct SbptIntegrals *ints);

// Reads a grouping file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SbptStatus sbpt_grouping_load(const char *path, struct SbptGrouping **out);

// # Safety
// `g` must be null or a handle from this library that is not used afterwards.
void sbpt_grouping_free(struct SbptGrouping *g);

// Reference energy plus the corrections selected by `methods` (`SBPT_METHOD_*` bits).
//
// # Safety
// Handles must come from this library; `out` must be a valid pointer.
enum SbptStatus sbpt_run(const struct SbptIntegrals *ints,
                         const struct SbptGrouping *grouping,
                         uint32_t methods,
                         bool regularize_intruders,
                         struct SbptEnergies *out);

// Active orbitals, tapered qubits and reference-sector size for one grouping.
//
// # Safety
// Handles must come from this library; `out` must be a valid pointer.
enum SbptStatus sbpt_resources(const struct SbptIntegrals *ints,
                               const struct SbptGrouping *grouping,
                               struct SbptResources *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SBPT_H */
