#ifndef NODECAP_H
#define NODECAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_INTERNAL = 1,
  NC_STATUS_INFEASIBLE = 2,
  NC_STATUS_STALL = 3,
  NC_STATUS_PARSE = 4,
  NC_STATUS_NULL_POINTER = 5,
  NC_STATUS_INVALID_ARGUMENT = 6,
} NcStatus;

typedef struct NcInstance NcInstance;

typedef struct NcSolution NcSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a JSON instance. `strict` nonzero rejects unknown fields.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum NcStatus nc_instance_parse(const char *text, int32_t strict, struct NcInstance **out);

/**
 * Generates an instance. `family` is one of `random-geometric`, `grid`,
 * `star-pathological`, `binary-merge`, `dumbbell`; `kind` one of `ssnc`,
 * `mcnc`, `eevrp`.
 *
 * # Safety
 * String arguments must be NUL-terminated and `out` a valid pointer.
 */
enum NcStatus nc_generate(const char *family,
                          const char *kind,
                          size_t n,
                          size_t demands,
                          uint64_t capacity,
                          uint64_t seed,
                          struct NcInstance **out);

/**
 * Serializes an instance; free the string with `nc_string_free`.
 *
 * # Safety
 * `inst` must come from this library and `out` be a valid pointer.
 */
enum NcStatus nc_instance_to_json(const struct NcInstance *inst, char **out);

/**
 * # Safety
 * `inst` must come from this library or be null.
 */
void nc_instance_free(struct NcInstance *inst);

/**
 * Solves the instance with default knobs, dispatching on its kind.
 *
 * # Safety
 * `inst` must come from this library and `out` be a valid pointer.
 */
enum NcStatus nc_solve(const struct NcInstance *inst, uint64_t seed, struct NcSolution **out);

/**
 * Total node cost, or NaN for a null handle.
 *
 * # Safety
 * `sol` must come from this library or be null.
 */
double nc_solution_cost(const struct NcSolution *sol);

/**
 * Largest node load over capacity, or NaN for a null handle.
 *
 * # Safety
 * `sol` must come from this library or be null.
 */
double nc_solution_congestion(const struct NcSolution *sol);

/**
 * Energy of the lifted routing for energy instances, NaN otherwise.
 *
 * # Safety
 * `sol` must come from this library or be null.
 */
double nc_solution_energy(const struct NcSolution *sol);

/**
 * Full solution as JSON; free the string with `nc_string_free`.
 *
 * # Safety
 * `sol` must come from this library and `out` be a valid pointer.
 */
enum NcStatus nc_solution_to_json(const struct NcSolution *sol, char **out);

/**
 * # Safety
 * `sol` must come from this library or be null.
 */
void nc_solution_free(struct NcSolution *sol);

/**
 * # Safety
 * `s` must be a string returned by this library or null.
 */
void nc_string_free(char *s);

/**
 * Message for the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *nc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NODECAP_H */
