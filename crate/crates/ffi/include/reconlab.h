#ifndef RECONLAB_H
#define RECONLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ReconlabStatus {
  RECONLAB_STATUS_OK = 0,
  RECONLAB_STATUS_NULL_POINTER = 1,
  RECONLAB_STATUS_INVALID_ARGUMENT = 2,
  RECONLAB_STATUS_RANGE = 3,
  RECONLAB_STATUS_CAPACITY = 4,
  RECONLAB_STATUS_BUDGET = 5,
  RECONLAB_STATUS_INFEASIBLE = 6,
  RECONLAB_STATUS_SOLVER = 7,
  RECONLAB_STATUS_CONSISTENCY = 8,
  RECONLAB_STATUS_SCHEMA = 9,
  RECONLAB_STATUS_IO = 10,
  RECONLAB_STATUS_INTERNAL = 11,
} ReconlabStatus;

/**
 * Sequential-composition budget accountant.
 */
typedef struct ReconlabAccountant ReconlabAccountant;

/**
 * An n-bit database.
 */
typedef struct ReconlabDatabase ReconlabDatabase;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null if there was none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *reconlab_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void reconlab_string_free(char *s);

/**
 * Library version as a static NUL-terminated string.
 */
const char *reconlab_version(void);

enum ReconlabStatus reconlab_rr_p_from_epsilon(double epsilon, double *out_p);

/**
 * P(|X| ≤ bound) for Laplace noise of scale 1/epsilon.
 */
enum ReconlabStatus reconlab_laplace_tail(double epsilon, double bound, double *out_p);

/**
 * e^(eps_a − eps_b).
 */
enum ReconlabStatus reconlab_privacy_ratio(double eps_a, double eps_b, double *out_ratio);

enum ReconlabStatus reconlab_zcdp_to_epsilon(double rho, double delta, double *out_epsilon);

enum ReconlabStatus reconlab_database_random(size_t n,
                                             uint64_t seed,
                                             struct ReconlabDatabase **out_db);

/**
 * Copies `n` bits (each 0 or 1) into a new database.
 */
enum ReconlabStatus reconlab_database_from_bits(const uint8_t *bits,
                                                size_t n,
                                                struct ReconlabDatabase **out_db);

void reconlab_database_free(struct ReconlabDatabase *db);

enum ReconlabStatus reconlab_database_len(const struct ReconlabDatabase *db, size_t *out_n);

/**
 * Writes the database's bits into `buf`, which must hold `buf_len` ≥ n bytes.
 */
enum ReconlabStatus reconlab_database_copy_bits(const struct ReconlabDatabase *db,
                                                uint8_t *buf,
                                                size_t buf_len);

/**
 * Exact count of 1-records among `indices`.
 */
enum ReconlabStatus reconlab_database_count(const struct ReconlabDatabase *db,
                                            const size_t *indices,
                                            size_t len,
                                            size_t *out_count);

enum ReconlabStatus reconlab_database_hamming_distance(const struct ReconlabDatabase *a,
                                                       const struct ReconlabDatabase *b,
                                                       size_t *out_distance);

/**
 * LP reconstruction of an n-bit database from `m` noisy subset counts.
 * Writes n bits to `out_bits` and, if non-null, the residual constraint
 * violation of the LP point to `out_violation`.
 */
enum ReconlabStatus reconlab_lp_reconstruct(size_t n,
                                            size_t m,
                                            const size_t *row_offsets,
                                            const size_t *indices,
                                            const double *answers,
                                            double bound,
                                            uint8_t *out_bits,
                                            double *out_violation);

/**
 * Number of n-bit databases consistent with every answer to within `bound`.
 */
enum ReconlabStatus reconlab_exhaustive_feasible_count(size_t n,
                                                       size_t m,
                                                       const size_t *row_offsets,
                                                       const size_t *indices,
                                                       const double *answers,
                                                       double bound,
                                                       uint64_t *out_count);

enum ReconlabStatus reconlab_accountant_new(double total_epsilon,
                                            struct ReconlabAccountant **out_accountant);

void reconlab_accountant_free(struct ReconlabAccountant *accountant);

/**
 * Records a query costing `epsilon`. Returns `RECONLAB_STATUS_BUDGET`, and
 * records nothing, when the remaining budget cannot cover it.
 */
enum ReconlabStatus reconlab_accountant_spend(struct ReconlabAccountant *accountant,
                                              size_t query_id,
                                              double epsilon);

enum ReconlabStatus reconlab_accountant_spent(const struct ReconlabAccountant *accountant,
                                              double *out_epsilon);

enum ReconlabStatus reconlab_accountant_remaining(const struct ReconlabAccountant *accountant,
                                                  double *out_epsilon);

enum ReconlabStatus reconlab_accountant_ledger_len(const struct ReconlabAccountant *accountant,
                                                   size_t *out_len);

/**
 * Validates an experiment config given as JSON. Writes a JSON array of
 * violation strings (empty when valid) to `out_json`; free it with
 * [`reconlab_string_free`]. Violations are not a failure status.
 */
enum ReconlabStatus reconlab_validate_config(const char *config_json, char **out_json);

/**
 * Runs an experiment and writes its report as JSON to `out_json`; free it
 * with [`reconlab_string_free`]. Nothing is written to disk. An invalid
 * config yields `RECONLAB_STATUS_INVALID_ARGUMENT`.
 */
enum ReconlabStatus reconlab_run_experiment(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECONLAB_H */
