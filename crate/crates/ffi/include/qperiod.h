#ifndef QPERIOD_H
#define QPERIOD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QpStatus {
  QP_STATUS_OK = 0,
  QP_STATUS_NULL_POINTER = 1,
  QP_STATUS_INVALID_ARGUMENT = 2,
  QP_STATUS_DIMENSION_MISMATCH = 3,
  QP_STATUS_NOT_UNITARY = 4,
  QP_STATUS_NO_CONVERGENCE = 5,
  QP_STATUS_DIVERGED = 6,
  QP_STATUS_ESTIMATION = 7,
  QP_STATUS_FORMAT = 8,
  QP_STATUS_IO = 9,
  QP_STATUS_CORPUS = 10,
  QP_STATUS_BUFFER_TOO_SMALL = 11,
  QP_STATUS_PANIC = 12,
} QpStatus;

/*
 A tabulated periodic function.
 */
typedef struct QpFunction QpFunction;

/*
 A dense complex matrix.
 */
typedef struct QpMatrix QpMatrix;

/*
 A trained classifier network.
 */
typedef struct QpMlp QpMlp;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *qp_last_error(void);

/*
 Square matrix from `2 * dim * dim` doubles, row-major, real then
 imaginary part per entry.

 # Safety
 `data` must point to `len` readable doubles and `out` must be writable.
 */
enum QpStatus qp_matrix_from_interleaved(uintptr_t dim,
                                         const double *data,
                                         uintptr_t len,
                                         struct QpMatrix **out);

/*
 # Safety
 `out` must be writable.
 */
enum QpStatus qp_matrix_inverse_qft(uint32_t n_qubits, struct QpMatrix **out);

/*
 # Safety
 `out` must be writable.
 */
enum QpStatus qp_matrix_haar(uint32_t n_qubits, uint64_t seed, struct QpMatrix **out);

/*
 # Safety
 `file` must be a NUL-terminated path and `out` writable.
 */
enum QpStatus qp_matrix_read(const char *file, struct QpMatrix **out);

/*
 # Safety
 `m` must be a live handle and `file` a NUL-terminated path.
 */
enum QpStatus qp_matrix_write(const struct QpMatrix *m, const char *file);

/*
 Row count of a matrix handle; 0 for null.

 # Safety
 `m` must be null or a live handle.
 */
uintptr_t qp_matrix_dim(const struct QpMatrix *m);

/*
 # Safety
 `m` must be a live handle and `out` must hold `len` doubles.
 */
enum QpStatus qp_matrix_to_interleaved(const struct QpMatrix *m, double *out, uintptr_t len);

/*
 # Safety
 `m` must be a live handle and `out` writable.
 */
enum QpStatus qp_matrix_unitarity_defect(const struct QpMatrix *m, double *out);

/*
 Eigenphases in `(−π, π]`, one per row.

 # Safety
 `m` must be a live handle and `out` must hold `len` doubles.
 */
enum QpStatus qp_matrix_eigenphases(const struct QpMatrix *m, double *out, uintptr_t len);

/*
 `|⟨ψ|U1†U2|ψ⟩|²` with `ψ` given as interleaved `(re, im)` pairs.

 # Safety
 Both handles must be live, `psi` must hold `len` doubles and `out` be
 writable.
 */
enum QpStatus qp_loschmidt_echo(const struct QpMatrix *u1,
                                const struct QpMatrix *u2,
                                const double *psi,
                                uintptr_t len,
                                double *out);

/*
 # Safety
 `m` must be null or a handle not yet freed.
 */
void qp_matrix_free(struct QpMatrix *m);

/*
 Random function on `n` qubits into `m` qubits with period `r`.

 # Safety
 `out` must be writable.
 */
enum QpStatus qp_function_generate(uint32_t n,
                                   uint32_t m,
                                   uintptr_t r,
                                   uint64_t seed,
                                   struct QpFunction **out);

/*
 # Safety
 `f` must be null or a live handle.
 */
uintptr_t qp_function_period(const struct QpFunction *f);

/*
 # Safety
 `f` must be null or a handle not yet freed.
 */
void qp_function_free(struct QpFunction *f);

/*
 Register-`X` outcome distribution when `m` post-processes `f`; `out`
 receives `2^n` probabilities.

 # Safety
 Both handles must be live and `out` must hold `len` doubles.
 */
enum QpStatus qp_output_distribution(const struct QpMatrix *m,
                                     const struct QpFunction *f,
                                     double *out,
                                     uintptr_t len);

/*
 Outcome distribution with the inverse QFT as post-processing.

 # Safety
 `f` must be a live handle and `out` must hold `len` doubles.
 */
enum QpStatus qp_reference_distribution(const struct QpFunction *f, double *out, uintptr_t len);

/*
 Period estimate from `2^n` outcome probabilities.

 # Safety
 `probs` must hold `len` doubles and `out` be writable.
 */
enum QpStatus qp_estimate_period(const double *probs, uintptr_t len, uint32_t n, uintptr_t *out);

/*
 Trains a post-processing matrix with the default settings (ADAM
 0.001/0.9/0.99/1e-8, inverse-QFT targets, penalty weight 1). A
 `dataset_size` of 0 picks the default for `n`. `final_loss` may be null.

 # Safety
 `out` must be writable; `final_loss` null or writable.
 */
enum QpStatus qp_train(uint32_t n,
                       uintptr_t dataset_size,
                       uintptr_t epochs,
                       uint64_t seed,
                       struct QpMatrix **out,
                       double *final_loss);

/*
 # Safety
 `file` must be a NUL-terminated path and `out` writable.
 */
enum QpStatus qp_mlp_read(const char *file, struct QpMlp **out);

/*
 Classifier score of a matrix: above 0.5 means "learned".

 # Safety
 Both handles must be live and `out` writable.
 */
enum QpStatus qp_mlp_score(const struct QpMlp *net, const struct QpMatrix *m, double *out);

/*
 # Safety
 `net` must be null or a handle not yet freed.
 */
void qp_mlp_free(struct QpMlp *net);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QPERIOD_H */
