#ifndef SMER_H
#define SMER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SmerStatus {
  SMER_STATUS_OK = 0,
  SMER_STATUS_NULL_POINTER = 1,
  SMER_STATUS_INVALID_UTF8 = 2,
  SMER_STATUS_IO = 3,
  SMER_STATUS_PARSE = 4,
  SMER_STATUS_INVALID_INPUT = 5,
  SMER_STATUS_OUT_OF_VOCABULARY = 6,
  SMER_STATUS_EMPTY_DOCUMENT = 7,
  SMER_STATUS_UNDEFINED = 8,
  SMER_STATUS_NUMERIC = 9,
  SMER_STATUS_FIDELITY = 10,
  SMER_STATUS_PANIC = 11,
} SmerStatus;

/**
 * Per-token scores of one text.
 */
typedef struct SmerExplanation SmerExplanation;

/**
 * An embedding classifier together with its word vectors.
 */
typedef struct SmerModel SmerModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *smer_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *smer_version(void);

/**
 * Loads a classifier JSON and the word2vec text file it was trained on.
 *
 * # Safety
 * Paths are NUL-terminated strings; `out` is a valid pointer.
 */
enum SmerStatus smer_model_load(const char *classifier_path,
                                const char *embeddings_path,
                                struct SmerModel **out);

/**
 * # Safety
 * `model` is null or a handle from `smer_model_load` not yet freed.
 */
void smer_model_free(struct SmerModel *model);

/**
 * Embedding dimension, or 0 for a null handle.
 *
 * # Safety
 * `model` is null or a live handle.
 */
size_t smer_model_dim(const struct SmerModel *model);

/**
 * Logit and SMER score of a single word.
 *
 * # Safety
 * `model` is a live handle, `word` a NUL-terminated string, and the output
 * pointers are valid or null (null outputs are skipped).
 */
enum SmerStatus smer_score_word(const struct SmerModel *model,
                                const char *word,
                                double *logit_out,
                                double *score_out);

/**
 * Tokenizes `text` with the default pipeline and explains it word by word.
 * Fails with `SMER_STATUS_FIDELITY` if the document logit and the mean word
 * logit disagree.
 *
 * # Safety
 * `model` is a live handle, `text` a NUL-terminated string, `out` valid.
 */
enum SmerStatus smer_explain(const struct SmerModel *model,
                             const char *text,
                             struct SmerExplanation **out);

/**
 * # Safety
 * `expl` is null or a handle from `smer_explain` not yet freed.
 */
void smer_explanation_free(struct SmerExplanation *expl);

/**
 * Number of in-vocabulary tokens, or 0 for a null handle.
 *
 * # Safety
 * `expl` is null or a live handle.
 */
size_t smer_explanation_len(const struct SmerExplanation *expl);

/**
 * Document probability, or NaN for a null handle.
 *
 * # Safety
 * `expl` is null or a live handle.
 */
double smer_explanation_doc_score(const struct SmerExplanation *expl);

/**
 * Document logit, or NaN for a null handle.
 *
 * # Safety
 * `expl` is null or a live handle.
 */
double smer_explanation_doc_logit(const struct SmerExplanation *expl);

/**
 * Token `index` of an explanation. `word_out` receives a pointer owned by
 * the explanation, valid until it is freed.
 *
 * # Safety
 * `expl` is a live handle; output pointers are valid or null.
 */
enum SmerStatus smer_explanation_token(const struct SmerExplanation *expl,
                                       size_t index,
                                       const char **word_out,
                                       double *logit_out,
                                       double *score_out);

/**
 * ROC-AUC of `n` scores against 0/1 labels; ties count one half.
 *
 * # Safety
 * `scores` and `labels` point to `n` readable elements; `out` is valid.
 */
enum SmerStatus smer_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SMER_H */
