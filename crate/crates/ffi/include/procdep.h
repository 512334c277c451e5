#ifndef PROCDEP_H
#define PROCDEP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every call.
 */
typedef enum ProcdepStatus {
  PROCDEP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PROCDEP_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  PROCDEP_STATUS_INVALID_UTF8 = 2,
  PROCDEP_STATUS_IO = 3,
  PROCDEP_STATUS_PARSE = 4,
  /**
   * Annotations violate the existence automaton or reference unknown
   * entities or steps.
   */
  PROCDEP_STATUS_VALIDATION = 5,
  /**
   * Hyperparameters out of range.
   */
  PROCDEP_STATUS_CONFIG = 6,
  /**
   * Prediction and gold corpora hold different process ids.
   */
  PROCDEP_STATUS_MISMATCH = 7,
  /**
   * An index or enum value is out of range.
   */
  PROCDEP_STATUS_OUT_OF_RANGE = 8,
  /**
   * Internal panic; the message holds the panic payload.
   */
  PROCDEP_STATUS_PANIC = 9,
} ProcdepStatus;

/**
 * Existence of an entity, as folded over a matrix column.
 */
typedef enum ProcdepExistence {
  PROCDEP_EXISTENCE_UNKNOWN = 0,
  PROCDEP_EXISTENCE_EXISTS = 1,
  PROCDEP_EXISTENCE_DESTROYED = 2,
} ProcdepExistence;

typedef enum ProcdepChangeKind {
  PROCDEP_CHANGE_KIND_CREATE = 0,
  PROCDEP_CHANGE_KIND_MOVE = 1,
  PROCDEP_CHANGE_KIND_DESTROY = 2,
  PROCDEP_CHANGE_KIND_NONE = 3,
} ProcdepChangeKind;

/**
 * A loaded corpus.
 */
typedef struct ProcdepCorpus ProcdepCorpus;

/**
 * Logit provider, topic priors and edge scores used by the decoder.
 */
typedef struct ProcdepResources ProcdepResources;

/**
 * One decoded process.
 */
typedef struct ProcdepResult ProcdepResult;

typedef struct ProcdepDecoderConfig {
  double lambda;
  double alpha;
  double beta;
  double c;
  uintptr_t beam_width;
  uintptr_t candidate_cap;
  bool use_g_edge;
  bool use_g_kb;
} ProcdepDecoderConfig;

/**
 * Overall scores of one evaluation task.
 */
typedef struct ProcdepScores {
  double precision;
  double recall;
  double f1;
  uintptr_t matched;
  uintptr_t predicted;
  uintptr_t gold;
} ProcdepScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *procdep_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void procdep_string_free(char *s);

struct ProcdepDecoderConfig procdep_decoder_config_default(void);

/**
 * Loads a JSONL corpus (or a grid `.tsv`) and validates its annotations.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum ProcdepStatus procdep_corpus_load(const char *path, struct ProcdepCorpus **out);

/**
 * Number of processes, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
uintptr_t procdep_corpus_len(const struct ProcdepCorpus *corpus);

/**
 * Id of the process at `index`, as a string owned by the caller.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum ProcdepStatus procdep_corpus_process_id(const struct ProcdepCorpus *corpus,
                                             uintptr_t index,
                                             char **out);

/**
 * # Safety
 * `corpus` must be null or a handle not yet freed.
 */
void procdep_corpus_free(struct ProcdepCorpus *corpus);

/**
 * Builds decoding resources. Each path may be null: no `logits` selects
 * the lexical provider, no `priors` an empty table and no `edge_scores` a
 * constant score for every edge.
 *
 * # Safety
 * Non-null paths must be NUL-terminated strings; `out` must be writable.
 */
enum ProcdepStatus procdep_resources_new(const char *logits,
                                         const char *priors,
                                         const char *edge_scores,
                                         struct ProcdepResources **out);

/**
 * # Safety
 * `resources` must be null or a handle not yet freed.
 */
void procdep_resources_free(struct ProcdepResources *resources);

/**
 * Decodes the process at `index`. A null `config` uses the defaults.
 *
 * # Safety
 * Handles must be live; `config` must be null or readable; `out` must be
 * writable.
 */
enum ProcdepStatus procdep_decode(const struct ProcdepCorpus *corpus,
                                  uintptr_t index,
                                  const struct ProcdepResources *resources,
                                  const struct ProcdepDecoderConfig *config,
                                  struct ProcdepResult **out);

/**
 * Total score of the decoded path, or NaN for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
double procdep_result_score(const struct ProcdepResult *result);

/**
 * The decoded process as one canonical JSONL record, with the predicted
 * matrix and graph in the gold fields.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum ProcdepStatus procdep_result_to_json(const struct ProcdepResult *result, char **out);

/**
 * The decoded dependency graph in Graphviz format.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
enum ProcdepStatus procdep_result_dot(const struct ProcdepResult *result, char **out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void procdep_result_free(struct ProcdepResult *result);

/**
 * Dependency graph derived from the gold matrix of the process at `index`,
 * as a JSON array of edges.
 *
 * # Safety
 * `corpus` must be a live handle; `out` must be writable.
 */
enum ProcdepStatus procdep_derive_graph_json(const struct ProcdepCorpus *corpus,
                                             uintptr_t index,
                                             char **out);

/**
 * Scores predictions against gold annotations. Either output pointer may
 * be null to skip that task. `report_json`, when non-null, receives both
 * reports with per-category and per-process detail.
 *
 * # Safety
 * Paths must be NUL-terminated strings; non-null outputs must be writable.
 */
enum ProcdepStatus procdep_eval(const char *pred,
                                const char *gold,
                                bool macro_average,
                                struct ProcdepScores *dependency,
                                struct ProcdepScores *state_change,
                                char **report_json);

/**
 * Existence after applying `change` in `state`, both given as the integer
 * values of [`ProcdepExistence`] and [`ProcdepChangeKind`]. Inconsistent
 * transitions return `Validation`; unknown values return `OutOfRange`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ProcdepStatus procdep_apply_change(uint32_t state,
                                        uint32_t change,
                                        enum ProcdepExistence *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROCDEP_H */
