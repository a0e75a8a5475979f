#ifndef CHEMPAT_H
#define CHEMPAT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ChempatStatus {
  CHEMPAT_STATUS_OK = 0,
  CHEMPAT_STATUS_NULL_ARGUMENT = 1,
  CHEMPAT_STATUS_INVALID_UTF8 = 2,
  CHEMPAT_STATUS_IO = 3,
  CHEMPAT_STATUS_PARSE = 4,
  CHEMPAT_STATUS_INVALID_ARGUMENT = 5,
  CHEMPAT_STATUS_NUMERICAL = 6,
  CHEMPAT_STATUS_PANIC = 7,
} ChempatStatus;

typedef enum ChempatMatchMode {
  CHEMPAT_MATCH_MODE_EXACT = 0,
  CHEMPAT_MATCH_MODE_RELAXED = 1,
} ChempatMatchMode;

// Opaque corpus handle.
typedef struct ChempatCorpus ChempatCorpus;

// Opaque CRF model handle.
typedef struct ChempatModel ChempatModel;

// Micro-averaged counts and scores.
typedef struct ChempatMetrics {
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  double precision;
  double recall;
  double f1;
} ChempatMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string. Do not free.
const char *chempat_version(void);

// Copy of the last error message on this thread, or NULL after a
// successful call. Free with `chempat_string_free`.
char *chempat_last_error(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void chempat_string_free(char *s);

// Loads a BRAT directory of paired `.txt`/`.ann` files.
//
// # Safety
// `dir` must be a NUL-terminated string; `out` must be writable.
enum ChempatStatus chempat_corpus_load(const char *dir, struct ChempatCorpus **out);

// Loads `.ann` files from `dir`, reading texts from `reference`.
//
// # Safety
// Pointers must be valid; `reference` must be a live corpus handle.
enum ChempatStatus chempat_corpus_load_predictions(const char *dir,
                                                   const struct ChempatCorpus *reference,
                                                   struct ChempatCorpus **out);

// Writes `.ann` files (and `.txt` files when `with_text` is true).
//
// # Safety
// Pointers must be valid.
enum ChempatStatus chempat_corpus_write(const struct ChempatCorpus *corpus,
                                        const char *dir,
                                        bool with_text);

// # Safety
// `corpus` must be NULL or a handle not yet freed.
void chempat_corpus_free(struct ChempatCorpus *corpus);

// Number of documents; 0 for NULL.
//
// # Safety
// `corpus` must be NULL or a live handle.
size_t chempat_corpus_len(const struct ChempatCorpus *corpus);

// Number of entities over all documents; 0 for NULL.
//
// # Safety
// `corpus` must be NULL or a live handle.
size_t chempat_corpus_entity_count(const struct ChempatCorpus *corpus);

// Parses `ann` against `text` and writes its canonical serialization.
//
// # Safety
// Strings must be NUL-terminated; `out` must be writable.
enum ChempatStatus chempat_ann_canonicalize(const char *ann, const char *text, char **out);

// Overall micro-averaged metrics of `pred` against `gold`.
//
// # Safety
// Handles must be live; `out` must be writable.
enum ChempatStatus chempat_evaluate(const struct ChempatCorpus *gold,
                                    const struct ChempatCorpus *pred,
                                    enum ChempatMatchMode mode,
                                    struct ChempatMetrics *out);

// Per-type metrics TSV for both match modes.
//
// # Safety
// Handles must be live; `out` must be writable.
enum ChempatStatus chempat_evaluate_report(const struct ChempatCorpus *gold,
                                           const struct ChempatCorpus *pred,
                                           char **out);

// Majority vote over `n` prediction corpora named by `names`. `min_votes`
// of 0 selects strict majority; otherwise at least `min_votes` members must
// agree.
//
// # Safety
// `sets` and `names` must each point to `n` valid entries.
enum ChempatStatus chempat_vote(const struct ChempatCorpus *const *sets,
                                const char *const *names,
                                size_t n,
                                size_t min_votes,
                                struct ChempatCorpus **out);

// Trains a CRF. Non-positive `max_iterations` or `tolerance` select the
// defaults (200 and 1e-6).
//
// # Safety
// `corpus` must be live; `out` must be writable.
enum ChempatStatus chempat_model_train(const struct ChempatCorpus *corpus,
                                       double l2,
                                       int64_t max_iterations,
                                       double tolerance,
                                       struct ChempatModel **out);

// # Safety
// `path` must be NUL-terminated; `out` must be writable.
enum ChempatStatus chempat_model_load(const char *path, struct ChempatModel **out);

// # Safety
// `model` must be live; `path` NUL-terminated.
enum ChempatStatus chempat_model_save(const struct ChempatModel *model, const char *path);

// Tags every document text of `texts`, ignoring its existing entities.
//
// # Safety
// Handles must be live; `out` must be writable.
enum ChempatStatus chempat_model_tag(const struct ChempatModel *model,
                                     const struct ChempatCorpus *texts,
                                     struct ChempatCorpus **out);

// # Safety
// `model` must be NULL or a handle not yet freed.
void chempat_model_free(struct ChempatModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHEMPAT_H */
